#include "tds/compact_fd.hpp"

#include "tds/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace tds {

std::array<double, 5> CompactScheme::rhs_weights() const noexcept {
    if (derivative_order == 1) {
        return {-b_w / (4.0 * h), -a_w / (2.0 * h), 0.0, a_w / (2.0 * h), b_w / (4.0 * h)};
    }
    const double h2 = h * h;
    const double outer = b_w / (4.0 * h2);
    const double inner = a_w / h2;
    return {outer, inner, -2.0 * inner - 2.0 * outer, inner, outer};
}

CompactScheme sixth_order_first_derivative(double h) {
    if (!(h > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "grid spacing must be positive");
    }
    return {1, 1.0 / 3.0, 14.0 / 9.0, 1.0 / 9.0, 6, h};
}

CompactScheme second_derivative_scheme(double h) {
    if (!(h > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "grid spacing must be positive");
    }
    return {2, 2.0 / 11.0, 12.0 / 11.0, 3.0 / 11.0, 6, h};
}

CompactOperator assemble(const CompactScheme& scheme, std::size_t n, bool periodic, BoundaryClosure closure) {
    if (n < 5) {
        throw Error(ErrorKind::InvalidArgument, "compact operators need at least 5 points");
    }
    if (scheme.derivative_order != 1 && scheme.derivative_order != 2) {
        throw Error(ErrorKind::InvalidArgument, "only first and second derivatives are supported");
    }
    std::vector<double> lo(n, scheme.alpha), di(n, 1.0), up(n, scheme.alpha);
    StencilCoeffs stencil;
    stencil.rows.assign(n, scheme.rhs_weights());
    if (periodic) {
        return {TridiagonalSystem(std::move(lo), std::move(di), std::move(up), true), std::move(stencil)};
    }

    const double h = scheme.h;
    std::array<double, 5> edge{};
    std::array<double, 5> near{};
    double edge_alpha = 0.0;
    double near_alpha = 0.0;
    if (scheme.derivative_order == 1) {
        if (closure == BoundaryClosure::Dominant) {
            edge = {0.0, 0.0, -1.5 / h, 2.0 / h, -0.5 / h};
            edge_alpha = 0.0;
        } else {
            edge = {0.0, 0.0, -2.5 / h, 2.0 / h, 0.5 / h};
            edge_alpha = 2.0;
        }
        near = {0.0, -0.75 / h, 0.0, 0.75 / h, 0.0};
        near_alpha = 0.25;
    } else {
        if (closure != BoundaryClosure::Dominant) {
            throw Error(ErrorKind::InvalidArgument, "third-order closure is defined for first derivatives only");
        }
        const double h2 = h * h;
        edge = {0.0, 0.0, 1.0 / h2, -2.0 / h2, 1.0 / h2};
        edge_alpha = 0.0;
        const double k = 1.2 / h2;
        near = {0.0, k, -2.0 * k, k, 0.0};
        near_alpha = 0.1;
    }
    // Mirror image for the far end: odd derivatives flip sign.
    const double parity = scheme.derivative_order == 1 ? -1.0 : 1.0;
    auto mirrored = [parity](const std::array<double, 5>& w) {
        return std::array<double, 5>{parity * w[4], parity * w[3], parity * w[2], parity * w[1], parity * w[0]};
    };

    stencil.rows[0] = edge;
    stencil.rows[1] = near;
    stencil.rows[n - 2] = mirrored(near);
    stencil.rows[n - 1] = mirrored(edge);
    lo[0] = 0.0;
    up[0] = edge_alpha;
    lo[1] = near_alpha;
    up[1] = near_alpha;
    lo[n - 2] = near_alpha;
    up[n - 2] = near_alpha;
    lo[n - 1] = edge_alpha;
    up[n - 1] = 0.0;
    return {TridiagonalSystem(std::move(lo), std::move(di), std::move(up), false), std::move(stencil)};
}

std::vector<double> differentiate(const CompactOperator& op, std::span<const double> u, DerivativeSolver solver,
                                  std::size_t ranks) {
    const bool periodic = op.system.periodic();
    switch (solver) {
    case DerivativeSolver::Thomas: {
        const auto rhs = RhsBatch::single(op.stencil.apply(u, periodic));
        const auto sol = periodic ? periodic_thomas_solve(op.system, rhs) : thomas_solve(op.system, rhs);
        return {sol.values().begin(), sol.values().end()};
    }
    case DerivativeSolver::Dense: {
        const auto sol = dense_solve_oracle(op.system, RhsBatch::single(op.stencil.apply(u, periodic)));
        return {sol.values().begin(), sol.values().end()};
    }
    case DerivativeSolver::DistD2:
        return distd2_solve_line(op.system, op.stencil, u, SubdomainPartition::even(u.size(), ranks));
    }
    throw Error(ErrorKind::InvalidArgument, "unknown solver");
}

TestFunction sine_test_function(int derivative_order) {
    if (derivative_order == 1) {
        return {[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }};
    }
    return {[](double x) { return std::sin(x); }, [](double x) { return -std::sin(x); }};
}

double fitted_order(std::span<const std::size_t> n, std::span<const double> error) {
    const double floor = 100.0 * std::numeric_limits<double>::epsilon();
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < std::min(n.size(), error.size()); ++i) {
        if (error[i] > floor) {
            xs.push_back(std::log(static_cast<double>(n[i])));
            ys.push_back(std::log(error[i]));
        }
    }
    if (xs.size() < 2) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double m = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / m;
    const double my = sy / m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return -sxy / sxx;
}

AccuracyReport order_of_accuracy(const std::function<CompactScheme(double)>& make_scheme, DerivativeSolver solver,
                                 std::span<const std::size_t> n_list, std::size_t ranks, const TestFunction* fn) {
    AccuracyReport report;
    for (const std::size_t n : n_list) {
        const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
        const CompactScheme scheme = make_scheme(h);
        const TestFunction f = fn ? *fn : sine_test_function(scheme.derivative_order);
        const auto op = assemble(scheme, n, true);
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = f.value(static_cast<double>(i) * h);
        }
        const auto du = differentiate(op, u, solver, ranks);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            err = std::max(err, std::abs(du[i] - f.derivative(static_cast<double>(i) * h)));
        }
        report.n.push_back(n);
        report.error.push_back(err);
    }
    report.slope = fitted_order(report.n, report.error);
    return report;
}

} // namespace tds
