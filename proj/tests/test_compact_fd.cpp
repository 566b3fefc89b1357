#include "test_support.hpp"

#include "tds/compact_fd.hpp"
#include "tds/error.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace tds;
using tds::test::max_abs;
using tds::test::max_abs_diff;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> sample(std::size_t n, double h, const std::function<double(double)>& f) {
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = f(static_cast<double>(i) * h);
    }
    return u;
}

} // namespace

TEST_CASE("sixth-order first derivative coefficients and weights") {
    const auto s = sixth_order_first_derivative(0.25);
    CHECK(s.alpha == doctest::Approx(1.0 / 3.0).epsilon(1e-16));
    CHECK(s.a_w == doctest::Approx(14.0 / 9.0).epsilon(1e-16));
    CHECK(s.b_w == doctest::Approx(1.0 / 9.0).epsilon(1e-16));
    CHECK(s.formal_order == 6);
    CHECK(1.0 > 2.0 * s.alpha);
    const auto w = s.rhs_weights();
    CHECK(w[0] + w[1] + w[2] + w[3] + w[4] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(w[0] == -w[4]);
    CHECK(w[1] == -w[3]);
    CHECK(w[2] == 0.0);
    CHECK(w[3] == doctest::Approx(14.0 / 9.0 / (2.0 * 0.25)));
    CHECK(w[4] == doctest::Approx(1.0 / 9.0 / (4.0 * 0.25)));
}

TEST_CASE("second derivative weights are symmetric and kill linears") {
    const auto s = second_derivative_scheme(0.1);
    CHECK(s.alpha == doctest::Approx(2.0 / 11.0));
    CHECK(s.a_w == doctest::Approx(12.0 / 11.0));
    CHECK(s.b_w == doctest::Approx(3.0 / 11.0));
    const auto w = s.rhs_weights();
    CHECK(w[0] == w[4]);
    CHECK(w[1] == w[3]);
    const double sum = w[0] + w[1] + w[2] + w[3] + w[4];
    const double moment = -2.0 * w[0] - w[1] + w[3] + 2.0 * w[4];
    CHECK(std::abs(sum) <= 1e-12 * std::abs(w[2]));
    CHECK(std::abs(moment) <= 1e-12 * std::abs(w[2]));
}

TEST_CASE("interior relation is exact on polynomials up to degree six") {
    // alpha p'(x-h) + p'(x) + alpha p'(x+h) == sum_k w_k p(x + k h) for monomials.
    const double h = 0.5;
    for (const auto& scheme : {sixth_order_first_derivative(h), second_derivative_scheme(h)}) {
        const auto w = scheme.rhs_weights();
        for (int deg = 0; deg <= 6; ++deg) {
            auto p = [deg](double x) { return std::pow(x, deg); };
            auto dp = [deg, &scheme](double x) {
                if (scheme.derivative_order == 1) {
                    return deg == 0 ? 0.0 : deg * std::pow(x, deg - 1);
                }
                return deg < 2 ? 0.0 : deg * (deg - 1) * std::pow(x, deg - 2);
            };
            const double x = 0.3;
            const double lhs = scheme.alpha * dp(x - h) + dp(x) + scheme.alpha * dp(x + h);
            double rhs = 0.0;
            for (int k = -2; k <= 2; ++k) {
                rhs += w[static_cast<std::size_t>(k + 2)] * p(x + k * h);
            }
            CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
        }
    }
}

TEST_CASE("periodic assembly") {
    const auto op = assemble(sixth_order_first_derivative(kTwoPi / 64), 64, true);
    for (std::size_t i = 0; i < 64; ++i) {
        CHECK(op.system.lower()[i] == doctest::Approx(1.0 / 3.0));
        CHECK(op.system.upper()[i] == doctest::Approx(1.0 / 3.0));
        CHECK(op.system.diag()[i] == 1.0);
    }
    CHECK(dominance_margin(op.system) == doctest::Approx(1.0 / 3.0));
    CHECK(op.stencil.halo_depth == 2);
    CHECK_THROWS_AS((void)assemble(sixth_order_first_derivative(1.0), 4, true), Error);
    CHECK_THROWS_AS((void)assemble(second_derivative_scheme(1.0), 16, false, BoundaryClosure::ThirdOrder), Error);
}

TEST_CASE("non-periodic closures are exact on low-degree polynomials") {
    const std::size_t n = 24;
    const double h = 1.0 / static_cast<double>(n - 1);
    auto cubic = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x; };
    auto dcubic = [](double x) { return -2.0 + x + 9.0 * x * x; };
    auto quad = [](double x) { return 0.7 + 1.3 * x - 2.0 * x * x; };
    auto dquad = [](double x) { return 1.3 - 4.0 * x; };
    auto d2quad = [](double) { return -4.0; };

    const auto third = assemble(sixth_order_first_derivative(h), n, false, BoundaryClosure::ThirdOrder);
    const auto du = differentiate(third, sample(n, h, cubic), DerivativeSolver::Thomas);
    CHECK(max_abs_diff(du, sample(n, h, dcubic)) < 1e-11);

    const auto dom = assemble(sixth_order_first_derivative(h), n, false);
    CHECK(is_diagonally_dominant(dom.system));
    const auto dq = differentiate(dom, sample(n, h, quad), DerivativeSolver::Dense);
    CHECK(max_abs_diff(dq, sample(n, h, dquad)) < 1e-11);

    const auto dom2 = assemble(second_derivative_scheme(h), n, false);
    CHECK(is_diagonally_dominant(dom2.system));
    const auto d2q = differentiate(dom2, sample(n, h, quad), DerivativeSolver::Thomas);
    CHECK(max_abs_diff(d2q, sample(n, h, d2quad)) < 1e-8);
}

TEST_CASE("assembled dominant operators are always diagonally dominant") {
    for (std::size_t n : {5u, 6u, 17u, 64u, 300u}) {
        for (bool periodic : {false, true}) {
            const double h = 1.0 / static_cast<double>(n);
            CHECK(is_diagonally_dominant(assemble(sixth_order_first_derivative(h), n, periodic).system));
            CHECK(is_diagonally_dominant(assemble(second_derivative_scheme(h), n, periodic).system));
        }
    }
}

TEST_CASE("solvers agree and constants differentiate to zero") {
    const std::size_t n = 48;
    const double h = kTwoPi / n;
    const auto op = assemble(sixth_order_first_derivative(h), n, true);
    const auto u = sample(n, h, [](double x) { return std::cos(2.0 * x) + 0.25 * std::sin(x); });
    const auto th = differentiate(op, u, DerivativeSolver::Thomas);
    CHECK(max_abs_diff(th, differentiate(op, u, DerivativeSolver::Dense)) < 1e-13);
    CHECK(max_abs_diff(th, differentiate(op, u, DerivativeSolver::DistD2, 1)) < 1e-13);

    const std::vector<double> c(n, 4.5);
    for (auto solver : {DerivativeSolver::Thomas, DerivativeSolver::DistD2}) {
        CHECK(max_abs(differentiate(op, c, solver, 2)) <= 10.0 * std::numeric_limits<double>::epsilon());
    }
}

TEST_CASE("trigonometric fields converge to rounding level") {
    const std::size_t n = 1024;
    const double h = kTwoPi / n;
    const auto op = assemble(sixth_order_first_derivative(h), n, true);
    const auto u = sample(n, h, [](double x) { return std::sin(x) + 0.5 * std::cos(2.0 * x); });
    const auto du = differentiate(op, u, DerivativeSolver::Thomas);
    // Rounding in the right-hand side grows like eps / h.
    const double floor = 10.0 * std::numeric_limits<double>::epsilon() / h;
    CHECK(max_abs_diff(du, sample(n, h, [](double x) { return std::cos(x) - std::sin(2.0 * x); })) < floor);
}

TEST_CASE("fitted order") {
    const std::vector<std::size_t> n{32, 64, 128, 256};
    std::vector<double> e;
    for (auto k : n) {
        e.push_back(3.0 * std::pow(static_cast<double>(k), -6.0));
    }
    CHECK(fitted_order(n, e) == doctest::Approx(6.0).epsilon(1e-12));
    // Points at the rounding floor are ignored.
    e[3] = 1e-15;
    CHECK(fitted_order(n, e) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(std::isnan(fitted_order(std::vector<std::size_t>{32}, std::vector<double>{1e-3})));
}

TEST_CASE("order of accuracy of the sixth-order scheme") {
    const std::vector<std::size_t> n{32, 64, 128, 256};
    const auto th = order_of_accuracy(sixth_order_first_derivative, DerivativeSolver::Thomas, n);
    CHECK(th.slope == doctest::Approx(6.0).epsilon(0.2 / 6.0));
    for (std::size_t k = 0; k + 1 < n.size(); ++k) {
        const double ratio = th.error[k + 1] / th.error[k];
        CHECK(ratio >= 0.7 / 64.0);
        CHECK(ratio <= 1.4 / 64.0);
    }

    const auto dist = order_of_accuracy(sixth_order_first_derivative, DerivativeSolver::DistD2, n, 2);
    for (std::size_t k = 0; k < n.size(); ++k) {
        // Two ranks split each line in half; the splitting error is set by the
        // coupling that preprocessing drops on a half-length slice.
        const double h = kTwoPi / static_cast<double>(n[k]);
        const auto op = assemble(sixth_order_first_derivative(h), n[k], true);
        const auto co = preprocess(op.system.slice(0, n[k] / 2), SubdomainPosition::First, true);
        CHECK(std::abs(dist.error[k] - th.error[k]) <= 1e-14 + 10.0 * co.dropped_coupling());
        if (n[k] >= 128) {
            CHECK(std::abs(dist.error[k] - th.error[k]) <= 1e-14);
        }
    }
}

TEST_CASE("second derivative converges at least at fourth order") {
    const std::vector<std::size_t> n{32, 64, 128};
    const auto fn = sine_test_function(2);
    const auto rep = order_of_accuracy(second_derivative_scheme, DerivativeSolver::Thomas, n, 1, &fn);
    CHECK(rep.slope >= 4.0);
}
