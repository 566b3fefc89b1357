#include "test_support.hpp"

#include "tds/compact_fd.hpp"
#include "tds/pde.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace tds;
using tds::test::max_abs;
using tds::test::rel_diff;

namespace {

using Init = std::array<std::function<double(double, double, double)>, 3>;

double max_rel_vs_reference(const VelocityField& vf, std::size_t ranks) {
    const auto fused = evaluate_transport_rhs(vf, nullptr, ranks);
    const std::array<CartesianField, 3> cart{unpack(vf.u[0]), unpack(vf.u[1]), unpack(vf.u[2])};
    const auto ref = reference_transport_rhs(cart, vf.nu, vf.h);
    double worst = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        worst = std::max(worst, rel_diff(unpack(fused[c]).data(), ref[c].data()));
    }
    return worst;
}

Init trig_init() {
    return {[](double x, double y, double z) { return std::sin(x) * std::cos(y) + 0.3 * std::cos(z); },
            [](double x, double y, double z) { return std::cos(x + 2.0 * z) - 0.5 * std::sin(y); },
            [](double x, double y, double z) { return std::sin(x + y) * std::cos(z); }};
}

} // namespace

TEST_CASE("traffic of a movement") {
    const Movement m{2.0, 3.0, 1.0};
    CHECK(traffic(m, false) == 2.0 + 3.0 + 2.0);
    CHECK(traffic(m, true) == 2.0 + 6.0 + 2.0);
    CHECK((Movement{1, 2, 3} + Movement{4, 5, 6}) == Movement{5, 7, 9});
    CHECK((2.0 * Movement{1, 2, 3}) == Movement{2, 4, 6});
}

TEST_CASE("ledger totals for both movement profiles") {
    for (auto [profile, total, reorder] : {std::tuple{gpu_fusion_profile(), 171.0, 12.0},
                                           std::tuple{cpu_blocking_profile(), 150.0, 18.0}}) {
        MovementLedger ledger(profile);
        CHECK(ledger.empty());
        CHECK(reorder_cost_fraction(ledger) == 0.0);
        for (int k = 0; k < 6; ++k) {
            ledger.record(TransportKernel::AbstractOffDiagonal, 2);
            ledger.record(TransportKernel::Reorder, 1);
            ledger.record(TransportKernel::Accumulate, 1);
        }
        for (int k = 0; k < 3; ++k) {
            ledger.record(TransportKernel::AbstractDiagonal, 1);
        }
        CHECK(ledger.total() == total);
        CHECK(ledger.total(TransportKernel::Reorder) == reorder);
        CHECK(reorder_cost_fraction(ledger) == doctest::Approx(reorder / total));
        // Sum over kernels of calls times per-call traffic.
        double by_hand = 0.0;
        for (auto k : {TransportKernel::AbstractOffDiagonal, TransportKernel::AbstractDiagonal,
                       TransportKernel::Reorder, TransportKernel::Accumulate}) {
            by_hand += static_cast<double>(ledger.calls(k)) *
                       traffic(profile.per_call[static_cast<std::size_t>(k)], profile.write_allocate);
        }
        CHECK(by_hand == total);
    }
    CHECK(std::round(1000.0 * 12.0 / 171.0) / 10.0 == 7.0);
    CHECK(std::round(1000.0 * 18.0 / 150.0) / 10.0 == 12.0);
}

TEST_CASE("transport right-hand side: kernel counts and zero for constants") {
    const Init consts{[](double, double, double) { return 1.5; }, [](double, double, double) { return -0.5; },
                      [](double, double, double) { return 2.0; }};
    const auto vf = make_velocity_field(16, 8, 0.02, consts);
    MovementLedger ledger;
    const auto rhs = evaluate_transport_rhs(vf, &ledger);
    CHECK(ledger.calls(TransportKernel::AbstractOffDiagonal) == 6);
    CHECK(ledger.calls(TransportKernel::AbstractDiagonal) == 3);
    CHECK(ledger.calls(TransportKernel::Reorder) == 6);
    CHECK(ledger.calls(TransportKernel::Accumulate) == 6);
    CHECK(ledger.inputs_read(TransportKernel::AbstractOffDiagonal) == 12);
    CHECK(ledger.inputs_read(TransportKernel::AbstractDiagonal) == 3);
    CHECK(ledger.total() == 171.0);
    for (const auto& r : rhs) {
        CHECK(r.layout().direction() == Direction::X);
        CHECK(max_abs(r.data()) < 1e-12);
    }
}

TEST_CASE("single kernel on a sine wave matches the discrete and closed forms") {
    const double nu = 0.05;
    for (std::size_t n : {64u, 128u}) {
        const auto vf = make_velocity_field(n, 8, nu,
                                            {[](double x, double, double) { return std::sin(x); },
                                             [](double, double, double) { return 0.0; },
                                             [](double, double, double) { return 0.0; }});
        const auto out = directional_contribution(0, Direction::X, vf.u, nu, vf.h, nullptr, 2);
        // Fourier symbols of the two compact operators, from their weights.
        const auto w1 = sixth_order_first_derivative(vf.h);
        const auto w2 = second_derivative_scheme(vf.h);
        auto first_symbol = [&](double k) {
            const auto w = w1.rhs_weights();
            const double num = w[3] * std::sin(k * vf.h) * 2.0 + w[4] * std::sin(2.0 * k * vf.h) * 2.0;
            return num / (1.0 + 2.0 * w1.alpha * std::cos(k * vf.h));
        };
        auto second_symbol = [&](double k) {
            const auto w = w2.rhs_weights();
            const double num = w[2] + 2.0 * w[3] * std::cos(k * vf.h) + 2.0 * w[4] * std::cos(2.0 * k * vf.h);
            return num / (1.0 + 2.0 * w2.alpha * std::cos(k * vf.h));
        };
        double err_discrete = 0.0, err_exact = 0.0;
        for (std::size_t k = 0; k < n; k += 7) {
            for (std::size_t j = 0; j < n; j += 5) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double x = static_cast<double>(i) * vf.h;
                    // sin^2 x = (1 - cos 2x) / 2, so its derivative symbol acts at wavenumber 2.
                    const double discrete = -0.5 * (std::sin(x) * first_symbol(1.0) * std::cos(x) +
                                                    0.5 * first_symbol(2.0) * std::sin(2.0 * x)) +
                                            nu * second_symbol(1.0) * std::sin(x);
                    const double exact = -1.5 * std::sin(x) * std::cos(x) - nu * std::sin(x);
                    err_discrete = std::max(err_discrete, std::abs(out.at(i, j, k) - discrete));
                    err_exact = std::max(err_exact, std::abs(out.at(i, j, k) - exact));
                }
            }
        }
        CHECK(err_discrete < 1e-12);
        if (n == 128) {
            CHECK(err_exact < 1e-8);
        }
    }
}

TEST_CASE("fused pipeline against the Cartesian reference") {
    for (std::size_t n : {16u, 32u}) {
        CHECK(max_rel_vs_reference(make_velocity_field(n, 8, 0.01, trig_init()), 1) < 1e-12);
    }
    // Two slices of 16 drop a coupling of about 5e-7; 32-point slices do not.
    CHECK(max_rel_vs_reference(make_velocity_field(32, 8, 0.01, trig_init()), 2) < 1e-5);
    CHECK(max_rel_vs_reference(make_velocity_field(64, 8, 0.01, trig_init()), 2) < 1e-12);
}

TEST_CASE("skew form conserves energy without viscosity") {
    const Init solenoidal{[](double x, double y, double) { return std::sin(x) * std::cos(y); },
                          [](double x, double y, double) { return -std::cos(x) * std::sin(y); },
                          [](double, double, double) { return 0.0; }};
    const auto vf = make_velocity_field(32, 8, 0.0, solenoidal);
    const auto rhs = evaluate_transport_rhs(vf);
    double production = 0.0, energy = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t p = 0; p < vf.u[c].data().size(); ++p) {
            production += vf.u[c].data()[p] * rhs[c].data()[p];
            energy += vf.u[c].data()[p] * vf.u[c].data()[p];
        }
    }
    CHECK(std::abs(production) <= 1e-10 * energy);
}

TEST_CASE("viscous part is linear in the viscosity") {
    auto rhs_for = [](double nu) { return evaluate_transport_rhs(make_velocity_field(16, 8, nu, trig_init())); };
    const auto r0 = rhs_for(0.0);
    const auto r1 = rhs_for(1.0);
    const auto r3 = rhs_for(0.3);
    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<double> lhs(r0[c].data().size()), rhs(lhs.size());
        for (std::size_t p = 0; p < lhs.size(); ++p) {
            lhs[p] = r3[c].data()[p] - r0[c].data()[p];
            rhs[p] = 0.3 * (r1[c].data()[p] - r0[c].data()[p]);
        }
        CHECK(rel_diff(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("accumulate adds by grid coordinate across layouts") {
    std::mt19937_64 rng(2);
    const std::size_t n = 8;
    CartesianField a(n, n, n, test::random_vector(n * n * n, rng));
    CartesianField b(n, n, n, test::random_vector(n * n * n, rng));
    auto into = pack(a, LayoutDescriptor(n, n, n, 4, Direction::X));
    const auto from = pack(b, LayoutDescriptor(n, n, n, 4, Direction::Z));
    accumulate(into, from);
    const auto sum = unpack(into);
    for (std::size_t p = 0; p < sum.data().size(); ++p) {
        CHECK(sum.data()[p] == a.data()[p] + b.data()[p]);
    }
}

TEST_CASE("euler step") {
    const auto vf = make_velocity_field(16, 8, 0.01, trig_init());
    const auto same = euler_step(vf, 0.0);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(same.u[c] == vf.u[c]);
    }
    const auto next = euler_step(vf, 1e-3);
    const auto rhs = evaluate_transport_rhs(vf);
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t p = 0; p < vf.u[c].data().size(); p += 97) {
            CHECK(next.u[c].data()[p] == doctest::Approx(vf.u[c].data()[p] + 1e-3 * rhs[c].data()[p]));
        }
    }
}
