#include "test_support.hpp"

#include "tds/compact_fd.hpp"
#include "tds/distd2.hpp"
#include "tds/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <cmath>
#include <numbers>

using namespace tds;
using tds::test::max_abs;
using tds::test::max_abs_diff;
using tds::test::random_dominant;
using tds::test::random_vector;
using tds::test::rel_diff;

namespace {

GroupedField lines_field(std::size_t n, std::size_t sz, const std::vector<double>& values) {
    return {LayoutDescriptor(n, sz, 1, sz, Direction::X), values};
}

std::vector<double> lane(const GroupedField& f, std::size_t l) {
    std::vector<double> out(f.line_length());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = f.lanes(0, j)[l];
    }
    return out;
}

StencilCoeffs random_stencil(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> w(-1.0, 1.0);
    StencilCoeffs s;
    s.rows.resize(n);
    for (auto& row : s.rows) {
        for (auto& x : row) {
            x = w(rng);
        }
    }
    return s;
}

} // namespace

TEST_CASE("subdomain positions") {
    CHECK(position_of(0, 1) == SubdomainPosition::Sole);
    CHECK(position_of(0, 3) == SubdomainPosition::First);
    CHECK(position_of(1, 3) == SubdomainPosition::Interior);
    CHECK(position_of(2, 3) == SubdomainPosition::Last);
}

TEST_CASE("preprocess: identity slice gives the trivial coefficients") {
    const auto id = TridiagonalSystem::constant(9, 0.0, 1.0, 0.0, false);
    const auto co = preprocess(id, SubdomainPosition::Interior, false);
    for (std::size_t j = 0; j < 9; ++j) {
        CHECK(co.s_a[j] == 0.0);
        CHECK(co.s_c[j] == 0.0);
        CHECK(co.f[j] == 1.0);
        CHECK(co.w[j] == 0.0);
    }
    CHECK(co.dropped_coupling() == 0.0);
}

TEST_CASE("preprocess: argument checks") {
    const auto small = TridiagonalSystem::constant(3, 0.1, 1.0, 0.1, false);
    CHECK_THROWS_AS((void)preprocess(small, SubdomainPosition::Interior, false), Error);
    const auto weak = TridiagonalSystem::constant(8, 1.0, 1.5, 1.0, false);
    try {
        (void)preprocess(weak, SubdomainPosition::Interior, false, {1e-300, true});
        FAIL("expected NotDominant");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotDominant);
    }
    CHECK_NOTHROW((void)preprocess(weak, SubdomainPosition::Interior, false));
}

TEST_CASE("preprocess: compact slices decay below rounding") {
    const auto sys = TridiagonalSystem::constant(256, 1.0 / 3.0, 1.0, 1.0 / 3.0, true);
    const auto co64 = preprocess(sys.slice(64, 64), SubdomainPosition::Interior, true);
    CHECK(std::abs(co64.s_a[62]) < 1e-15);
    CHECK(std::abs(co64.s_c[1]) < 1e-15);
    CHECK(co64.dropped_coupling() < 1e-15);

    // Interior rows against a dense inverse of rows 1..n-2: with both edge
    // unknowns moved to the right, u_j picks up -a_1 inv[j-1][0] u_0 and
    // -c_{n-2} inv[j-1][n-3] u_{n-1}.
    const auto slice = sys.slice(64, 32);
    const auto co = preprocess(slice, SubdomainPosition::Interior, true);
    const auto inv = test::dense_inverse(TridiagonalSystem::constant(30, 1.0 / 3.0, 1.0, 1.0 / 3.0, false));
    for (std::size_t j = 1; j + 1 < 32; ++j) {
        CHECK(std::abs(co.s_a[j] - inv[j - 1][0] / 3.0) <= 1e-15 + 1e-12 * std::abs(co.s_a[j]));
        CHECK(std::abs(co.s_c[j] - inv[j - 1][29] / 3.0) <= 1e-15 + 1e-12 * std::abs(co.s_c[j]));
    }
}

TEST_CASE("rhs rows: linear data, zero weights and the compact interior weights") {
    std::vector<double> u(5);
    for (std::size_t j = 0; j < 5; ++j) {
        u[j] = 3.0 * static_cast<double>(j) + 1.0;
    }
    std::array<const double*, 5> win{&u[0], &u[1], &u[2], &u[3], &u[4]};
    double out = -1.0;
    build_rhs_row(win, {0.0, -0.5, 0.0, 0.5, 0.0}, &out, 1);
    CHECK(out == 3.0);
    build_rhs_row(win, {0.0, 0.0, 0.0, 0.0, 0.0}, &out, 1);
    CHECK(out == 0.0);

    const double h = 2.0 * std::numbers::pi / 64.0;
    const auto weights = sixth_order_first_derivative(h).rhs_weights();
    std::vector<double> s(68);
    for (std::size_t j = 0; j < s.size(); ++j) {
        s[j] = std::sin((static_cast<double>(j) - 2.0) * h);
    }
    for (std::size_t j = 2; j < 66; ++j) {
        build_rhs_row({&s[j - 2], &s[j - 1], &s[j], &s[j + 1], &s[j + 2]}, weights, &out, 1);
        // Reference in extended precision from the same rounded samples.
        const long double hl = h;
        const long double direct = (14.0L / 9.0L) * ((long double)s[j + 1] - s[j - 1]) / (2.0L * hl) +
                                   (1.0L / 9.0L) * ((long double)s[j + 2] - s[j - 2]) / (4.0L * hl);
        // Terms of size ~1/h cancel to O(1); measure against their magnitude.
        double scale = 0.0;
        for (std::size_t k = 0; k < 5; ++k) {
            scale += std::abs(weights[k] * s[j + k - 2]);
        }
        CHECK(std::abs(static_cast<double>(out - direct)) <= 1e-15 * scale);
    }
}

TEST_CASE("preprocess: long slices carry no subnormal couplings") {
    const auto sys = TridiagonalSystem::constant(4096, 1.0 / 3.0, 1.0, 1.0 / 3.0, true);
    const auto co = preprocess(sys, SubdomainPosition::Sole, true);
    for (const auto* v : {&co.s_a, &co.s_c}) {
        CHECK(std::none_of(v->begin(), v->end(), [](double x) { return std::fpclassify(x) == FP_SUBNORMAL; }));
    }
    CHECK(co.s_a[2048] == 0.0);
    CHECK(co.s_c[2048] == 0.0);
}

TEST_CASE("workspace solves repeat the allocating solve bit for bit") {
    std::mt19937_64 rng(23);
    const std::size_t n = 48, sz = 4;
    const auto sys = random_dominant(n, true, rng);
    const auto stencil = random_stencil(n, rng);
    const auto part = SubdomainPartition::even(n, 3);
    const auto a = split_along_direction(lines_field(n, sz, random_vector(n * sz, rng)), part.local_sizes());
    const auto b = split_along_direction(lines_field(n, sz, random_vector(n * sz, rng)), part.local_sizes());
    const auto ok = spawn_ranks(3, true, [&](RankContext& ctx) {
        const auto plan = make_distd2_plan(ctx, sys, stencil, part);
        const auto r = static_cast<std::size_t>(ctx.rank());
        const auto fresh_a = distd2_solve(ctx, a[r], plan);
        const auto fresh_b = distd2_solve(ctx, b[r], plan);
        Distd2Workspace ws;
        bool same = true;
        for (int k = 0; k < 2; ++k) {
            distd2_solve(ctx, a[r], plan, ws);
            same = same && *ws.solution == fresh_a;
            distd2_solve(ctx, b[r], plan, ws);
            same = same && *ws.solution == fresh_b;
        }
        return same;
    });
    CHECK(ok == std::vector<bool>{true, true, true});
}

TEST_CASE("decoupling: zero input and fused/unfused bit equality") {
    std::mt19937_64 rng(16);
    const std::size_t n = 32, sz = 4;
    const auto sys = random_dominant(n, true, rng);
    const auto stencil = random_stencil(n, rng);
    const auto part = SubdomainPartition::even(n, 2);
    const auto field = lines_field(n, sz, random_vector(n * sz, rng));
    const auto pieces = split_along_direction(field, part.local_sizes());
    const auto zero_pieces = split_along_direction(lines_field(n, sz, std::vector<double>(n * sz, 0.0)),
                                                   part.local_sizes());
    const auto ok = spawn_ranks(2, true, [&](RankContext& ctx) {
        const auto plan = make_distd2_plan(ctx, sys, stencil, part);
        const auto r = static_cast<std::size_t>(ctx.rank());
        ctx.advance_epoch();
        const auto halo = exchange_halo(ctx, pieces[r], 2);
        const auto fused = decouple_fused(halo, plan.coeffs, plan.stencil);
        const auto unfused = decouple_unfused(build_rhs(halo, plan.stencil), plan.coeffs);
        ctx.advance_epoch();
        const auto zhalo = exchange_halo(ctx, zero_pieces[r], 2);
        const auto zf = decouple_fused(zhalo, plan.coeffs, plan.stencil);
        const auto zu = decouple_unfused(build_rhs(zhalo, plan.stencil), plan.coeffs);
        const bool zero = std::all_of(zf.data().begin(), zf.data().end(), [](double v) { return v == 0.0; }) &&
                          std::all_of(zu.data().begin(), zu.data().end(), [](double v) { return v == 0.0; });
        return fused == unfused && zero;
    });
    CHECK(ok == std::vector<bool>{true, true});
}

TEST_CASE("boundary pair: decoupled and hand-eliminated cases") {
    const std::vector<double> d1{1.0, -2.0}, d2{1.0, 5.0};
    const auto free = solve_boundary_pair({d1, d2, 0.0, 0.0});
    CHECK(free.u_last_local == d1);
    CHECK(free.u_first_remote == d2);

    const std::vector<double> one{1.0};
    const auto sol = solve_boundary_pair({one, one, 0.1, 0.2});
    CHECK(sol.u_last_local[0] == doctest::Approx(0.9 / 0.98).epsilon(1e-15));
    CHECK(sol.u_first_remote[0] == doctest::Approx(0.8 / 0.98).epsilon(1e-15));
    CHECK(sol.u_last_local[0] == doctest::Approx(0.9183673469));
    CHECK(sol.u_first_remote[0] == doctest::Approx(0.8163265306));

    try {
        (void)solve_boundary_pair({one, one, 1.0, 1.0});
        FAIL("expected SingularPair");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularPair);
    }
}

TEST_CASE("substitute: vanishing couplings leave the interior alone") {
    const std::size_t n = 6, sz = 2;
    DistCoeffs co;
    co.s_a.assign(n, 0.0);
    co.s_c.assign(n, 0.0);
    co.w.assign(n, 0.0);
    co.f.assign(n, 1.0);
    co.r.assign(n, 1.0);
    std::vector<double> vals(n * sz);
    std::iota(vals.begin(), vals.end(), 1.0);
    auto d = lines_field(n, sz, vals);
    const std::vector<double> start{-1.0, -2.0}, end{-3.0, -4.0};
    substitute(d, co, start, end);
    CHECK(d.lanes(0, 0)[0] == -1.0);
    CHECK(d.lanes(0, 0)[1] == -2.0);
    CHECK(d.lanes(0, n - 1)[0] == -3.0);
    CHECK(d.lanes(0, n - 1)[1] == -4.0);
    for (std::size_t j = 1; j + 1 < n; ++j) {
        CHECK(d.lanes(0, j)[0] == vals[sz * j]);
        CHECK(d.lanes(0, j)[1] == vals[sz * j + 1]);
    }
}

TEST_CASE("end to end: two ranks against the dense oracle, identity operator") {
    std::mt19937_64 rng(64);
    const auto sys = random_dominant(64, false, rng);
    const auto d = random_vector(64, rng);
    const auto u = distd2_solve_line(sys, StencilCoeffs::identity(64), d, SubdomainPartition::even(64, 2));
    const auto ref = dense_solve_oracle(sys, RhsBatch::single(d));
    CHECK(rel_diff(u, ref.values()) < 1e-12);

    const auto id = TridiagonalSystem::constant(40, 0.0, 1.0, 0.0, true);
    const std::vector<double> d40(d.begin(), d.begin() + 40);
    CHECK(distd2_solve_line(id, StencilCoeffs::identity(40), d40, SubdomainPartition::even(40, 4)) == d40);
}

TEST_CASE("single rank reduces to thomas on the assembled right-hand side") {
    std::mt19937_64 rng(1);
    const std::size_t n = 48;
    const auto sys = random_dominant(n, false, rng);
    const auto stencil = random_stencil(n, rng);
    const auto u = random_vector(n, rng);
    const auto got = distd2_solve_line(sys, stencil, u, SubdomainPartition({n}));
    const auto ref = thomas_solve(sys, RhsBatch::single(stencil.apply(u, false)));
    CHECK(rel_diff(got, ref.values()) < 1e-13);

    // A ring of one short slice is exact too: nothing is dropped.
    const auto cyc = TridiagonalSystem::constant(12, 1.0 / 3.0, 1.0, 1.0 / 3.0, true);
    const auto d = random_vector(12, rng);
    const auto ring = distd2_solve_line(cyc, StencilCoeffs::identity(12), d, SubdomainPartition({12}));
    CHECK(rel_diff(ring, periodic_thomas_solve(cyc, RhsBatch::single(d)).values()) < 1e-14);
}

TEST_CASE("compact derivative of sin on two ranks tracks periodic thomas") {
    for (std::size_t n : {64u, 128u}) {
        const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
        const auto op = assemble(sixth_order_first_derivative(h), n, true);
        std::vector<double> u(n);
        for (std::size_t j = 0; j < n; ++j) {
            u[j] = std::sin(static_cast<double>(j) * h);
        }
        const auto dist = differentiate(op, u, DerivativeSolver::DistD2, 2);
        const auto ser = differentiate(op, u, DerivativeSolver::Thomas);
        // The splitting drops couplings of the size reported by preprocess;
        // the difference is bounded by that times the solution scale.
        const auto co = preprocess(op.system.slice(0, n / 2), SubdomainPosition::First, true);
        const double bound = 1e-14 + 10.0 * co.dropped_coupling() * max_abs(ser);
        CHECK(max_abs_diff(dist, ser) <= bound);
        if (n == 128) {
            CHECK(max_abs_diff(dist, ser) <= 1e-14);
        }
    }
}

TEST_CASE("every solve takes exactly two neighbour rounds") {
    for (bool cyclic : {false, true}) {
        for (std::size_t p = 2; p <= 16; ++p) {
            const std::size_t n = 8 * p;
            const auto sys = TridiagonalSystem::constant(n, 0.2, 1.0, 0.2, cyclic);
            const GroupedField u(LayoutDescriptor(n, 2, 1, 2, Direction::X), std::vector<double>(2 * n, 1.0));
            const auto run = distd2_solve_global(sys, StencilCoeffs::identity(n), u, SubdomainPartition::even(n, p));
            std::uint64_t messages = 0;
            for (const auto& c : run.counters) {
                CHECK(c.rounds == 2);
                messages += c.messages_sent;
            }
            // One halo and one boundary message per direction per cut.
            const std::uint64_t cuts = cyclic ? p : p - 1;
            CHECK(messages == 4 * cuts);
        }
    }
}

TEST_CASE("property: oracle equivalence over random systems, ranks and group widths") {
    std::mt19937_64 rng(100);
    const std::array<std::size_t, 3> ns{64, 128, 256};
    const std::array<std::size_t, 3> ps{2, 3, 4};
    const std::array<std::size_t, 3> szs{1, 4, 8};
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = ns[static_cast<std::size_t>(trial) % 3];
        const std::size_t p = ps[static_cast<std::size_t>(trial / 3) % 3];
        const std::size_t sz = szs[static_cast<std::size_t>(trial / 9) % 3];
        const bool cyclic = trial % 2 == 0;
        const auto sys = random_dominant(n, cyclic, rng);
        const auto field = lines_field(n, sz, random_vector(n * sz, rng));
        const auto run =
            distd2_solve_global(sys, StencilCoeffs::identity(n), field, SubdomainPartition::even(n, p));
        for (std::size_t l = 0; l < sz; ++l) {
            const auto ref = dense_solve_oracle(sys, RhsBatch::single(lane(field, l)));
            REQUIRE(rel_diff(lane(run.solution, l), ref.values()) < 1e-10);
        }
    }
}

TEST_CASE("property: compact matrices match the dense oracle to 1e-12") {
    std::mt19937_64 rng(12);
    for (std::size_t p : {2u, 3u, 4u}) {
        const auto sys = TridiagonalSystem::constant(192, 1.0 / 3.0, 1.0, 1.0 / 3.0, true);
        const auto d = random_vector(192, rng);
        const auto u = distd2_solve_line(sys, StencilCoeffs::identity(192), d, SubdomainPartition::even(192, p));
        CHECK(rel_diff(u, dense_solve_oracle(sys, RhsBatch::single(d)).values()) < 1e-12);
    }
}

TEST_CASE("property: permuting lanes permutes the results") {
    std::mt19937_64 rng(8);
    const std::size_t n = 64, sz = 8;
    const auto sys = random_dominant(n, true, rng);
    const auto stencil = random_stencil(n, rng);
    const auto base = random_vector(n * sz, rng);
    std::vector<std::size_t> perm(sz);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> shuffled(base.size());
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = 0; l < sz; ++l) {
            shuffled[perm[l] + sz * j] = base[l + sz * j];
        }
    }
    const auto part = SubdomainPartition::even(n, 2);
    const auto a = distd2_solve_global(sys, stencil, lines_field(n, sz, base), part).solution;
    const auto b = distd2_solve_global(sys, stencil, lines_field(n, sz, shuffled), part).solution;
    for (std::size_t l = 0; l < sz; ++l) {
        CHECK(lane(a, l) == lane(b, perm[l]));
    }
}

TEST_CASE("property: rank-count invariance and deterministic replay") {
    std::mt19937_64 rng(24);
    const std::size_t n = 256, sz = 4;
    const auto sys = TridiagonalSystem::constant(n, 1.0 / 3.0, 1.0, 1.0 / 3.0, true);
    const auto op = assemble(sixth_order_first_derivative(0.1), n, true);
    const auto field = lines_field(n, sz, random_vector(n * sz, rng));
    const auto two = distd2_solve_global(sys, op.stencil, field, SubdomainPartition::even(n, 2)).solution;
    const auto four = distd2_solve_global(sys, op.stencil, field, SubdomainPartition::even(n, 4)).solution;
    CHECK(rel_diff(four.data(), two.data()) < 1e-12);
    const auto again = distd2_solve_global(sys, op.stencil, field, SubdomainPartition::even(n, 4)).solution;
    CHECK(again == four);
}

TEST_CASE("property: results do not degrade as ranks grow while slices stay long") {
    std::mt19937_64 rng(5);
    const std::size_t n = 512;
    const auto sys = TridiagonalSystem::constant(n, 1.0 / 3.0, 1.0, 1.0 / 3.0, true);
    const auto d = random_vector(n, rng);
    const auto ref = dense_solve_oracle(sys, RhsBatch::single(d));
    for (std::size_t p : {2u, 4u, 8u, 16u}) {
        const auto u = distd2_solve_line(sys, StencilCoeffs::identity(n), d, SubdomainPartition::even(n, p));
        CHECK(rel_diff(u, ref.values()) < 1e-12);
    }
}
