#include "tds/distd2.hpp"

#include "tds/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tds {

namespace {

constexpr double kNegligibleCoupling = 1e-200;


// Per-row sweep kernels. The fused and unfused decoupling paths call exactly
// these, so the two agree bit for bit (the build disables FP contraction).

inline void scale_row(double* d, double r, std::size_t sz) noexcept {
    for (std::size_t l = 0; l < sz; ++l) {
        d[l] = d[l] * r;
    }
}

inline void forward_row(double* d, const double* prev, double r, double f, std::size_t sz) noexcept {
    for (std::size_t l = 0; l < sz; ++l) {
        d[l] = f * (d[l] - r * prev[l]);
    }
}

inline void backward_row(double* d, const double* next, double w, std::size_t sz) noexcept {
    for (std::size_t l = 0; l < sz; ++l) {
        d[l] = d[l] - w * next[l];
    }
}

inline void closure_row(double* d0, const double* d1, double w, double f, std::size_t sz) noexcept {
    for (std::size_t l = 0; l < sz; ++l) {
        d0[l] = f * (d0[l] - w * d1[l]);
    }
}

void backward_and_closure(double* d, const DistCoeffs& c, std::size_t sz) noexcept {
    const std::size_t n = c.size();
    for (std::size_t j = n - 2; j-- > 1;) {
        backward_row(d + sz * j, d + sz * (j + 1), c.w[j], sz);
    }
    closure_row(d, d + sz, c.w[0], c.f[0], sz);
}

std::array<const double*, 5> window_at(const HaloField& u, std::size_t g, std::size_t j) noexcept {
    const double* centre = u.row_ptr(g, static_cast<std::ptrdiff_t>(j));
    const std::size_t sz = u.sz();
    return {centre - 2 * sz, centre - sz, centre, centre + sz, centre + 2 * sz};
}

void check_shapes(const HaloField& u, const DistCoeffs& coeffs, const StencilCoeffs& stencil) {
    if (u.line_length() != coeffs.size() || stencil.size() != coeffs.size()) {
        throw Error(ErrorKind::InvalidArgument, "field, coefficients and stencil lengths differ");
    }
    if (u.depth() < stencil.halo_depth || stencil.halo_depth != 2) {
        throw Error(ErrorKind::InvalidArgument, "halo depth does not cover the 5-point stencil");
    }
}

std::vector<double> edge_values(const GroupedField& d, std::size_t position) {
    const std::size_t sz = d.sz();
    std::vector<double> out(sz * d.group_count());
    for (std::size_t g = 0; g < d.group_count(); ++g) {
        const auto lanes = d.lanes(g, position);
        std::copy(lanes.begin(), lanes.end(), out.begin() + static_cast<std::ptrdiff_t>(sz * g));
    }
    return out;
}

} // namespace

SubdomainPosition position_of(int rank, int ranks) noexcept {
    if (ranks <= 1) {
        return SubdomainPosition::Sole;
    }
    if (rank == 0) {
        return SubdomainPosition::First;
    }
    return rank == ranks - 1 ? SubdomainPosition::Last : SubdomainPosition::Interior;
}

double DistCoeffs::dropped_coupling() const noexcept {
    if (s_a.empty()) {
        return 0.0;
    }
    return std::max(std::abs(s_c.front()), std::abs(s_a.back()));
}

// ───────────────── Preprocessing ─────────────────────────────────────────

DistCoeffs preprocess(const TridiagonalSystem& local, SubdomainPosition position, bool cyclic,
                      const PreprocessOptions& opts) {
    const std::size_t n = local.size();
    if (n < 4) {
        throw Error(ErrorKind::InvalidArgument, "a slice needs at least 4 rows, got " + std::to_string(n));
    }
    std::vector<double> a(local.lower().begin(), local.lower().end());
    const auto b = local.diag();
    std::vector<double> c(local.upper().begin(), local.upper().end());
    if (!cyclic) {
        if (position == SubdomainPosition::First || position == SubdomainPosition::Sole) {
            a.front() = 0.0;
        }
        if (position == SubdomainPosition::Last || position == SubdomainPosition::Sole) {
            c.back() = 0.0;
        }
    }
    if (opts.require_dominance) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!(std::abs(b[j]) > std::abs(a[j]) + std::abs(c[j]))) {
                throw Error(ErrorKind::NotDominant, "row " + std::to_string(j) + " is not diagonally dominant");
            }
        }
    }

    DistCoeffs out;
    out.s_a.assign(n, 0.0);
    out.s_c.assign(n, 0.0);
    out.w.assign(n, 0.0);
    out.f.assign(n, 1.0);
    out.r.assign(n, 0.0);
    out.position = position;
    out.cyclic_global = cyclic;
    auto& sa = out.s_a;
    auto& sc = out.s_c;

    for (std::size_t j = 0; j < 2; ++j) {
        out.r[j] = 1.0 / b[j];
        sa[j] = a[j] * out.r[j];
        sc[j] = c[j] * out.r[j];
    }
    for (std::size_t j = 2; j < n; ++j) {
        const double pivot = b[j] - a[j] * sc[j - 1];
        if (!(std::abs(pivot) >= opts.pivot_floor)) {
            throw Error(ErrorKind::SingularPivot, "slice pivot " + std::to_string(j));
        }
        const double inv = 1.0 / pivot;
        sa[j] = -inv * a[j] * sa[j - 1];
        sc[j] = inv * c[j];
        out.r[j] = a[j];
        out.f[j] = inv;
    }
    for (std::size_t j = n - 2; j-- > 1;) {
        out.w[j] = sc[j];
        sa[j] = sa[j] - sc[j] * sa[j + 1];
        sc[j] = -sc[j] * sc[j + 1];
    }
    const double denom = 1.0 - sc[0] * sa[1];
    if (!(std::abs(denom) >= opts.pivot_floor)) {
        throw Error(ErrorKind::SingularPivot, "slice closure pivot");
    }
    out.w[0] = sc[0];
    out.f[0] = 1.0 / denom;
    sa[0] = out.f[0] * sa[0];
    sc[0] = -out.f[0] * sc[0] * sc[1];
    // Far from the edges the couplings decay into the subnormal range, where
    // the substitution sweep would run on slow-path arithmetic.
    for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(sa[j]) < kNegligibleCoupling) {
            sa[j] = 0.0;
        }
        if (std::abs(sc[j]) < kNegligibleCoupling) {
            sc[j] = 0.0;
        }
    }
    return out;
}

// ───────────────── Stencils ──────────────────────────────────────────────

StencilCoeffs StencilCoeffs::identity(std::size_t n) {
    StencilCoeffs s;
    s.rows.assign(n, {0.0, 0.0, 1.0, 0.0, 0.0});
    return s;
}

StencilCoeffs StencilCoeffs::slice(std::size_t offset, std::size_t count) const {
    if (offset + count > rows.size()) {
        throw Error(ErrorKind::OutOfBounds, "stencil slice outside rows");
    }
    StencilCoeffs s;
    s.halo_depth = halo_depth;
    s.rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(offset),
                  rows.begin() + static_cast<std::ptrdiff_t>(offset + count));
    return s;
}

std::vector<double> StencilCoeffs::apply(std::span<const double> u, bool periodic) const {
    const std::size_t n = rows.size();
    if (u.size() != n) {
        throw Error(ErrorKind::InvalidArgument, "stencil and field lengths differ");
    }
    const auto ni = static_cast<std::ptrdiff_t>(n);
    auto at = [&](std::ptrdiff_t i) -> double {
        if (periodic) {
            return u[static_cast<std::size_t>(((i % ni) + ni) % ni)];
        }
        return (i < 0 || i >= ni) ? 0.0 : u[static_cast<std::size_t>(i)];
    };
    std::vector<double> d(n);
    for (std::ptrdiff_t j = 0; j < ni; ++j) {
        const auto& wt = rows[static_cast<std::size_t>(j)];
        d[static_cast<std::size_t>(j)] = wt[0] * at(j - 2) + wt[1] * at(j - 1) + wt[2] * at(j) +
                                         wt[3] * at(j + 1) + wt[4] * at(j + 2);
    }
    return d;
}

GroupedField build_rhs(const HaloField& u, const StencilCoeffs& stencil) {
    if (u.line_length() != stencil.size() || u.depth() < 2) {
        throw Error(ErrorKind::InvalidArgument, "stencil does not match halo field");
    }
    GroupedField out(u.layout());
    const std::size_t sz = u.sz();
    for (std::size_t g = 0; g < u.group_count(); ++g) {
        for (std::size_t j = 0; j < stencil.size(); ++j) {
            build_rhs_row(window_at(u, g, j), stencil.rows[j], out.lanes(g, j).data(), sz);
        }
    }
    return out;
}

// ───────────────── Decoupling ────────────────────────────────────────────

GroupedField decouple_fused(const HaloField& u, const DistCoeffs& coeffs, const StencilCoeffs& stencil) {
    GroupedField out(u.layout());
    decouple_fused(u, coeffs, stencil, out);
    return out;
}

void decouple_fused(const HaloField& u, const DistCoeffs& coeffs, const StencilCoeffs& stencil, GroupedField& out) {
    check_shapes(u, coeffs, stencil);
    if (!(out.layout() == u.layout())) {
        throw Error(ErrorKind::InvalidArgument, "output layout differs from the halo field");
    }
    const std::size_t n = coeffs.size();
    const std::size_t sz = u.sz();
    for (std::size_t g = 0; g < u.group_count(); ++g) {
        double* d = out.group(g).data();
        for (std::size_t j = 0; j < 2; ++j) {
            build_rhs_row(window_at(u, g, j), stencil.rows[j], d + sz * j, sz);
            scale_row(d + sz * j, coeffs.r[j], sz);
        }
        for (std::size_t j = 2; j < n; ++j) {
            build_rhs_row(window_at(u, g, j), stencil.rows[j], d + sz * j, sz);
            forward_row(d + sz * j, d + sz * (j - 1), coeffs.r[j], coeffs.f[j], sz);
        }
        backward_and_closure(d, coeffs, sz);
    }
}

GroupedField decouple_unfused(const GroupedField& d_rhs, const DistCoeffs& coeffs) {
    if (d_rhs.line_length() != coeffs.size()) {
        throw Error(ErrorKind::InvalidArgument, "field and coefficient lengths differ");
    }
    GroupedField out = d_rhs;
    const std::size_t n = coeffs.size();
    const std::size_t sz = out.sz();
    for (std::size_t g = 0; g < out.group_count(); ++g) {
        double* d = out.group(g).data();
        for (std::size_t j = 0; j < 2; ++j) {
            scale_row(d + sz * j, coeffs.r[j], sz);
        }
        for (std::size_t j = 2; j < n; ++j) {
            forward_row(d + sz * j, d + sz * (j - 1), coeffs.r[j], coeffs.f[j], sz);
        }
        backward_and_closure(d, coeffs, sz);
    }
    return out;
}

// ───────────────── Boundary pairs and substitution ───────────────────────

PairSolution solve_boundary_pair(const BoundaryPair& pair) {
    if (pair.d_last_local.size() != pair.d_first_remote.size()) {
        throw Error(ErrorKind::InvalidArgument, "boundary pair lane counts differ");
    }
    const double det = 1.0 - pair.s_c_last * pair.s_a_first_remote;
    if (!(std::abs(det) >= 1e-12)) {
        throw Error(ErrorKind::SingularPair, "boundary pair determinant " + std::to_string(det));
    }
    const std::size_t m = pair.d_last_local.size();
    PairSolution out{std::vector<double>(m), std::vector<double>(m)};
    for (std::size_t l = 0; l < m; ++l) {
        const double last = pair.d_last_local[l];
        const double first = pair.d_first_remote[l];
        out.u_last_local[l] = (last - pair.s_c_last * first) / det;
        out.u_first_remote[l] = (first - pair.s_a_first_remote * last) / det;
    }
    return out;
}

void substitute(GroupedField& d, const DistCoeffs& coeffs, std::span<const double> u_start,
                std::span<const double> u_end) {
    const std::size_t n = coeffs.size();
    const std::size_t sz = d.sz();
    if (d.line_length() != n) {
        throw Error(ErrorKind::InvalidArgument, "field and coefficient lengths differ");
    }
    if (u_start.size() != sz * d.group_count() || u_end.size() != u_start.size()) {
        throw Error(ErrorKind::InvalidArgument, "edge value count differs from lanes * groups");
    }
    for (std::size_t g = 0; g < d.group_count(); ++g) {
        double* row = d.group(g).data();
        const double* us = u_start.data() + sz * g;
        const double* ue = u_end.data() + sz * g;
        for (std::size_t j = 1; j + 1 < n; ++j) {
            const double sa = coeffs.s_a[j];
            const double sc = coeffs.s_c[j];
            double* dj = row + sz * j;
            for (std::size_t l = 0; l < sz; ++l) {
                dj[l] = dj[l] - sa * us[l] - sc * ue[l];
            }
        }
        std::copy(us, us + sz, row);
        std::copy(ue, ue + sz, row + sz * (n - 1));
    }
}

// ───────────────── Distributed pipeline ──────────────────────────────────

Distd2Plan make_distd2_plan(RankContext& ctx, const TridiagonalSystem& global, const StencilCoeffs& global_stencil,
                            const SubdomainPartition& part, const PreprocessOptions& opts) {
    if (static_cast<std::size_t>(ctx.size()) != part.rank_count()) {
        throw Error(ErrorKind::InvalidArgument, "partition rank count differs from communicator size");
    }
    if (part.total() != global.size() || global_stencil.size() != global.size()) {
        throw Error(ErrorKind::InvalidArgument, "partition or stencil does not match the system");
    }
    if (ctx.cyclic() != global.periodic()) {
        throw Error(ErrorKind::InvalidArgument, "rank topology and system periodicity differ");
    }
    const auto p = static_cast<std::size_t>(ctx.rank());
    const std::size_t off = part.offset(p);
    const std::size_t len = part.local_size(p);
    Distd2Plan plan;
    plan.coeffs = preprocess(global.slice(off, len), position_of(ctx.rank(), ctx.size()), ctx.cyclic(), opts);
    plan.stencil = global_stencil.slice(off, len);
    plan.neighbors = exchange_coefficients(ctx, plan.coeffs.s_a.front(), plan.coeffs.s_c.back());
    return plan;
}

GroupedField distd2_solve(RankContext& ctx, const GroupedField& u_local, const Distd2Plan& plan) {
    Distd2Workspace ws;
    distd2_solve(ctx, u_local, plan, ws);
    return std::move(*ws.solution);
}

void distd2_solve(RankContext& ctx, const GroupedField& u_local, const Distd2Plan& plan, Distd2Workspace& ws) {
    const std::size_t n = plan.coeffs.size();
    if (u_local.line_length() != n) {
        throw Error(ErrorKind::InvalidArgument, "local field length differs from the plan");
    }
    ctx.advance_epoch();
    exchange_halo(ctx, u_local, plan.stencil.halo_depth, ws.halo);
    if (!ws.solution || !(ws.solution->layout() == u_local.layout())) {
        ws.solution.emplace(u_local.layout());
    }
    GroupedField& d = *ws.solution;
    decouple_fused(*ws.halo, plan.coeffs, plan.stencil, d);

    const std::vector<double> first = edge_values(d, 0);
    const std::vector<double> last = edge_values(d, n - 1);
    const BoundaryRemote remote = exchange_boundary(ctx, first, last);

    std::vector<double> u_start = first;
    std::vector<double> u_end = last;
    const bool alone = ctx.size() == 1;
    if (alone) {
        // A single slice: the neighbour's edge unknowns (if cyclic) are its
        // own, so the otherwise dropped couplings fold into one exact pair.
        // Open ends already carry zero outer couplings.
        const DistCoeffs& co = plan.coeffs;
        auto sol = solve_boundary_pair(
            {last, first, co.s_c.back() + co.s_a.back(), co.s_a.front() + co.s_c.front()});
        u_start = std::move(sol.u_first_remote);
        u_end = std::move(sol.u_last_local);
    } else if (ctx.has_neighbor(Side::Prev)) {
        auto sol = solve_boundary_pair(
            {remote.prev_last, first, plan.neighbors.prev_s_c_last, plan.coeffs.s_a.front()});
        u_start = std::move(sol.u_first_remote);
    }
    if (!alone && ctx.has_neighbor(Side::Next)) {
        auto sol = solve_boundary_pair(
            {last, remote.next_first, plan.coeffs.s_c.back(), plan.neighbors.next_s_a_first});
        u_end = std::move(sol.u_last_local);
    }
    substitute(d, plan.coeffs, u_start, u_end);
}

namespace {

struct RankOutcome {
    GroupedField solution;
    TrafficCounters counters;
};

} // namespace

DistributedSolve distd2_solve_global(const TridiagonalSystem& global, const StencilCoeffs& stencil,
                                     const GroupedField& u, const SubdomainPartition& part,
                                     const PreprocessOptions& opts) {
    if (u.line_length() != global.size()) {
        throw Error(ErrorKind::InvalidArgument, "field line length differs from system size");
    }
    const auto pieces = split_along_direction(u, part.local_sizes());
    const int ranks = static_cast<int>(part.rank_count());
    auto outcomes = spawn_ranks(ranks, global.periodic(), [&](RankContext& ctx) {
        const Distd2Plan plan = make_distd2_plan(ctx, global, stencil, part, opts);
        const TrafficCounters before = ctx.counters();
        GroupedField sol = distd2_solve(ctx, pieces[static_cast<std::size_t>(ctx.rank())], plan);
        const TrafficCounters& after = ctx.counters();
        return RankOutcome{std::move(sol),
                           {after.messages_sent - before.messages_sent, after.bytes_sent - before.bytes_sent,
                            after.rounds - before.rounds}};
    });
    std::vector<GroupedField> solved;
    DistributedSolve result{u, {}};
    solved.reserve(outcomes.size());
    for (auto& o : outcomes) {
        solved.push_back(std::move(o.solution));
        result.counters.push_back(o.counters);
    }
    result.solution = join_along_direction(solved);
    return result;
}

std::vector<double> distd2_solve_line(const TridiagonalSystem& global, const StencilCoeffs& stencil,
                                      std::span<const double> u, const SubdomainPartition& part) {
    const LayoutDescriptor layout(u.size(), 1, 1, 1, Direction::X);
    const GroupedField field(layout, std::vector<double>(u.begin(), u.end()));
    const auto run = distd2_solve_global(global, stencil, field, part);
    const auto data = run.solution.data();
    return {data.begin(), data.end()};
}

} // namespace tds
