/**
 * @file distd2.hpp
 * @brief Distributed batched tridiagonal solve with neighbour-only communication.
 *
 * Each rank owns a contiguous slice of every line. A one-off preprocessing
 * pass turns the local rows into the decoupled form
 *
 *     s_a[j] * u_start + u[j] + s_c[j] * u_end = d[j]
 *
 * where (u_start, u_end) are the slice's own edge unknowns for interior rows,
 * the previous rank's last unknown for row 0 and the next rank's first unknown
 * for row n-1. A solve then needs one halo round (to build the right-hand
 * side from the stencil) and one boundary round (to solve the 2x2 systems
 * straddling each cut). The couplings from row 0 to the own last unknown and
 * from row n-1 to the own first unknown are dropped; they decay
 * geometrically with the slice length for diagonally dominant systems.
 */

#pragma once

#include "tds/layout.hpp"
#include "tds/transport.hpp"
#include "tds/tridiag.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace tds {

enum class SubdomainPosition { First, Interior, Last, Sole };

[[nodiscard]] SubdomainPosition position_of(int rank, int ranks) noexcept;

/// Per-row coefficients consumed by the decoupling and substitution sweeps.
///
///  - rows 0, 1: r = 1 / b (row scale)
///  - rows j >= 2: r = a_j and f = forward pivot inverse
///  - rows 1..n-3: w = the upper coefficient used by the backward sweep
///  - row 0: w and f drive the closure that removes u_1 from row 0
struct DistCoeffs {
    std::vector<double> s_a;
    std::vector<double> s_c;
    std::vector<double> w;
    std::vector<double> f;
    std::vector<double> r;
    SubdomainPosition position = SubdomainPosition::Sole;
    bool cyclic_global = false;

    [[nodiscard]] std::size_t size() const noexcept { return s_a.size(); }
    /// Largest magnitude of the two couplings the 2x2 splitting drops.
    [[nodiscard]] double dropped_coupling() const noexcept;
};

struct PreprocessOptions {
    double pivot_floor = 1e-300;
    /// Throw NotDominant for a non-dominant slice instead of proceeding.
    bool require_dominance = false;
};

/**
 * @brief Computes the decoupled coefficients of one slice.
 *
 * `local` is the slice as returned by TridiagonalSystem::slice: lower()[0]
 * couples to the previous rank and upper()[n-1] to the next one. Those two
 * entries are zeroed at the open ends of a non-cyclic domain.
 *
 * @throws Error InvalidArgument for n < 4, SingularPivot, NotDominant.
 */
[[nodiscard]] DistCoeffs preprocess(const TridiagonalSystem& local, SubdomainPosition position, bool cyclic,
                                    const PreprocessOptions& opts = {});

/// 5-point right-hand-side weights per row: d_j = sum_k weights[j][k+2] u_{j+k}.
struct StencilCoeffs {
    std::vector<std::array<double, 5>> rows;
    std::size_t halo_depth = 2;

    [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
    /// d = u (lets the distributed solver take an explicit right-hand side).
    static StencilCoeffs identity(std::size_t n);
    /// Rows [offset, offset + count).
    [[nodiscard]] StencilCoeffs slice(std::size_t offset, std::size_t count) const;
    /// Global right-hand side of a full periodic or non-periodic line.
    [[nodiscard]] std::vector<double> apply(std::span<const double> u, bool periodic) const;
};

/// Weighted sum of a 5-point window for every lane: window[k] holds the lanes
/// at offset k - 2.
inline void build_rhs_row(const std::array<const double*, 5>& window, const std::array<double, 5>& weights,
                          double* out, std::size_t sz) noexcept {
    for (std::size_t l = 0; l < sz; ++l) {
        out[l] = weights[0] * window[0][l] + weights[1] * window[1][l] + weights[2] * window[2][l] +
                 weights[3] * window[3][l] + weights[4] * window[4][l];
    }
}

/// Right-hand side of every local line from a halo-extended field.
[[nodiscard]] GroupedField build_rhs(const HaloField& u, const StencilCoeffs& stencil);

/// Right-hand side construction fused into the forward sweep, then the
/// backward sweep and closure. Single pass over the halo field.
[[nodiscard]] GroupedField decouple_fused(const HaloField& u, const DistCoeffs& coeffs,
                                          const StencilCoeffs& stencil);
/// In-place variant: `out` must have the layout of `u`.
void decouple_fused(const HaloField& u, const DistCoeffs& coeffs, const StencilCoeffs& stencil, GroupedField& out);
/// Same sweeps applied to an already built right-hand side; bit-identical to
/// decouple_fused(u) when d_rhs == build_rhs(u).
[[nodiscard]] GroupedField decouple_unfused(const GroupedField& d_rhs, const DistCoeffs& coeffs);

/// Values on both sides of one cut, for every lane.
struct BoundaryPair {
    std::span<const double> d_last_local;
    std::span<const double> d_first_remote;
    double s_c_last = 0.0;
    double s_a_first_remote = 0.0;
};

struct PairSolution {
    std::vector<double> u_last_local;
    std::vector<double> u_first_remote;
};

/// @throws Error SingularPair when |1 - s_c_last * s_a_first_remote| < 1e-12.
[[nodiscard]] PairSolution solve_boundary_pair(const BoundaryPair& pair);

/// Interior rows d -= s_a u_start + s_c u_end; edges overwritten with the
/// pair solutions. u_start/u_end hold sz * groups values, lanes fastest.
void substitute(GroupedField& d, const DistCoeffs& coeffs, std::span<const double> u_start,
                std::span<const double> u_end);

/// Everything a rank needs for repeated solves with one operator.
struct Distd2Plan {
    DistCoeffs coeffs;
    StencilCoeffs stencil;
    BoundaryCoefficients neighbors;
};

/// Slices the global operator for ctx.rank(), preprocesses it and exchanges
/// the solve-invariant boundary couplings with the neighbours.
[[nodiscard]] Distd2Plan make_distd2_plan(RankContext& ctx, const TridiagonalSystem& global,
                                          const StencilCoeffs& global_stencil, const SubdomainPartition& part,
                                          const PreprocessOptions& opts = {});

/// Halo round, fused decoupling, boundary round, 2x2 solves, substitution.
/// `u_local` is this rank's slice of the field the stencil is applied to.
[[nodiscard]] GroupedField distd2_solve(RankContext& ctx, const GroupedField& u_local, const Distd2Plan& plan);

/// Buffers kept between solves so repeated solves do not allocate.
struct Distd2Workspace {
    std::optional<HaloField> halo;
    std::optional<GroupedField> solution;
};

/// distd2_solve writing into ws.solution.
void distd2_solve(RankContext& ctx, const GroupedField& u_local, const Distd2Plan& plan, Distd2Workspace& ws);

struct DistributedSolve {
    GroupedField solution;
    std::vector<TrafficCounters> counters; ///< per rank, for this solve only
};

/// Convenience driver: splits a global field over spawned ranks, solves and
/// joins. Lines run along the field's layout direction.
[[nodiscard]] DistributedSolve distd2_solve_global(const TridiagonalSystem& global, const StencilCoeffs& stencil,
                                                   const GroupedField& u, const SubdomainPartition& part,
                                                   const PreprocessOptions& opts = {});

/// Single-line form of distd2_solve_global.
[[nodiscard]] std::vector<double> distd2_solve_line(const TridiagonalSystem& global, const StencilCoeffs& stencil,
                                                    std::span<const double> u, const SubdomainPartition& part);

} // namespace tds
