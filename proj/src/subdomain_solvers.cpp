// Modified Thomas (hybrid first phase + substitution) and PDD. Both run every
// subdomain in one address space; they exist to cross-validate DistD2.

#include "tds/error.hpp"
#include "tds/tridiag.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tds {

namespace {

/// Reduced-row form of one subdomain after the local forward/backward passes:
/// row k reads fill[k] u_first + u_k + spike[k] u_last = d[k] for interior k,
/// while row 0 couples to the previous subdomain's last unknown (fill[0]) and
/// the own last unknown (spike[0]), and row L-1 couples to the own first
/// unknown (fill[L-1]) and the next subdomain's first unknown (spike[L-1]).
struct ReducedRows {
    std::vector<double> fill;
    std::vector<double> spike;
};

/// One subdomain of the modified Thomas first phase, in place on fill/spike/d.
/// fill and spike enter holding the raw a and c bands.
void eliminate_subdomain(std::span<const double> diag, std::span<double> fill,
                         std::span<double> spike, std::span<double> d, const SolverOptions& opts) {
    const std::size_t n = diag.size();
    for (std::size_t k = 0; k < 2; ++k) {
        fill[k] /= diag[k];
        spike[k] /= diag[k];
        d[k] /= diag[k];
    }
    for (std::size_t k = 2; k < n; ++k) {
        const double lower = fill[k];
        const double pivot = diag[k] - lower * spike[k - 1];
        if (!(std::abs(pivot) >= opts.pivot_floor)) {
            throw Error(ErrorKind::SingularPivot, "local pivot " + std::to_string(k));
        }
        const double r = 1.0 / pivot;
        d[k] = r * (d[k] - lower * d[k - 1]);
        fill[k] = -r * lower * fill[k - 1];
        spike[k] = r * spike[k];
    }
    for (std::size_t k = n - 2; k-- > 1;) {
        d[k] -= spike[k] * d[k + 1];
        fill[k] -= spike[k] * fill[k + 1];
        spike[k] = -spike[k] * spike[k + 1];
    }
    const double denom = 1.0 - spike[0] * fill[1];
    if (!(std::abs(denom) >= opts.pivot_floor)) {
        throw Error(ErrorKind::SingularPivot, "local closure pivot");
    }
    const double r = 1.0 / denom;
    d[0] = r * (d[0] - spike[0] * d[1]);
    fill[0] = r * fill[0];
    spike[0] = -r * spike[0] * spike[1];
}

} // namespace

RhsBatch modified_thomas_solve(const TridiagonalSystem& sys, const RhsBatch& rhs,
                               const SubdomainPartition& part, const SolverOptions& opts) {
    if (sys.periodic()) {
        throw Error(ErrorKind::InvalidArgument, "modified_thomas_solve needs a non-periodic system");
    }
    if (part.total() != sys.size() || rhs.length() != sys.size()) {
        throw Error(ErrorKind::InvalidArgument, "partition or right-hand side does not match system");
    }
    const std::size_t ranks = part.rank_count();
    if (ranks == 1) {
        return thomas_solve(sys, rhs, opts);
    }

    RhsBatch out = rhs;
    std::vector<ReducedRows> rows(ranks);
    std::vector<double> scratch_fill, scratch_spike;
    for (std::size_t k = 0; k < out.count(); ++k) {
        for (std::size_t p = 0; p < ranks; ++p) {
            const std::size_t off = part.offset(p);
            const std::size_t len = part.local_size(p);
            const auto sub = sys.slice(off, len);
            scratch_fill.assign(sub.lower().begin(), sub.lower().end());
            scratch_spike.assign(sub.upper().begin(), sub.upper().end());
            eliminate_subdomain(sub.diag(), scratch_fill, scratch_spike, out.row(k).subspan(off, len),
                                opts);
            if (k == 0) {
                rows[p] = {scratch_fill, scratch_spike};
            }
        }
    }

    // Reduced system over (first_0, last_0, first_1, last_1, ...).
    const std::size_t nr = 2 * ranks;
    std::vector<double> lo(nr), di(nr, 1.0), up(nr);
    for (std::size_t p = 0; p < ranks; ++p) {
        const std::size_t last = part.local_size(p) - 1;
        lo[2 * p] = rows[p].fill[0];
        up[2 * p] = rows[p].spike[0];
        lo[2 * p + 1] = rows[p].fill[last];
        up[2 * p + 1] = rows[p].spike[last];
    }
    const TridiagonalSystem reduced(std::move(lo), std::move(di), std::move(up), false);
    RhsBatch reduced_rhs(out.count(), nr);
    for (std::size_t k = 0; k < out.count(); ++k) {
        for (std::size_t p = 0; p < ranks; ++p) {
            reduced_rhs.row(k)[2 * p] = out.row(k)[part.offset(p)];
            reduced_rhs.row(k)[2 * p + 1] = out.row(k)[part.offset(p) + part.local_size(p) - 1];
        }
    }
    const RhsBatch edges = thomas_solve(reduced, reduced_rhs, opts);

    // Back substitution of the edge values.
    for (std::size_t k = 0; k < out.count(); ++k) {
        for (std::size_t p = 0; p < ranks; ++p) {
            auto u = out.row(k).subspan(part.offset(p), part.local_size(p));
            const double first = edges.row(k)[2 * p];
            const double last = edges.row(k)[2 * p + 1];
            for (std::size_t i = 1; i + 1 < u.size(); ++i) {
                u[i] = u[i] - rows[p].fill[i] * first - rows[p].spike[i] * last;
            }
            u.front() = first;
            u.back() = last;
        }
    }
    return out;
}

PddResult pdd_solve(const TridiagonalSystem& sys, const RhsBatch& rhs, const SubdomainPartition& part,
                    const PddOptions& opts) {
    if (part.total() != sys.size() || rhs.length() != sys.size()) {
        throw Error(ErrorKind::InvalidArgument, "partition or right-hand side does not match system");
    }
    const std::size_t ranks = part.rank_count();
    const SolverOptions solver_opts{opts.pivot_floor};

    // Columns of the local inverse scaled by the cut couplings.
    // left[i] = (A_loc^{-1} e_1)_i a_1 couples to the previous last unknown,
    // right[i] = (A_loc^{-1} e_L)_i c_L couples to the next first unknown.
    std::vector<ThomasFactor> factors;
    std::vector<std::vector<double>> left(ranks), right(ranks);
    factors.reserve(ranks);
    double max_dropped = 0.0;
    for (std::size_t p = 0; p < ranks; ++p) {
        const auto sub = sys.slice(part.offset(p), part.local_size(p));
        const std::size_t len = sub.size();
        factors.emplace_back(sub, solver_opts);
        left[p].assign(len, 0.0);
        right[p].assign(len, 0.0);
        left[p][0] = sub.lower()[0];
        right[p][len - 1] = sub.upper()[len - 1];
        factors.back().solve(left[p]);
        factors.back().solve(right[p]);
        // Penta-diagonal reduced entries that the 2x2 splitting drops.
        max_dropped = std::max({max_dropped, std::abs(right[p][0]), std::abs(left[p][len - 1])});
    }
    if (max_dropped > opts.truncation_threshold) {
        throw Error(ErrorKind::TruncationUnsafe,
                    "dropped coupling " + std::to_string(max_dropped) + " exceeds threshold " +
                        std::to_string(opts.truncation_threshold));
    }

    PddResult result{rhs, max_dropped};
    RhsBatch& out = result.solution;
    std::vector<double> first(ranks), last(ranks);
    for (std::size_t k = 0; k < out.count(); ++k) {
        auto row = out.row(k);
        for (std::size_t p = 0; p < ranks; ++p) {
            factors[p].solve(row.subspan(part.offset(p), part.local_size(p)));
        }
        for (std::size_t p = 0; p < ranks; ++p) {
            first[p] = row[part.offset(p)];
            last[p] = row[part.offset(p) + part.local_size(p) - 1];
        }
        // 2x2 systems across each cut: [1, right_p(L); left_q(1), 1].
        std::vector<double> u_first = first, u_last = last;
        const std::size_t pairs = sys.periodic() ? ranks : ranks - 1;
        for (std::size_t p = 0; p < pairs; ++p) {
            const std::size_t q = (p + 1) % ranks;
            const double s_c = right[p].back();
            const double s_a = left[q].front();
            const double det = 1.0 - s_c * s_a;
            if (!(std::abs(det) >= 1e-12)) {
                throw Error(ErrorKind::SingularPair, "PDD boundary pair " + std::to_string(p));
            }
            u_last[p] = (last[p] - s_c * first[q]) / det;
            u_first[q] = (first[q] - s_a * last[p]) / det;
        }
        for (std::size_t p = 0; p < ranks; ++p) {
            auto u = row.subspan(part.offset(p), part.local_size(p));
            const double prev_last = (p > 0 || sys.periodic()) ? u_last[(p + ranks - 1) % ranks] : 0.0;
            const double next_first = (p + 1 < ranks || sys.periodic()) ? u_first[(p + 1) % ranks] : 0.0;
            for (std::size_t i = 1; i + 1 < u.size(); ++i) {
                u[i] = u[i] - left[p][i] * prev_last - right[p][i] * next_first;
            }
            u.front() = u_first[p];
            u.back() = u_last[p];
        }
    }
    return result;
}

} // namespace tds
