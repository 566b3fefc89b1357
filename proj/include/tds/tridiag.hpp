/**
 * @file tridiag.hpp
 * @brief Serial reference solvers and the two prior distributed algorithms.
 *
 * Row i of a system reads a_i u_{i-1} + b_i u_i + c_i u_{i+1} = d_i. For a
 * periodic system a_0 couples to u_{n-1} and c_{n-1} couples to u_0; for a
 * non-periodic one those two entries are ignored.
 */

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tds {

class TridiagonalSystem {
public:
    /// Validates lengths (all equal, n >= 3) and that every b_i is finite and nonzero.
    TridiagonalSystem(std::vector<double> lower, std::vector<double> diag,
                      std::vector<double> upper, bool periodic);

    /// Constant-coefficient system, e.g. the compact-scheme matrix (1/3, 1, 1/3).
    static TridiagonalSystem constant(std::size_t n, double lower, double diag, double upper,
                                      bool periodic);

    [[nodiscard]] std::size_t size() const noexcept { return diag_.size(); }
    [[nodiscard]] bool periodic() const noexcept { return periodic_; }
    [[nodiscard]] std::span<const double> lower() const noexcept { return lower_; }
    [[nodiscard]] std::span<const double> diag() const noexcept { return diag_; }
    [[nodiscard]] std::span<const double> upper() const noexcept { return upper_; }

    /// Effective lower/upper entries: the wraparound terms read as 0 when non-periodic.
    [[nodiscard]] double a(std::size_t i) const noexcept;
    [[nodiscard]] double c(std::size_t i) const noexcept;

    /// y = A x, including the cyclic corners when periodic.
    void multiply(std::span<const double> x, std::span<double> y) const;
    [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;

    /// Rows [offset, offset + count) as a non-periodic system. lower()[0] and
    /// upper()[count-1] of the result keep the couplings to the neighbouring
    /// rows (or the wraparound couplings), which is what the subdomain
    /// algorithms consume.
    [[nodiscard]] TridiagonalSystem slice(std::size_t offset, std::size_t count) const;

private:
    std::vector<double> lower_;
    std::vector<double> diag_;
    std::vector<double> upper_;
    bool periodic_;
};

/// m right-hand sides of length n stored row-major (one RHS per row).
class RhsBatch {
public:
    RhsBatch(std::size_t m, std::size_t n);
    /// Validates shape and finiteness.
    RhsBatch(std::size_t m, std::size_t n, std::vector<double> values);
    static RhsBatch single(std::vector<double> values);

    [[nodiscard]] std::size_t count() const noexcept { return m_; }
    [[nodiscard]] std::size_t length() const noexcept { return n_; }
    [[nodiscard]] std::span<double> row(std::size_t k) noexcept { return {values_.data() + k * n_, n_}; }
    [[nodiscard]] std::span<const double> row(std::size_t k) const noexcept {
        return {values_.data() + k * n_, n_};
    }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }

private:
    std::size_t m_;
    std::size_t n_;
    std::vector<double> values_;
};

class SubdomainPartition {
public:
    /// Each local size must be >= 4. A single subdomain is accepted and
    /// treated as the degenerate (undistributed) case.
    explicit SubdomainPartition(std::vector<std::size_t> local_sizes);
    /// Splits n as evenly as possible, the first n % P subdomains one row larger.
    static SubdomainPartition even(std::size_t n, std::size_t ranks);

    [[nodiscard]] std::size_t rank_count() const noexcept { return sizes_.size(); }
    [[nodiscard]] std::size_t total() const noexcept { return offsets_.back(); }
    [[nodiscard]] std::size_t local_size(std::size_t p) const { return sizes_.at(p); }
    [[nodiscard]] std::size_t offset(std::size_t p) const { return offsets_.at(p); }
    [[nodiscard]] std::span<const std::size_t> local_sizes() const noexcept { return sizes_; }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
};

struct SolverOptions {
    /// Pivots with magnitude below this are treated as exactly singular.
    double pivot_floor = 1e-300;
};

struct PddOptions {
    double pivot_floor = 1e-300;
    /// Largest dropped reduced-system coupling tolerated (unit diagonal).
    double truncation_threshold = 1e-14;
};

struct PddResult {
    RhsBatch solution;
    double max_dropped = 0.0;
};

[[nodiscard]] bool is_diagonally_dominant(const TridiagonalSystem& sys) noexcept;
/// min_i |b_i| - |a_i| - |c_i|, wraparound terms included when periodic.
[[nodiscard]] double dominance_margin(const TridiagonalSystem& sys) noexcept;

[[nodiscard]] RhsBatch thomas_solve(const TridiagonalSystem& sys, const RhsBatch& rhs,
                                    const SolverOptions& opts = {});
/// Sherman-Morrison: two non-periodic Thomas passes plus a rank-1 correction.
[[nodiscard]] RhsBatch periodic_thomas_solve(const TridiagonalSystem& sys, const RhsBatch& rhs,
                                             const SolverOptions& opts = {});
/// Gaussian elimination with partial pivoting on the dense matrix (n <= 4096).
[[nodiscard]] RhsBatch dense_solve_oracle(const TridiagonalSystem& sys, const RhsBatch& rhs);
[[nodiscard]] RhsBatch modified_thomas_solve(const TridiagonalSystem& sys, const RhsBatch& rhs,
                                             const SubdomainPartition& part,
                                             const SolverOptions& opts = {});
[[nodiscard]] PddResult pdd_solve(const TridiagonalSystem& sys, const RhsBatch& rhs,
                                  const SubdomainPartition& part, const PddOptions& opts = {});

/// Factorised non-periodic Thomas: the modified upper band and inverse pivots
/// are computed once and applied to any number of right-hand sides.
class ThomasFactor {
public:
    explicit ThomasFactor(const TridiagonalSystem& sys, const SolverOptions& opts = {});

    [[nodiscard]] std::size_t size() const noexcept { return inv_pivot_.size(); }
    /// Solves in place.
    void solve(std::span<double> d) const;
    /// Solves sz interleaved lines in place: entry j of lane l at block[l + sz*j].
    void solve_lanes(std::span<double> block, std::size_t sz) const;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;     // c'_i
    std::vector<double> inv_pivot_; // 1 / (b_i - a_i c'_{i-1})
};

/// Sherman-Morrison factorisation of a cyclic system.
class PeriodicThomasFactor {
public:
    explicit PeriodicThomasFactor(const TridiagonalSystem& sys, const SolverOptions& opts = {});

    [[nodiscard]] std::size_t size() const noexcept { return correction_.size(); }
    void solve(std::span<double> d) const;
    void solve_lanes(std::span<double> block, std::size_t sz) const;

private:
    ThomasFactor modified_;
    std::vector<double> correction_; // z = A'^{-1} v
    double gamma_;
    double top_right_;
    double inv_denominator_;
};

} // namespace tds
