#include "tds/tridiag.hpp"

#include "tds/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace tds {

// ───────────────── TridiagonalSystem ─────────────────────────────────────

TridiagonalSystem::TridiagonalSystem(std::vector<double> lower, std::vector<double> diag,
                                     std::vector<double> upper, bool periodic)
    : lower_(std::move(lower)), diag_(std::move(diag)), upper_(std::move(upper)),
      periodic_(periodic) {
    const std::size_t n = diag_.size();
    if (n < 3) {
        throw Error(ErrorKind::InvalidArgument,
                    "tridiagonal system needs n >= 3, got " + std::to_string(n));
    }
    if (lower_.size() != n || upper_.size() != n) {
        throw Error(ErrorKind::InvalidArgument, "band lengths differ");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(diag_[i]) || diag_[i] == 0.0) {
            throw Error(ErrorKind::InvalidArgument,
                        "diagonal entry " + std::to_string(i) + " is zero or not finite");
        }
        if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
            throw Error(ErrorKind::InvalidArgument,
                        "off-diagonal entry " + std::to_string(i) + " is not finite");
        }
    }
}

TridiagonalSystem TridiagonalSystem::constant(std::size_t n, double lower, double diag,
                                              double upper, bool periodic) {
    return TridiagonalSystem(std::vector<double>(n, lower), std::vector<double>(n, diag),
                             std::vector<double>(n, upper), periodic);
}

double TridiagonalSystem::a(std::size_t i) const noexcept {
    return (i == 0 && !periodic_) ? 0.0 : lower_[i];
}

double TridiagonalSystem::c(std::size_t i) const noexcept {
    return (i + 1 == size() && !periodic_) ? 0.0 : upper_[i];
}

void TridiagonalSystem::multiply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = size();
    if (x.size() != n || y.size() != n) {
        throw Error(ErrorKind::InvalidArgument, "matvec length mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i == 0 ? x[n - 1] : x[i - 1];
        const double right = i + 1 == n ? x[0] : x[i + 1];
        y[i] = a(i) * left + diag_[i] * x[i] + c(i) * right;
    }
}

std::vector<double> TridiagonalSystem::multiply(std::span<const double> x) const {
    std::vector<double> y(size());
    multiply(x, y);
    return y;
}

TridiagonalSystem TridiagonalSystem::slice(std::size_t offset, std::size_t count) const {
    if (offset + count > size()) {
        throw Error(ErrorKind::OutOfBounds, "slice exceeds system size");
    }
    std::vector<double> lo(count), di(count), up(count);
    for (std::size_t k = 0; k < count; ++k) {
        lo[k] = a(offset + k);
        di[k] = diag_[offset + k];
        up[k] = c(offset + k);
    }
    return TridiagonalSystem(std::move(lo), std::move(di), std::move(up), false);
}

// ───────────────── RhsBatch / SubdomainPartition ─────────────────────────

RhsBatch::RhsBatch(std::size_t m, std::size_t n) : m_(m), n_(n), values_(m * n, 0.0) {
    if (m == 0 || n == 0) {
        throw Error(ErrorKind::InvalidArgument, "empty right-hand side batch");
    }
}

RhsBatch::RhsBatch(std::size_t m, std::size_t n, std::vector<double> values)
    : m_(m), n_(n), values_(std::move(values)) {
    if (m == 0 || n == 0 || values_.size() != m * n) {
        throw Error(ErrorKind::InvalidArgument, "right-hand side batch shape mismatch");
    }
    if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
        throw Error(ErrorKind::InvalidArgument, "right-hand side holds non-finite values");
    }
}

RhsBatch RhsBatch::single(std::vector<double> values) {
    const std::size_t n = values.size();
    return RhsBatch(1, n, std::move(values));
}

SubdomainPartition::SubdomainPartition(std::vector<std::size_t> local_sizes)
    : sizes_(std::move(local_sizes)) {
    if (sizes_.empty()) {
        throw Error(ErrorKind::InvalidArgument, "partition needs at least one subdomain");
    }
    offsets_.resize(sizes_.size() + 1, 0);
    for (std::size_t p = 0; p < sizes_.size(); ++p) {
        if (sizes_[p] < 4) {
            throw Error(ErrorKind::InvalidArgument, "subdomain " + std::to_string(p) +
                                                        " has fewer than 4 rows");
        }
        offsets_[p + 1] = offsets_[p] + sizes_[p];
    }
}

SubdomainPartition SubdomainPartition::even(std::size_t n, std::size_t ranks) {
    if (ranks == 0) {
        throw Error(ErrorKind::InvalidArgument, "rank count must be positive");
    }
    std::vector<std::size_t> sizes(ranks, n / ranks);
    for (std::size_t p = 0; p < n % ranks; ++p) {
        ++sizes[p];
    }
    return SubdomainPartition(std::move(sizes));
}

// ───────────────── Dominance ─────────────────────────────────────────────

double dominance_margin(const TridiagonalSystem& sys) noexcept {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sys.size(); ++i) {
        margin = std::min(margin, std::abs(sys.diag()[i]) - std::abs(sys.a(i)) - std::abs(sys.c(i)));
    }
    return margin;
}

bool is_diagonally_dominant(const TridiagonalSystem& sys) noexcept {
    for (std::size_t i = 0; i < sys.size(); ++i) {
        if (!(std::abs(sys.diag()[i]) > std::abs(sys.a(i)) + std::abs(sys.c(i)))) {
            return false;
        }
    }
    return true;
}

// ───────────────── Thomas ────────────────────────────────────────────────

ThomasFactor::ThomasFactor(const TridiagonalSystem& sys, const SolverOptions& opts)
    : lower_(sys.size()), upper_(sys.size()), inv_pivot_(sys.size()) {
    const std::size_t n = sys.size();
    for (std::size_t i = 0; i < n; ++i) {
        lower_[i] = sys.a(i);
    }
    lower_[0] = 0.0;
    // Forward pass on the coefficient side; the RHS side runs in solve().
    inv_pivot_[0] = 1.0 / sys.diag()[0];
    upper_[0] = sys.c(0) * inv_pivot_[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double pivot = sys.diag()[i] - lower_[i] * upper_[i - 1];
        if (!(std::abs(pivot) >= opts.pivot_floor)) {
            throw Error(ErrorKind::SingularPivot, "pivot " + std::to_string(i) + " = " +
                                                      std::to_string(pivot));
        }
        inv_pivot_[i] = 1.0 / pivot;
        upper_[i] = inv_pivot_[i] * (i + 1 < n ? sys.c(i) : 0.0);
    }
}

void ThomasFactor::solve(std::span<double> d) const {
    const std::size_t n = size();
    d[0] = d[0] * inv_pivot_[0];
    for (std::size_t i = 1; i < n; ++i) {
        d[i] = inv_pivot_[i] * (d[i] - lower_[i] * d[i - 1]);
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        d[i] = d[i] - upper_[i] * d[i + 1];
    }
}

void ThomasFactor::solve_lanes(std::span<double> block, std::size_t sz) const {
    const std::size_t n = size();
    double* d = block.data();
    for (std::size_t l = 0; l < sz; ++l) {
        d[l] = d[l] * inv_pivot_[0];
    }
    for (std::size_t i = 1; i < n; ++i) {
        const double lo = lower_[i];
        const double r = inv_pivot_[i];
        double* cur = d + sz * i;
        const double* prev = cur - sz;
        for (std::size_t l = 0; l < sz; ++l) {
            cur[l] = r * (cur[l] - lo * prev[l]);
        }
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        const double up = upper_[i];
        double* cur = d + sz * i;
        const double* next = cur + sz;
        for (std::size_t l = 0; l < sz; ++l) {
            cur[l] = cur[l] - up * next[l];
        }
    }
}

RhsBatch thomas_solve(const TridiagonalSystem& sys, const RhsBatch& rhs, const SolverOptions& opts) {
    if (sys.periodic()) {
        throw Error(ErrorKind::InvalidArgument, "thomas_solve needs a non-periodic system");
    }
    if (rhs.length() != sys.size()) {
        throw Error(ErrorKind::InvalidArgument, "right-hand side length differs from system size");
    }
    const ThomasFactor factor(sys, opts);
    RhsBatch out = rhs;
    for (std::size_t k = 0; k < out.count(); ++k) {
        factor.solve(out.row(k));
    }
    return out;
}

// ───────────────── Periodic Thomas ───────────────────────────────────────

namespace {

TridiagonalSystem sherman_morrison_base(const TridiagonalSystem& sys, double gamma) {
    const std::size_t n = sys.size();
    std::vector<double> lo(sys.lower().begin(), sys.lower().end());
    std::vector<double> di(sys.diag().begin(), sys.diag().end());
    std::vector<double> up(sys.upper().begin(), sys.upper().end());
    const double bottom_left = sys.upper()[n - 1];
    const double top_right = sys.lower()[0];
    di[0] -= gamma;
    di[n - 1] -= bottom_left * top_right / gamma;
    lo[0] = 0.0;
    up[n - 1] = 0.0;
    return TridiagonalSystem(std::move(lo), std::move(di), std::move(up), false);
}

} // namespace

PeriodicThomasFactor::PeriodicThomasFactor(const TridiagonalSystem& sys, const SolverOptions& opts)
    : modified_(sherman_morrison_base(sys, -sys.diag()[0]), opts), correction_(sys.size(), 0.0),
      gamma_(-sys.diag()[0]), top_right_(sys.lower()[0]), inv_denominator_(0.0) {
    const std::size_t n = sys.size();
    correction_[0] = gamma_;
    correction_[n - 1] = sys.upper()[n - 1];
    modified_.solve(correction_);
    const double denominator = 1.0 + correction_[0] + top_right_ * correction_[n - 1] / gamma_;
    if (!(std::abs(denominator) >= opts.pivot_floor)) {
        throw Error(ErrorKind::SingularCorrection,
                    "Sherman-Morrison denominator " + std::to_string(denominator));
    }
    inv_denominator_ = 1.0 / denominator;
}

void PeriodicThomasFactor::solve(std::span<double> d) const {
    const std::size_t n = size();
    modified_.solve(d);
    const double factor = (d[0] + top_right_ * d[n - 1] / gamma_) * inv_denominator_;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] -= factor * correction_[i];
    }
}

void PeriodicThomasFactor::solve_lanes(std::span<double> block, std::size_t sz) const {
    const std::size_t n = size();
    modified_.solve_lanes(block, sz);
    double* d = block.data();
    const double* last = d + sz * (n - 1);
    // Small fixed scratch keeps the correction loop free of allocation.
    constexpr std::size_t kChunk = 64;
    double factor[kChunk];
    for (std::size_t l0 = 0; l0 < sz; l0 += kChunk) {
        const std::size_t lanes = std::min(kChunk, sz - l0);
        for (std::size_t l = 0; l < lanes; ++l) {
            factor[l] = (d[l0 + l] + top_right_ * last[l0 + l] / gamma_) * inv_denominator_;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double z = correction_[i];
            double* cur = d + sz * i + l0;
            for (std::size_t l = 0; l < lanes; ++l) {
                cur[l] -= factor[l] * z;
            }
        }
    }
}

RhsBatch periodic_thomas_solve(const TridiagonalSystem& sys, const RhsBatch& rhs,
                               const SolverOptions& opts) {
    if (!sys.periodic()) {
        throw Error(ErrorKind::InvalidArgument, "periodic_thomas_solve needs a periodic system");
    }
    if (rhs.length() != sys.size()) {
        throw Error(ErrorKind::InvalidArgument, "right-hand side length differs from system size");
    }
    const PeriodicThomasFactor factor(sys, opts);
    RhsBatch out = rhs;
    for (std::size_t k = 0; k < out.count(); ++k) {
        factor.solve(out.row(k));
    }
    return out;
}

// ───────────────── Dense oracle ──────────────────────────────────────────

RhsBatch dense_solve_oracle(const TridiagonalSystem& sys, const RhsBatch& rhs) {
    const std::size_t n = sys.size();
    if (n > 4096) {
        throw Error(ErrorKind::InvalidArgument, "dense oracle limited to n <= 4096");
    }
    if (rhs.length() != n) {
        throw Error(ErrorKind::InvalidArgument, "right-hand side length differs from system size");
    }
    const std::size_t m = rhs.count();
    // Augmented [A | D^T], row-major, width n + m.
    const std::size_t width = n + m;
    std::vector<double> mat(n * width, 0.0);
    auto at = [&](std::size_t r, std::size_t c) -> double& { return mat[r * width + c]; };
    for (std::size_t i = 0; i < n; ++i) {
        at(i, i) += sys.diag()[i];
        at(i, (i + n - 1) % n) += sys.a(i);
        at(i, (i + 1) % n) += sys.c(i);
        for (std::size_t k = 0; k < m; ++k) {
            at(i, n + k) = rhs.row(k)[i];
        }
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(at(r, col)) > std::abs(at(piv, col))) {
                piv = r;
            }
        }
        if (!(std::abs(at(piv, col)) > 1e-300)) {
            throw Error(ErrorKind::SingularMatrix, "zero pivot in column " + std::to_string(col));
        }
        if (piv != col) {
            std::swap_ranges(mat.begin() + static_cast<std::ptrdiff_t>(piv * width),
                             mat.begin() + static_cast<std::ptrdiff_t>((piv + 1) * width),
                             mat.begin() + static_cast<std::ptrdiff_t>(col * width));
        }
        const double inv = 1.0 / at(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = at(r, col) * inv;
            if (factor == 0.0) {
                continue;
            }
            for (std::size_t c = col; c < width; ++c) {
                at(r, c) -= factor * at(col, c);
            }
        }
    }
    RhsBatch out(m, n);
    for (std::size_t k = 0; k < m; ++k) {
        auto u = out.row(k);
        for (std::size_t i = n; i-- > 0;) {
            double s = at(i, n + k);
            for (std::size_t c = i + 1; c < n; ++c) {
                s -= at(i, c) * u[c];
            }
            u[i] = s / at(i, i);
        }
    }
    return out;
}

} // namespace tds
