/**
 * @file compact_fd.hpp
 * @brief Compact (Padé-type) finite-difference operators and an order-of-accuracy harness.
 *
 * Interior rows read
 *
 *     alpha f'_{j-1} + f'_j + alpha f'_{j+1} = sum_k w_k f_{j+k},  k = -2..2
 *
 * so the derivative is one tridiagonal solve on a 5-point right-hand side.
 */

#pragma once

#include "tds/distd2.hpp"
#include "tds/tridiag.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace tds {

struct CompactScheme {
    int derivative_order = 1;
    double alpha = 0.0; ///< off-diagonal weight of the implicit side
    double a_w = 0.0;   ///< weight of the +-1 differences
    double b_w = 0.0;   ///< weight of the +-2 differences
    int formal_order = 0;
    double h = 1.0;

    /// Interior right-hand-side weights for offsets -2..2.
    [[nodiscard]] std::array<double, 5> rhs_weights() const noexcept;
};

/// alpha = 1/3, a = 14/9, b = 1/9.
[[nodiscard]] CompactScheme sixth_order_first_derivative(double h);
/// Sixth-order second derivative: alpha = 2/11, a = 12/11, b = 3/11.
[[nodiscard]] CompactScheme second_derivative_scheme(double h);

/// Row treatment at the two ends of a non-periodic line.
enum class BoundaryClosure {
    /// Explicit one-sided second-order row at the edge, fourth-order compact
    /// row next to it. Keeps the matrix strictly diagonally dominant.
    Dominant,
    /// Third-order compact edge row (alpha = 2), exact on cubics but not
    /// diagonally dominant. First derivative only.
    ThirdOrder,
};

struct CompactOperator {
    TridiagonalSystem system;
    StencilCoeffs stencil;
};

/// @throws Error InvalidArgument for n < 5 or an unsupported closure.
[[nodiscard]] CompactOperator assemble(const CompactScheme& scheme, std::size_t n, bool periodic,
                                       BoundaryClosure closure = BoundaryClosure::Dominant);

enum class DerivativeSolver { Thomas, Dense, DistD2 };

/// Applies an assembled operator to one line. Thomas means the periodic
/// variant for periodic operators. DistD2 splits the line evenly over `ranks`.
[[nodiscard]] std::vector<double> differentiate(const CompactOperator& op, std::span<const double> u,
                                                DerivativeSolver solver, std::size_t ranks = 1);

struct TestFunction {
    std::function<double(double)> value;
    std::function<double(double)> derivative; ///< of the scheme's order
};

/// sin on [0, 2pi) with its first or second derivative.
[[nodiscard]] TestFunction sine_test_function(int derivative_order);

struct AccuracyReport {
    std::vector<std::size_t> n;
    std::vector<double> error; ///< max-norm error per n
    double slope = 0.0;        ///< fitted convergence order (positive)
};

/// Least-squares order from (n, error) pairs, skipping errors within
/// 100 machine epsilons of zero. NaN with fewer than two usable points.
[[nodiscard]] double fitted_order(std::span<const std::size_t> n, std::span<const double> error);

/**
 * @brief Convergence study on a periodic grid over [0, 2pi).
 * @param make_scheme scheme for a given spacing h
 */
[[nodiscard]] AccuracyReport order_of_accuracy(const std::function<CompactScheme(double)>& make_scheme,
                                               DerivativeSolver solver, std::span<const std::size_t> n_list,
                                               std::size_t ranks = 2, const TestFunction* fn = nullptr);

} // namespace tds
