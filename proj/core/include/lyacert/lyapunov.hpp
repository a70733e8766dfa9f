#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Core>

namespace lyacert {

// ln(1 + e^x), overflow-safe and strictly positive for finite x.
double softplus(double x);

// d/dx softplus = logistic sigmoid, in (0, 1).
double softplus_grad(double x);

// Number of free entries in an n x n lower-triangular factor.
constexpr std::size_t factor_entry_count(std::size_t n) { return n * (n + 1) / 2; }

// Lower-triangular L with strictly positive diagonal, so Q = L L^T is
// positive definite.
class CholeskyFactor {
 public:
  // Throws DimensionMismatch if `lower` is not square, has nonzero entries
  // above the diagonal, or a diagonal entry <= 0.
  explicit CholeskyFactor(Eigen::MatrixXd lower);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return lower_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return lower_(i, j); }

 private:
  Eigen::MatrixXd lower_;
};

// Symmetric positive-definite Q = L L^T.
class QuadraticMatrix {
 public:
  explicit QuadraticMatrix(Eigen::MatrixXd q) : q_(std::move(q)) {}

  std::size_t dim() const noexcept { return static_cast<std::size_t>(q_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return q_; }

 private:
  Eigen::MatrixXd q_;
};

/// Maps an unconstrained network output onto a Cholesky factor.
///
/// Layout of `raw` (length n(n+1)/2): the first n entries are the diagonal,
/// L_ii = diag_floor + softplus(raw_i); the remaining n(n-1)/2 entries fill the
/// strict lower triangle row by row (L_10, L_20, L_21, L_30, ...) unchanged.
CholeskyFactor assemble_factor(std::span<const double> raw, std::size_t n, double diag_floor);

QuadraticMatrix gram(const CholeskyFactor& factor);

// V(xi) = xi^T L L^T xi, evaluated as ||L^T xi||^2.
double lyapunov_value(const CholeskyFactor& factor, const Eigen::VectorXd& xi);

// dV/dL = 2 xi (xi^T L), zeroed above the diagonal.
Eigen::MatrixXd value_grad_factor(const CholeskyFactor& factor, const Eigen::VectorXd& xi);

// Pulls a gradient with respect to L back onto the raw vector that produced
// it through assemble_factor (softplus' on diagonal slots, identity elsewhere).
Eigen::VectorXd factor_grad_to_raw(std::span<const double> raw, const Eigen::MatrixXd& grad_factor);

}  // namespace lyacert
