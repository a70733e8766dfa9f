#include "lyacert/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lyacert/error.hpp"

namespace lyacert {

double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  // log1p(e^x) == e^x to double precision here; clamp so the result stays
  // positive once e^x underflows.
  if (x < -30.0) return std::max(std::exp(x), std::numeric_limits<double>::min());
  return std::log1p(std::exp(x));
}

double softplus_grad(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double ex = std::exp(x);
  return ex / (1.0 + ex);
}

CholeskyFactor::CholeskyFactor(Eigen::MatrixXd lower) : lower_(std::move(lower)) {
  if (lower_.rows() != lower_.cols() || lower_.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "Cholesky factor must be square and non-empty");
  }
  for (Eigen::Index i = 0; i < lower_.rows(); ++i) {
    if (!(lower_(i, i) > 0.0)) {
      throw Error(ErrorCode::DimensionMismatch,
                  "Cholesky factor diagonal entry " + std::to_string(i) + " is not positive");
    }
    for (Eigen::Index j = i + 1; j < lower_.cols(); ++j) {
      if (lower_(i, j) != 0.0) {
        throw Error(ErrorCode::DimensionMismatch, "Cholesky factor is not lower-triangular");
      }
    }
  }
}

CholeskyFactor assemble_factor(std::span<const double> raw, std::size_t n, double diag_floor) {
  if (raw.size() != factor_entry_count(n)) {
    throw Error(ErrorCode::LengthMismatch, "raw factor vector has length " +
                                               std::to_string(raw.size()) + ", need " +
                                               std::to_string(factor_entry_count(n)));
  }
  if (!(diag_floor >= 0.0) || !std::isfinite(diag_floor)) {
    throw Error(ErrorCode::InvalidConfig, "diag_floor must be finite and >= 0");
  }
  const auto dim = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    lower(i, i) = diag_floor + softplus(raw[static_cast<std::size_t>(i)]);
  }
  std::size_t slot = n;
  for (Eigen::Index i = 1; i < dim; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) lower(i, j) = raw[slot++];
  }
  return CholeskyFactor(std::move(lower));
}

QuadraticMatrix gram(const CholeskyFactor& factor) {
  const auto& lower = factor.matrix();
  const Eigen::Index n = lower.rows();
  Eigen::MatrixXd q(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      // Row j of L is zero beyond column j, so the dot product stops there.
      double acc = 0.0;
      for (Eigen::Index k = 0; k <= j; ++k) acc += lower(i, k) * lower(j, k);
      q(i, j) = acc;
      q(j, i) = acc;
    }
  }
  return QuadraticMatrix(std::move(q));
}

double lyapunov_value(const CholeskyFactor& factor, const Eigen::VectorXd& xi) {
  if (static_cast<std::size_t>(xi.size()) != factor.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "state length " + std::to_string(xi.size()) +
                                                  " does not match factor dimension " +
                                                  std::to_string(factor.dim()));
  }
  return (factor.matrix().transpose() * xi).squaredNorm();
}

Eigen::MatrixXd value_grad_factor(const CholeskyFactor& factor, const Eigen::VectorXd& xi) {
  if (static_cast<std::size_t>(xi.size()) != factor.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "state length " + std::to_string(xi.size()) +
                                                  " does not match factor dimension " +
                                                  std::to_string(factor.dim()));
  }
  const Eigen::RowVectorXd projected = xi.transpose() * factor.matrix();
  Eigen::MatrixXd grad = 2.0 * xi * projected;
  return grad.triangularView<Eigen::Lower>();
}

Eigen::VectorXd factor_grad_to_raw(std::span<const double> raw, const Eigen::MatrixXd& grad_factor) {
  const auto n = static_cast<std::size_t>(grad_factor.rows());
  if (grad_factor.cols() != grad_factor.rows() || raw.size() != factor_entry_count(n)) {
    throw Error(ErrorCode::LengthMismatch, "raw vector and factor gradient disagree in size");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(raw.size()));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out[ii] = grad_factor(ii, ii) * softplus_grad(raw[i]);
  }
  Eigen::Index slot = static_cast<Eigen::Index>(n);
  for (Eigen::Index i = 1; i < grad_factor.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) out[slot++] = grad_factor(i, j);
  }
  return out;
}

}  // namespace lyacert
