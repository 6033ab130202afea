#ifndef BALPA_LINEAR_OPERATOR_HPP
#define BALPA_LINEAR_OPERATOR_HPP

#include <functional>
#include <optional>
#include <random>
#include <utility>

#include "balpa/core.hpp"

namespace balpa {

/// Result of a spectral-norm estimate: the dominant eigenvalue of A^T A,
/// the relative residual achieved, and whether the tolerance was met.
struct NormEstimate {
  double value = 0.0;
  double residual = 0.0;
  bool converged = false;
};

/// A linear map with apply/adjoint access. Either backed by a dense matrix
/// or composed from callables (used for the lifted operator and matrix-free
/// paths). The squared operator norm ||A^T A|| is cached write-once.
class LinearOperator {
 public:
  using ApplyFn = std::function<Vector(const Vector &)>;

  LinearOperator() = default;

  explicit LinearOperator(Matrix A) : rows_(A.rows()), cols_(A.cols()), dense_(std::move(A)) {}

  LinearOperator(Index rows, Index cols, ApplyFn apply, ApplyFn adjoint)
      : rows_(rows), cols_(cols), apply_(std::move(apply)), adjoint_(std::move(adjoint)) {}

  static LinearOperator Zero(Index rows, Index cols) {
    return LinearOperator(Matrix::Zero(rows, cols));
  }

  static LinearOperator Identity(Index n) {
    return LinearOperator(Matrix::Identity(n, n));
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  Vector apply(const Vector &v) const {
    require(v.size() == cols_, "LinearOperator::apply: dimension mismatch, got " +
                                   std::to_string(v.size()) + " expected " + std::to_string(cols_));
    if (dense_) return (*dense_) * v;
    return apply_(v);
  }

  Vector adjoint(const Vector &w) const {
    require(w.size() == rows_, "LinearOperator::adjoint: dimension mismatch, got " +
                                   std::to_string(w.size()) + " expected " + std::to_string(rows_));
    if (dense_) return dense_->transpose() * w;
    return adjoint_(w);
  }

  bool has_dense() const { return dense_.has_value(); }
  const Matrix &dense() const {
    require(dense_.has_value(), "LinearOperator: no dense representation");
    return *dense_;
  }

  /// Materializes the matrix by applying to basis vectors. Intended for
  /// desk-scale diagnostics only.
  Matrix to_dense() const {
    if (dense_) return *dense_;
    Matrix A(rows_, cols_);
    Vector e = Vector::Zero(cols_);
    for (Index j = 0; j < cols_; ++j) {
      e(j) = 1.0;
      A.col(j) = apply_(e);
      e(j) = 0.0;
    }
    return A;
  }

  std::optional<double> cached_norm_sq() const { return norm_sq_cache_; }
  void set_norm_sq(double v) const { norm_sq_cache_ = v; }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::optional<Matrix> dense_;
  ApplyFn apply_;
  ApplyFn adjoint_;
  mutable std::optional<double> norm_sq_cache_;
};

/// Power iteration on A^T A from a fixed seeded start vector. Returns the
/// dominant eigenvalue estimate; caches the value in `op` on convergence.
inline NormEstimate op_norm_sq_full(const LinearOperator &op, double tol = 1e-10,
                                    int max_iter = 5000) {
  require(tol > 0, "op_norm_sq: tol must be positive");
  if (auto c = op.cached_norm_sq()) return {*c, 0.0, true};
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(op.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
  double nv = v.norm();
  if (nv == 0.0) return {0.0, 0.0, true};
  v /= nv;
  double lambda = 0.0;
  double residual = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = op.adjoint(op.apply(v));
    lambda = v.dot(w);
    residual = (w - lambda * v).norm();
    double wn = w.norm();
    if (wn == 0.0) {
      op.set_norm_sq(0.0);
      return {0.0, 0.0, true};
    }
    if (residual <= tol * std::max(1.0, std::abs(lambda))) {
      op.set_norm_sq(lambda);
      return {lambda, residual, true};
    }
    v = w / wn;
  }
  return {lambda, residual, false};
}

inline double op_norm_sq(const LinearOperator &op, double tol = 1e-10, int max_iter = 5000) {
  return op_norm_sq_full(op, tol, max_iter).value;
}

}  // namespace balpa

#endif  // BALPA_LINEAR_OPERATOR_HPP
