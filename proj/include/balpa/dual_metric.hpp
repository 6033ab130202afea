#ifndef BALPA_DUAL_METRIC_HPP
#define BALPA_DUAL_METRIC_HPP

#include <memory>
#include <utility>
#include <vector>

#include "balpa/linear_operator.hpp"

namespace balpa {

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite operator given as a callable. `diag` may be empty (identity
/// preconditioner).
inline Vector pcg_solve(const std::function<Vector(const Vector &)> &applyA, const Vector &b,
                        const Vector &diag, double rel_tol = 1e-12, int max_iter = 10000) {
  const Index n = b.size();
  Vector x = Vector::Zero(n);
  Vector r = b;
  const double bnorm = b.norm();
  if (bnorm == 0.0) return x;
  auto precond = [&diag](const Vector &v) -> Vector {
    if (diag.size() == 0) return v;
    return v.cwiseQuotient(diag);
  };
  Vector z = precond(r);
  Vector p = z;
  double rz = r.dot(z);
  for (int it = 0; it < max_iter; ++it) {
    if (r.norm() <= rel_tol * bnorm) return x;
    Vector Ap = applyA(p);
    double alpha = rz / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    z = precond(r);
    double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  if (r.norm() > rel_tol * bnorm) {
    throw std::runtime_error("pcg_solve: no convergence, relative residual " +
                             std::to_string(r.norm() / bnorm));
  }
  return x;
}

/// The fixed dual metric Q with a cached SPD factorization.
/// Two shapes: Q = (1/gamma) I + alpha D D^T (BALPA), or a block-diagonal
/// preconditioner given by explicit dense blocks (distributed compact form).
/// Also evaluates the H/M norms of the convergence analysis.
class DualMetric {
 public:
  double gamma = 1.0;
  double alpha_bar = 1.0;

  static DualMetric BalpaDiagonalPlus(const LinearOperator &Dop, double alpha, double gamma,
                                      Index dense_threshold = 2000) {
    require(alpha > 0 && gamma > 0, "DualMetric: alpha and gamma must be positive");
    DualMetric m;
    m.gamma = gamma;
    m.alpha_bar = alpha;
    m.dual_dim_ = Dop.rows();
    m.Dop_ = std::make_shared<LinearOperator>(Dop);
    if (Dop.rows() <= dense_threshold) {
      Matrix Dd = Dop.to_dense();
      Matrix Q = (1.0 / gamma) * Matrix::Identity(Dop.rows(), Dop.rows());
      Q.noalias() += alpha * Dd * Dd.transpose();
      m.set_dense(std::move(Q));
    } else {
      auto D = m.Dop_;
      m.applyQ_ = [D, alpha, gamma](const Vector &v) -> Vector {
        return (1.0 / gamma) * v + alpha * D->apply(D->adjoint(v));
      };
      m.diag_ = Vector();  // identity preconditioner; diag of DD^T unavailable matrix-free
    }
    return m;
  }

  static DualMetric BlockDiagonal(std::vector<Matrix> blocks, double alpha, double gamma,
                                  const LinearOperator &Dop) {
    DualMetric m;
    m.gamma = gamma;
    m.alpha_bar = alpha;
    m.Dop_ = std::make_shared<LinearOperator>(Dop);
    Index dim = 0;
    for (const auto &b : blocks) dim += b.rows();
    m.dual_dim_ = dim;
    Matrix Q = Matrix::Zero(dim, dim);
    Index off = 0;
    for (auto &b : blocks) {
      Q.block(off, off, b.rows(), b.rows()) = b;
      off += b.rows();
    }
    m.set_dense(std::move(Q));
    return m;
  }

  Index dual_dim() const { return dual_dim_; }
  bool has_dense() const { return Q_.size() > 0; }
  const Matrix &Q_dense() const { return Q_; }
  const LinearOperator &Dop() const { return *Dop_; }

  Vector apply_Q(const Vector &v) const {
    if (has_dense()) return Q_.selfadjointView<Eigen::Lower>() * v;
    return applyQ_(v);
  }

  Vector solve(const Vector &rhs) const {
    if (has_dense()) return llt_.solve(rhs);
    return pcg_solve(applyQ_, rhs, diag_, 1e-12);
  }

  double q_norm_sq(const Vector &v) const { return v.dot(apply_Q(v)); }

  double q_operator_norm() const {
    require(has_dense(), "q_operator_norm: dense Q required");
    return Q_.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
  }

  /// J = Q - alpha_bar D D^T, the positive definiteness of which drives
  /// convergence. Dense evaluation for diagnostics.
  Matrix J_dense() const {
    require(has_dense(), "J_dense: dense Q required");
    Matrix Dd = Dop_->to_dense();
    return Matrix(Q_.selfadjointView<Eigen::Lower>()) - alpha_bar * Dd * Dd.transpose();
  }

 private:
  void set_dense(Matrix Q) {
    Q_ = std::move(Q);
    llt_.compute(Q_);
    if (llt_.info() != Eigen::Success) {
      // locate the offending pivot for the error message
      Eigen::LDLT<Matrix> ldlt(Q_);
      Index bad = 0;
      Vector dl = ldlt.vectorD();
      for (Index i = 0; i < dl.size(); ++i) {
        if (dl(i) <= 0) {
          bad = i;
          break;
        }
      }
      throw std::runtime_error("DualMetric: Q is numerically indefinite at pivot " +
                               std::to_string(bad));
    }
    diag_ = Q_.diagonal();
  }

  Index dual_dim_ = 0;
  Matrix Q_;
  Eigen::LLT<Matrix> llt_;
  Vector diag_;
  std::function<Vector(const Vector &)> applyQ_;
  std::shared_ptr<LinearOperator> Dop_;
};

inline DualMetric build_dual_metric(const LinearOperator &Dop, double alpha, double gamma,
                                    Index dense_threshold = 2000) {
  return DualMetric::BalpaDiagonalPlus(Dop, alpha, gamma, dense_threshold);
}

struct DualUpdateResult {
  Vector lambda_next;
  double residual = 0.0;
};

/// The balanced dual update: Lambda^{k+1} = Lambda^k + Q^{-1}(D Xbar - d).
inline DualUpdateResult dual_update(const DualMetric &metric, const Vector &lambda,
                                    const LinearOperator &Dop, const Vector &xbar,
                                    const Vector &dvec) {
  Vector rhs = Dop.apply(xbar) - dvec;
  Vector delta = metric.solve(rhs);
  DualUpdateResult res;
  res.residual = (metric.apply_Q(delta) - rhs).norm();
  if (res.residual > 1e-10 * (1.0 + rhs.norm())) {
    throw std::runtime_error("dual_update: solve residual " + std::to_string(res.residual) +
                             " exceeds contract");
  }
  res.lambda_next = lambda + delta;
  return res;
}

}  // namespace balpa

#endif  // BALPA_DUAL_METRIC_HPP
