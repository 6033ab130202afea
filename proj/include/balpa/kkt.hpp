#ifndef BALPA_KKT_HPP
#define BALPA_KKT_HPP

#include <utility>

#include "balpa/linear_operator.hpp"

namespace balpa {

struct KktSolution {
  Vector x;
  Vector lambda;
};

/// Reference solver for min (1/2) x^T H x + c^T x s.t. Dx = d via the dense
/// KKT system. Independent of the iterative solvers; used as a test oracle.
inline KktSolution kkt_oracle(const Matrix &H, const Vector &c, const LinearOperator &D,
                              const Vector &d) {
  const Index n = c.size();
  const Index p = d.size();
  require(H.rows() == n && H.cols() == n, "kkt_oracle: H dims inconsistent");
  if (p == 0) {
    KktSolution s;
    s.x = H.ldlt().solve(-c);
    s.lambda = Vector::Zero(0);
    return s;
  }
  require(D.rows() == p && D.cols() == n, "kkt_oracle: D dims inconsistent");
  Matrix Dd = D.to_dense();
  Eigen::ColPivHouseholderQR<Matrix> qr(Dd.transpose());
  Index rank = qr.rank();
  if (rank < p) {
    throw std::invalid_argument("kkt_oracle: D is rank deficient (" + std::to_string(p - rank) +
                                " dependent rows)");
  }
  Matrix K(n + p, n + p);
  K.setZero();
  K.topLeftCorner(n, n) = H;
  K.topRightCorner(n, p) = Dd.transpose();
  K.bottomLeftCorner(p, n) = Dd;
  Vector rhs(n + p);
  rhs.head(n) = -c;
  rhs.tail(p) = d;
  Vector sol = K.fullPivLu().solve(rhs);
  KktSolution s;
  s.x = sol.head(n);
  s.lambda = sol.tail(p);
  double r1 = (H * s.x + c + Dd.transpose() * s.lambda).norm();
  double r2 = (Dd * s.x - d).norm();
  double scale = 1.0 + s.x.norm() + s.lambda.norm();
  require(r1 <= 1e-8 * scale && r2 <= 1e-8 * scale, "kkt_oracle: residual check failed");
  return s;
}

}  // namespace balpa

#endif  // BALPA_KKT_HPP
