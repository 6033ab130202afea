#ifndef BALPA_PROBLEM_HPP
#define BALPA_PROBLEM_HPP

#include <memory>
#include <optional>
#include <utility>

#include "balpa/linear_operator.hpp"
#include "balpa/oracles.hpp"
#include "balpa/prox.hpp"

namespace balpa {

/// min_x f(x) + r(Bx) + delta_0(Dx - d).
/// r/B may be absent (p1 = 0), in which case the problem is smooth plus
/// equality constraints.
struct CompositeProblem {
  SmoothOracle f;           // dim n
  std::optional<ProxOracle> r;  // dim p1
  LinearOperator B;         // p1 x n (p1 may be 0)
  LinearOperator D;         // p2 x n (p2 may be 0)
  Vector d;                 // p2

  Index n() const { return f.dim; }
  Index p1() const { return r ? r->dim : 0; }
  Index p2() const { return d.size(); }

  void validate() const {
    require(f.dim > 0, "CompositeProblem: empty smooth oracle");
    if (r) {
      require(B.rows() == r->dim && B.cols() == f.dim, "CompositeProblem: B dims inconsistent");
    }
    if (d.size() > 0) {
      require(D.rows() == d.size() && D.cols() == f.dim, "CompositeProblem: D dims inconsistent");
    }
  }
};

/// The lifted form: X = (x, y) with Bx = y introduced as a constraint.
///   F(X) = f(x), R(X) = r(y), Dop(x, y) = (Dx, Bx - y), dvec = (d, 0).
struct LiftedProblem {
  SmoothOracle F;       // on R^{n+p1}; gradient is (grad f(x), 0)
  SmoothOracle f_base;  // the original f on R^n (finite-sum access lives here)
  ProxOracle R;         // identity on the x block, prox of r on the y block
  LinearOperator Dop;   // (p2+p1) x (n+p1)
  Vector dvec;          // (d, 0)
  Index n = 0;
  Index p1 = 0;
  Index p2 = 0;

  Index primal_dim() const { return n + p1; }
  Index dual_dim() const { return p2 + p1; }

  double objective(const Vector &X) const { return F.value(X) + R.value(X); }
  double constraint_violation(const Vector &X) const { return (Dop.apply(X) - dvec).norm(); }
};

/// Lifts problem (1) into the equality-constrained form on (x, y).
/// When dims are small the lifted operator is materialized dense; otherwise it
/// stays composed from B and D.
inline LiftedProblem lift_problem(const CompositeProblem &p, Index dense_threshold = 200) {
  p.validate();
  LiftedProblem lp;
  lp.n = p.n();
  lp.p1 = p.p1();
  lp.p2 = p.p2();
  const Index n = lp.n, p1 = lp.p1, p2 = lp.p2;

  auto f = std::make_shared<SmoothOracle>(p.f);
  lp.f_base = p.f;
  lp.F.dim = n + p1;
  lp.F.lipschitz_L = p.f.lipschitz_L;
  lp.F.strong_convexity_mu = 0.0;  // the y block carries no curvature
  lp.F.value = [f, n](const Vector &X) { return f->value(X.head(n)); };
  lp.F.gradient = [f, n, p1](const Vector &X) -> Vector {
    Vector g = Vector::Zero(n + p1);
    g.head(n) = f->gradient(X.head(n));
    return g;
  };

  if (p.r) {
    auto r = std::make_shared<ProxOracle>(*p.r);
    lp.R.dim = n + p1;
    lp.R.prox = [r, n, p1](const Vector &Y, double alpha) -> Vector {
      Vector out(n + p1);
      out.head(n) = Y.head(n);
      out.tail(p1) = r->prox(Y.tail(p1), alpha);
      return out;
    };
    lp.R.value = [r, n, p1](const Vector &Y) { return r->value(Y.tail(p1)); };
  } else {
    lp.R = ProxOracle::ZeroFunction(n + p1);
  }

  if (p1 == 0) {
    lp.Dop = p.D;
    lp.dvec = p.d;
  } else if (n + p1 <= dense_threshold && p.B.has_dense() && (p2 == 0 || p.D.has_dense())) {
    Matrix Dd(p2 + p1, n + p1);
    Dd.setZero();
    if (p2 > 0) Dd.topLeftCorner(p2, n) = p.D.dense();
    Dd.bottomLeftCorner(p1, n) = p.B.dense();
    Dd.bottomRightCorner(p1, p1) = -Matrix::Identity(p1, p1);
    lp.Dop = LinearOperator(std::move(Dd));
    lp.dvec = Vector::Zero(p2 + p1);
    lp.dvec.head(p2) = p.d;
  } else {
    auto B = std::make_shared<LinearOperator>(p.B);
    auto D = std::make_shared<LinearOperator>(p.D);
    lp.Dop = LinearOperator(
        p2 + p1, n + p1,
        [B, D, n, p1, p2](const Vector &X) -> Vector {
          Vector out(p2 + p1);
          if (p2 > 0) out.head(p2) = D->apply(X.head(n));
          out.tail(p1) = B->apply(X.head(n)) - X.tail(p1);
          return out;
        },
        [B, D, n, p1, p2](const Vector &L) -> Vector {
          Vector out(n + p1);
          out.head(n) = B->adjoint(L.tail(p1));
          if (p2 > 0) out.head(n) += D->adjoint(L.head(p2));
          out.tail(p1) = -L.tail(p1);
          return out;
        });
    lp.dvec = Vector::Zero(p2 + p1);
    lp.dvec.head(p2) = p.d;
  }
  return lp;
}

}  // namespace balpa

#endif  // BALPA_PROBLEM_HPP
