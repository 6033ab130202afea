#ifndef BALPA_SOLVERS_HPP
#define BALPA_SOLVERS_HPP

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "balpa/dual_metric.hpp"
#include "balpa/problem.hpp"
#include "balpa/stochastic.hpp"

namespace balpa {

enum class SolverKind { kBalpa, kCondatVu, kTriPd, kPd3o, kPdfp, kAfba };

inline std::string solver_name(SolverKind k) {
  switch (k) {
    case SolverKind::kBalpa: return "balpa";
    case SolverKind::kCondatVu: return "condat_vu";
    case SolverKind::kTriPd: return "tripd";
    case SolverKind::kPd3o: return "pd3o";
    case SolverKind::kPdfp: return "pdfp";
    case SolverKind::kAfba: return "afba";
  }
  return "?";
}

/// One full iterate of the unified framework: primal X, intermediate Xbar,
/// dual Lambda. After a step, Xbar holds the intermediate that produced X.
struct SaddleState {
  Vector X;
  Vector Xbar;
  Vector Lambda;
  long iter = 0;
  std::optional<Vector> grad_cache;   // last gradient used (lifted)
  double dual_residual = 0.0;         // residual of the last dual solve
};

enum class StopMetric { kRelativeErrorToReference, kFixedPointResidual, kConstraintViolation };

struct SolverConfig {
  SolverKind kind = SolverKind::kBalpa;
  double alpha = 0.0;           // primal stepsize (alpha_bar for schedules)
  double beta = 0.0;            // dual stepsize, baselines only
  double gamma = 1.0;           // BALPA only
  StepsizeSchedule schedule;    // defaults to constant at alpha
  long max_iter = 1000;
  double tol = 1e-8;
  StopMetric stop_metric = StopMetric::kFixedPointResidual;
  bool skip_stepsize_check = false;
  std::optional<Vector> x0;     // lifted initial point, default zeros
};

struct TraceRecord {
  long iter = 0;
  double objective = 0.0;
  double constraint_violation = 0.0;
  double fixed_point_residual = 0.0;
  std::optional<double> relative_error;
  std::optional<double> ergodic_gap;
  double wall_time = 0.0;
  double epoch_equivalent = 0.0;
};

inline void write_trace_csv(const std::vector<TraceRecord> &trace, std::ostream &os) {
  os << "iter,objective,constraint_violation,fixed_point_residual,relative_error,"
        "ergodic_gap,wall_time_s,epochs\n";
  for (const auto &t : trace) {
    os << t.iter << ',' << t.objective << ',' << t.constraint_violation << ','
       << t.fixed_point_residual << ',';
    if (t.relative_error) os << *t.relative_error;
    os << ',';
    if (t.ergodic_gap) os << *t.ergodic_gap;
    os << ',' << t.wall_time << ',' << t.epoch_equivalent << '\n';
  }
}

inline void write_trace_csv(const std::vector<TraceRecord> &trace, const std::string &path) {
  std::ofstream os(path);
  require(os.good(), "write_trace_csv: cannot open " + path);
  write_trace_csv(trace, os);
}

struct StepsizeVerdict {
  bool satisfied = false;
  double margin = 0.0;  // signed slack of the binding constraint
};

/// Table-1 conditions. normDD is |D^T D| of the (lifted) operator the dual
/// update sees; BALPA's condition does not involve it.
inline StepsizeVerdict check_stepsize(SolverKind kind, double alpha, double beta, double gamma,
                                      double L, double normDD) {
  require(L > 0, "check_stepsize: L must be positive");
  require(normDD >= 0, "check_stepsize: normDD must be nonnegative");
  StepsizeVerdict v;
  switch (kind) {
    case SolverKind::kBalpa:
      v.margin = std::min({alpha, 2.0 / L - alpha, gamma});
      break;
    case SolverKind::kCondatVu:
    case SolverKind::kTriPd:
      v.margin = std::min({alpha, beta, 1.0 - (alpha * beta * normDD + alpha * L / 2.0)});
      break;
    case SolverKind::kPd3o:
    case SolverKind::kPdfp:
    case SolverKind::kAfba:
      v.margin = std::min({alpha, 2.0 / L - alpha, beta, 1.0 - alpha * beta * normDD});
      break;
  }
  v.satisfied = v.margin > 0;
  return v;
}

/// One BALPA iteration: primal prox, balanced dual update, correction.
/// g is the (stochastic) lifted gradient at state.X with zero y block.
inline SaddleState balpa_step(const SaddleState &state, const LiftedProblem &lp,
                              const DualMetric &metric, double alpha_k, const Vector &g) {
  require(alpha_k > 0 && alpha_k <= metric.alpha_bar * (1.0 + 1e-12),
          "balpa_step: alpha_k must satisfy 0 < alpha_k <= alpha_bar");
  SaddleState next;
  next.Xbar = lp.R.prox(state.X - alpha_k * (lp.Dop.adjoint(state.Lambda) + g), alpha_k);
  DualUpdateResult du = dual_update(metric, state.Lambda, lp.Dop, next.Xbar, lp.dvec);
  next.Lambda = std::move(du.lambda_next);
  next.dual_residual = du.residual;
  next.X = next.Xbar + alpha_k * lp.Dop.adjoint(state.Lambda - next.Lambda);
  next.iter = state.iter + 1;
  next.grad_cache = g;
  return next;
}

/// One iteration of a Table-3 baseline. All share the primal half-step
/// Xbar = prox_R^alpha(X - alpha (D^T Lambda + grad F(X))).
inline SaddleState baseline_step(SolverKind kind, const SaddleState &state,
                                 const LiftedProblem &lp, double alpha, double beta) {
  require(kind != SolverKind::kBalpa, "baseline_step: use balpa_step for BALPA");
  Vector gX = lp.F.gradient(state.X);
  SaddleState next;
  next.Xbar = lp.R.prox(state.X - alpha * (lp.Dop.adjoint(state.Lambda) + gX), alpha);
  switch (kind) {
    case SolverKind::kCondatVu:
    case SolverKind::kTriPd: {
      next.X = 2.0 * next.Xbar - state.X;
      next.Lambda = state.Lambda + beta * (lp.Dop.apply(next.X) - lp.dvec);
      break;
    }
    case SolverKind::kPd3o: {
      next.X = 2.0 * next.Xbar - state.X + alpha * (gX - lp.F.gradient(next.Xbar));
      next.Lambda = state.Lambda + beta * (lp.Dop.apply(next.X) - lp.dvec);
      break;
    }
    case SolverKind::kPdfp: {
      next.Lambda = state.Lambda + beta * (lp.Dop.apply(next.Xbar) - lp.dvec);
      next.X = lp.R.prox(state.X - alpha * (lp.Dop.adjoint(next.Lambda) + gX), alpha);
      break;
    }
    case SolverKind::kAfba: {
      next.Lambda = state.Lambda + beta * (lp.Dop.apply(next.Xbar) - lp.dvec);
      next.X = next.Xbar + alpha * lp.Dop.adjoint(state.Lambda - next.Lambda);
      break;
    }
    default:
      throw std::invalid_argument("baseline_step: unknown kind");
  }
  next.iter = state.iter + 1;
  next.grad_cache = std::move(gX);
  return next;
}

/// Reference solution for stopping and gap metrics.
struct Reference {
  Vector xstar;                        // x block (dim n)
  std::optional<Vector> Xstar;         // full lifted primal
  std::optional<Vector> lambda_star;   // lifted dual
  std::optional<double> phi_star;      // F + R at the optimum
  double rho() const {
    require(lambda_star.has_value(), "Reference::rho: lambda_star required");
    double nl = lambda_star->norm();
    return std::max(1.0 + nl, 2.0 * nl);
  }
};

/// Running means of Xbar^k, Lambda^{k+1}, X^{k+1}, Xbar^{k+1} maintained in
/// O(dim) per iteration.
struct ErgodicAverages {
  Vector xbar_mean;     // (1/K) sum Xbar^k,   k = 0..K-1
  Vector lambda_mean;   // (1/K) sum Lambda^{k+1}
  Vector x_next_mean;   // (1/K) sum X^{k+1}
  Vector xbar_next_mean;  // (1/K) sum Xbar^{k+1} (shifted; used by Bregman gap)
  long K = 0;

  void accumulate(const Vector &xbar_k, const Vector &lambda_k1, const Vector &x_k1) {
    if (K == 0) {
      xbar_mean = xbar_k;
      lambda_mean = lambda_k1;
      x_next_mean = x_k1;
      xbar_next_mean = Vector::Zero(xbar_k.size());
    } else {
      double w = 1.0 / static_cast<double>(K + 1);
      xbar_mean += w * (xbar_k - xbar_mean);
      lambda_mean += w * (lambda_k1 - lambda_mean);
      x_next_mean += w * (x_k1 - x_next_mean);
      // mean of Xbar^1..Xbar^K (shifted by one step)
      xbar_next_mean += (xbar_k - xbar_next_mean) / static_cast<double>(K);
    }
    ++K;
  }
};

/// Mean of retained (Xbar^k, Lambda^{k+1}) pairs; direct-summation companion
/// to the incremental averages.
inline std::pair<Vector, Vector> ergodic_average(const std::vector<SaddleState> &trace) {
  require(!trace.empty(), "ergodic_average: empty trace");
  Vector xb = Vector::Zero(trace.front().Xbar.size());
  Vector lm = Vector::Zero(trace.front().Lambda.size());
  for (const auto &s : trace) {
    xb += s.Xbar;
    lm += s.Lambda;
  }
  double K = static_cast<double>(trace.size());
  return {xb / K, lm / K};
}

/// Per-iteration convergence diagnostics grounded in the H/M-norm analysis:
///   H: (X, Lambda) -> ((1/alpha) X, Q Lambda)
///   M: (X, Lambda) -> ((1/alpha - L/2) X, (Q - alpha DD^T) Lambda)
struct DiagnosticsRecord {
  double h_dist_sq = 0.0;        // |W^k - W*|_H^2
  double m_residual_sq = 0.0;    // |V^{k+1} - W^k|_M^2
  double phi_gap = 0.0;          // Phi(Xbar) - Phi(X*)
  double violation = 0.0;        // |D Xbar - d|
  double rho = 0.0;
};

inline double h_norm_sq(const DualMetric &metric, const Vector &X, const Vector &Lambda) {
  return X.squaredNorm() / metric.alpha_bar + metric.q_norm_sq(Lambda);
}

inline double m_norm_sq(const DualMetric &metric, const LiftedProblem &lp, const Vector &X,
                        const Vector &Lambda) {
  double cx = 1.0 / metric.alpha_bar - lp.F.lipschitz_L / 2.0;
  if (cx <= 0) {
    throw std::runtime_error("m_norm_sq: M is not positive definite (1/alpha - L/2 <= 0)");
  }
  double lam_part =
      metric.q_norm_sq(Lambda) - metric.alpha_bar * lp.Dop.adjoint(Lambda).squaredNorm();
  return cx * X.squaredNorm() + std::max(0.0, lam_part);
}

inline DiagnosticsRecord diagnostics(const SaddleState &state_k, const SaddleState &state_k1,
                                     const DualMetric &metric, const LiftedProblem &lp,
                                     const std::optional<Reference> &wstar) {
  DiagnosticsRecord rec;
  rec.m_residual_sq = m_norm_sq(metric, lp, state_k1.Xbar - state_k.X,
                                state_k1.Lambda - state_k.Lambda);
  rec.violation = lp.constraint_violation(state_k1.Xbar);
  if (wstar) {
    require(wstar->Xstar && wstar->lambda_star,
            "diagnostics: full (X*, Lambda*) required for Fejer/gap metrics");
    rec.h_dist_sq = h_norm_sq(metric, state_k.X - *wstar->Xstar,
                              state_k.Lambda - *wstar->lambda_star);
    if (wstar->phi_star) rec.phi_gap = lp.objective(state_k1.Xbar) - *wstar->phi_star;
    rec.rho = wstar->rho();
  }
  return rec;
}

struct SolveReport {
  SaddleState final_state;
  long iterations = 0;
  double epochs = 0.0;
  double wall_time = 0.0;
  bool converged = false;
  std::string stop_reason;
  double max_dual_residual = 0.0;
  ErgodicAverages averages;
  std::string rate_regime;  // which ergodic-rate regime alpha falls in

  std::string serialize() const {
    std::ostringstream os;
    os << "iterations " << iterations << '\n'
       << "epochs " << epochs << '\n'
       << "wall_time_s " << wall_time << '\n'
       << "converged " << (converged ? 1 : 0) << '\n'
       << "stop_reason " << stop_reason << '\n'
       << "max_dual_residual " << max_dual_residual << '\n'
       << "rate_regime " << rate_regime << '\n';
    return os.str();
  }
};

/// Driver around the unified framework / Table-3 baselines. Lambda^0 = 0
/// always. The estimator supplies the x-block gradient for BALPA; baselines
/// use the exact gradient. `gap_fn` overrides the ergodic-gap column.
inline std::pair<SolveReport, std::vector<TraceRecord>> run(
    const LiftedProblem &lp, const DualMetric &metric, const SolverConfig &config,
    EstimatorState *estimator = nullptr, const std::optional<Reference> &reference = std::nullopt,
    const std::function<double(const ErgodicAverages &)> &gap_fn = nullptr) {
  const Index np = lp.primal_dim();
  const double L = lp.F.lipschitz_L;
  const int m = std::max(1, lp.f_base.m());

  if (!config.skip_stepsize_check) {
    double normDD = 0.0;
    if (config.kind != SolverKind::kBalpa) normDD = op_norm_sq(lp.Dop, 1e-8);
    auto verdict = check_stepsize(config.kind, config.alpha, config.beta, config.gamma, L, normDD);
    if (!verdict.satisfied) {
      throw std::invalid_argument("run: stepsize condition violated for " +
                                  solver_name(config.kind) + ", margin " +
                                  std::to_string(verdict.margin));
    }
  }

  SaddleState state;
  state.X = config.x0 ? *config.x0 : Vector::Zero(np);
  state.Xbar = state.X;
  state.Lambda = Vector::Zero(lp.dual_dim());

  EstimatorState full_fallback = EstimatorState::Full();
  EstimatorState *est = estimator ? estimator : &full_fallback;
  if (est->kind == EstimatorKind::kSaga || est->kind == EstimatorKind::kLsvrg) {
    est->initialize(lp.f_base, state.X.head(lp.n));
  }

  SolveReport report;
  report.rate_regime = config.alpha < 1.0 / L ? "alpha<1/L (ergodic gap regime)"
                                              : "1/L<=alpha<2/L (non-ergodic regime)";
  std::vector<TraceRecord> trace;
  trace.reserve(static_cast<size_t>(std::min<long>(config.max_iter + 1, 1 << 20)));

  const double x0_err = reference ? (state.X.head(lp.n) - reference->xstar).norm() : 0.0;
  auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&t_start]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  auto make_record = [&](const SaddleState &s, double fpr) {
    TraceRecord t;
    t.iter = s.iter;
    t.objective = lp.objective(s.X);
    t.constraint_violation = lp.constraint_violation(s.X);
    t.fixed_point_residual = fpr;
    if (reference && x0_err > 0) {
      t.relative_error = (s.X.head(lp.n) - reference->xstar).norm() / x0_err;
    }
    if (report.averages.K > 0) {
      if (gap_fn) {
        t.ergodic_gap = gap_fn(report.averages);
      } else if (reference && reference->phi_star && reference->lambda_star) {
        t.ergodic_gap = lp.objective(report.averages.xbar_mean) - *reference->phi_star +
                        reference->rho() * lp.constraint_violation(report.averages.xbar_mean);
      }
    }
    t.wall_time = elapsed();
    t.epoch_equivalent = est->kind == EstimatorKind::kFull && config.kind != SolverKind::kBalpa
                             ? 0.0
                             : static_cast<double>(est->component_evals()) / m;
    return t;
  };

  // epoch accounting for full-gradient baselines: grads-per-iter * m evals
  double baseline_epochs = 0.0;
  auto baseline_grads_per_iter = [&]() {
    return (config.kind == SolverKind::kPd3o || config.kind == SolverKind::kPdfp) ? 2.0 : 1.0;
  };

  trace.push_back(make_record(state, std::numeric_limits<double>::infinity()));

  auto stop_value = [&](const TraceRecord &t) {
    switch (config.stop_metric) {
      case StopMetric::kRelativeErrorToReference:
        require(t.relative_error.has_value(), "run: relative_error stop needs a reference");
        return *t.relative_error;
      case StopMetric::kFixedPointResidual:
        return t.fixed_point_residual;
      case StopMetric::kConstraintViolation:
        return t.constraint_violation;
    }
    return 0.0;
  };

  bool converged = std::isfinite(config.tol) ? false : true;
  std::string reason = converged ? "tol=inf, initial state" : "";
  long k = 0;
  for (; k < config.max_iter && !converged; ++k) {
    double alpha_k = config.alpha;
    if (config.schedule.kind != ScheduleKind::kConstant) {
      alpha_k = schedule_step(config.schedule, k).alpha_k;
    }
    SaddleState next;
    if (config.kind == SolverKind::kBalpa) {
      Vector g = Vector::Zero(np);
      g.head(lp.n) = est->estimate(lp.f_base, state.X.head(lp.n));
      next = balpa_step(state, lp, metric, alpha_k, g);
      report.max_dual_residual = std::max(report.max_dual_residual, next.dual_residual);
    } else {
      next = baseline_step(config.kind, state, lp, config.alpha, config.beta);
      baseline_epochs += baseline_grads_per_iter();
    }

    double fpr;
    if (config.kind == SolverKind::kBalpa) {
      fpr = std::sqrt(m_norm_sq(metric, lp, next.Xbar - state.X, next.Lambda - state.Lambda));
    } else {
      fpr = std::sqrt((next.Xbar - state.X).squaredNorm() +
                      (next.Lambda - state.Lambda).squaredNorm());
    }

    report.averages.accumulate(next.Xbar, next.Lambda, next.X);
    state = std::move(next);

    TraceRecord t = make_record(state, fpr);
    if (config.kind != SolverKind::kBalpa) t.epoch_equivalent = baseline_epochs;
    trace.push_back(t);

    double xn = state.X.norm();
    if (!std::isfinite(xn) || xn > 1e12 || !std::isfinite(t.objective)) {
      throw std::runtime_error("run: diverged, iterate norm " + std::to_string(xn) +
                               " at iter " + std::to_string(state.iter));
    }
    if (stop_value(t) <= config.tol) {
      converged = true;
      reason = "stop_metric <= tol at iter " + std::to_string(state.iter);
    }
  }
  if (!converged && reason.empty()) reason = "max_iter reached";

  report.final_state = state;
  report.iterations = state.iter;
  report.epochs = trace.back().epoch_equivalent;
  report.wall_time = elapsed();
  report.converged = converged;
  report.stop_reason = reason;
  return {report, trace};
}

}  // namespace balpa

#endif  // BALPA_SOLVERS_HPP
