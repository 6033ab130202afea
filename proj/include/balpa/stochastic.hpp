#ifndef BALPA_STOCHASTIC_HPP
#define BALPA_STOCHASTIC_HPP

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "balpa/oracles.hpp"

namespace balpa {

enum class ScheduleKind { kConstant, kDiminishingBounded, kDiminishingHorizon, kStronglyConvex };

/// Primal stepsize schedules:
///   constant:            alpha_k = alpha_bar
///   diminishing_bounded: alpha_k = 1/(c + sqrt(k)),   eta_k = 1 + sqrt(k)
///   diminishing_horizon: alpha_k = 1/(c + sqrt(K-1)), eta_k = 1 + sqrt(K-1)
///   strongly_convex:     1/alpha_k = c + mu (k+1),    eta_k = mu (k+1)
/// All kinds are capped at alpha_bar and non-increasing in k.
struct StepsizeSchedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  double c = 1.0;
  double mu = 0.0;
  long horizon_K = 0;
  double alpha_bar = 1.0;
};

struct StepsizePair {
  double alpha_k = 0.0;
  double eta_k = 0.0;
};

inline StepsizePair schedule_step(const StepsizeSchedule &s, long k) {
  require(k >= 0, "schedule_step: k must be nonnegative");
  switch (s.kind) {
    case ScheduleKind::kConstant:
      return {s.alpha_bar, 0.0};
    case ScheduleKind::kDiminishingBounded: {
      double sq = std::sqrt(static_cast<double>(k));
      return {std::min(s.alpha_bar, 1.0 / (s.c + sq)), 1.0 + sq};
    }
    case ScheduleKind::kDiminishingHorizon: {
      require(s.horizon_K >= 1, "schedule_step: horizon_K required");
      double sq = std::sqrt(static_cast<double>(s.horizon_K - 1));
      return {std::min(s.alpha_bar, 1.0 / (s.c + sq)), 1.0 + sq};
    }
    case ScheduleKind::kStronglyConvex: {
      require(s.mu > 0, "schedule_step: mu required for strongly_convex schedule");
      double inv = s.c + s.mu * static_cast<double>(k + 1);
      return {std::min(s.alpha_bar, 1.0 / inv), s.mu * static_cast<double>(k + 1)};
    }
  }
  throw std::logic_error("schedule_step: unknown kind");
}

enum class EstimatorKind { kFull, kMinibatch, kSaga, kLsvrg };

/// Exact lifted gradient (grad f(x), 0).
inline Vector full_gradient(const SmoothOracle &oracle, const Vector &X) {
  require(X.size() >= oracle.dim, "full_gradient: dimension mismatch");
  return oracle.gradient(X);
}

/// Stochastic gradient estimator over the finite-sum decomposition of a
/// smooth oracle. Component gradients are taken in the mean-normalized
/// scaling, so every estimate targets the full gradient directly.
/// Single-owner mutable; all randomness flows from the seeded generator.
class EstimatorState {
 public:
  EstimatorKind kind = EstimatorKind::kFull;
  double lsvrg_p_update = 0.0;

  EstimatorState() = default;

  static EstimatorState Full() { return EstimatorState(); }

  static EstimatorState Minibatch(uint64_t seed) {
    EstimatorState s;
    s.kind = EstimatorKind::kMinibatch;
    s.rng_.seed(seed);
    return s;
  }

  static EstimatorState Saga(uint64_t seed) {
    EstimatorState s;
    s.kind = EstimatorKind::kSaga;
    s.rng_.seed(seed);
    return s;
  }

  static EstimatorState Lsvrg(uint64_t seed, double p_update) {
    EstimatorState s;
    s.kind = EstimatorKind::kLsvrg;
    s.rng_.seed(seed);
    s.lsvrg_p_update = p_update;
    return s;
  }

  long component_evals() const { return component_evals_; }
  const std::vector<Vector> &gradient_table() const { return table_; }
  const Vector &anchor_point() const { return anchor_; }

  /// SAGA table / L-SVRG anchor initialization at X0. Charges one full pass.
  void initialize(const SmoothOracle &oracle, const Vector &X0) {
    const int m = oracle.m();
    if (kind == EstimatorKind::kSaga) {
      table_.clear();
      table_.reserve(static_cast<size_t>(m));
      table_mean_ = Vector::Zero(oracle.dim);
      for (int i = 0; i < m; ++i) {
        table_.push_back(oracle.scaled_component_gradient(i, X0.head(oracle.dim)));
        table_mean_ += table_.back();
      }
      table_mean_ /= static_cast<double>(m);
      component_evals_ += m;
    } else if (kind == EstimatorKind::kLsvrg) {
      anchor_ = X0.head(oracle.dim);
      anchor_grad_ = mean_gradient(oracle, anchor_);
      component_evals_ += m;
    }
    initialized_ = true;
  }

  /// One estimate at X (x block of the lifted point). Advances the state.
  Vector estimate(const SmoothOracle &oracle, const Vector &X) {
    const Vector x = X.head(oracle.dim);
    switch (kind) {
      case EstimatorKind::kFull: {
        component_evals_ += std::max(1, oracle.m());
        return oracle.gradient(x);
      }
      case EstimatorKind::kMinibatch: {
        int j = sample(oracle.m());
        component_evals_ += 1;
        return oracle.scaled_component_gradient(j, x);
      }
      case EstimatorKind::kSaga: {
        require(initialized_, "EstimatorState: SAGA table not initialized");
        int j = sample(oracle.m());
        Vector gj = oracle.scaled_component_gradient(j, x);
        Vector g = gj - table_[static_cast<size_t>(j)] + table_mean_;
        table_mean_ += (gj - table_[static_cast<size_t>(j)]) / static_cast<double>(oracle.m());
        table_[static_cast<size_t>(j)] = std::move(gj);
        component_evals_ += 1;
        return g;
      }
      case EstimatorKind::kLsvrg: {
        require(initialized_, "EstimatorState: L-SVRG anchor not initialized");
        int j = sample(oracle.m());
        Vector g = oracle.scaled_component_gradient(j, x) -
                   oracle.scaled_component_gradient(j, anchor_) + anchor_grad_;
        component_evals_ += 1;
        // coin flip after the estimate; g stays measurable w.r.t. the
        // pre-step state
        if (coin_() (rng_) < lsvrg_p_update) {
          anchor_ = x;
          anchor_grad_ = mean_gradient(oracle, anchor_);
          component_evals_ += oracle.m();
        }
        return g;
      }
    }
    throw std::logic_error("EstimatorState: unknown kind");
  }

 private:
  int sample(int m) {
    std::uniform_int_distribution<int> pick(0, m - 1);
    return pick(rng_);
  }

  static Vector mean_gradient(const SmoothOracle &oracle, const Vector &x) {
    Vector g = Vector::Zero(oracle.dim);
    for (int i = 0; i < oracle.m(); ++i) g += oracle.scaled_component_gradient(i, x);
    return g / static_cast<double>(oracle.m());
  }

  using Coin = std::uniform_real_distribution<double>;
  static Coin coin_() { return Coin(0.0, 1.0); }

  std::mt19937_64 rng_{0};
  std::vector<Vector> table_;
  Vector table_mean_;
  Vector anchor_;
  Vector anchor_grad_;
  long component_evals_ = 0;
  bool initialized_ = false;
};

struct VarianceProbe {
  Vector emp_mean;
  double emp_second_moment = 0.0;  // E |g - grad F|^2
};

/// Mean and variance of the estimator at X without advancing the persistent
/// state: works on a copy, enumerating all draws when m <= trials.
inline VarianceProbe estimator_variance_probe(const EstimatorState &state,
                                              const SmoothOracle &oracle, const Vector &X,
                                              int trials) {
  require(trials >= 1, "estimator_variance_probe: trials must be >= 1");
  const Vector x = X.head(oracle.dim);
  const Vector gfull = oracle.gradient(x);
  const int m = std::max(1, oracle.m());
  VarianceProbe probe;
  probe.emp_mean = Vector::Zero(oracle.dim);

  auto single_draw = [&](int j) -> Vector {
    switch (state.kind) {
      case EstimatorKind::kFull:
        return gfull;
      case EstimatorKind::kMinibatch:
        return oracle.scaled_component_gradient(j, x);
      case EstimatorKind::kSaga: {
        const auto &table = state.gradient_table();
        Vector mean = Vector::Zero(oracle.dim);
        for (const auto &t : table) mean += t;
        mean /= static_cast<double>(table.size());
        return oracle.scaled_component_gradient(j, x) - table[static_cast<size_t>(j)] + mean;
      }
      case EstimatorKind::kLsvrg: {
        Vector ag = Vector::Zero(oracle.dim);
        for (int i = 0; i < m; ++i) ag += oracle.scaled_component_gradient(i, state.anchor_point());
        ag /= static_cast<double>(m);
        return oracle.scaled_component_gradient(j, x) -
               oracle.scaled_component_gradient(j, state.anchor_point()) + ag;
      }
    }
    throw std::logic_error("estimator_variance_probe: unknown kind");
  };

  if (m <= trials || state.kind == EstimatorKind::kFull) {
    for (int j = 0; j < m; ++j) {
      Vector g = single_draw(j);
      probe.emp_mean += g;
      probe.emp_second_moment += (g - gfull).squaredNorm();
    }
    probe.emp_mean /= static_cast<double>(m);
    probe.emp_second_moment /= static_cast<double>(m);
  } else {
    std::mt19937_64 rng(0xabcdULL);
    std::uniform_int_distribution<int> pick(0, m - 1);
    for (int t = 0; t < trials; ++t) {
      Vector g = single_draw(pick(rng));
      probe.emp_mean += g;
      probe.emp_second_moment += (g - gfull).squaredNorm();
    }
    probe.emp_mean /= static_cast<double>(trials);
    probe.emp_second_moment /= static_cast<double>(trials);
  }
  return probe;
}

}  // namespace balpa

#endif  // BALPA_STOCHASTIC_HPP
