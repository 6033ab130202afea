#ifndef BALPA_ORACLES_HPP
#define BALPA_ORACLES_HPP

#include <algorithm>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "balpa/core.hpp"

namespace balpa {

/// How a finite-sum oracle aggregates its components:
/// kMean: f = (1/m) sum f_i, kSum: f = sum f_i.
enum class SumConvention { kMean, kSum };

/// A smooth convex function with value/gradient access, Lipschitz constant of
/// the gradient, and an optional finite-sum decomposition for stochastic
/// estimators.
struct SmoothOracle {
  struct Component {
    std::function<double(const Vector &)> value;
    std::function<Vector(const Vector &)> gradient;
  };

  Index dim = 0;
  std::function<double(const Vector &)> value;
  std::function<Vector(const Vector &)> gradient;
  double lipschitz_L = 0.0;
  double strong_convexity_mu = 0.0;
  std::vector<Component> components;
  SumConvention convention = SumConvention::kMean;

  bool has_components() const { return !components.empty(); }
  int m() const { return static_cast<int>(components.size()); }

  /// Gradient of component i rescaled so that the full gradient is the plain
  /// mean of the rescaled components, regardless of convention.
  Vector scaled_component_gradient(int i, const Vector &x) const {
    Vector g = components[static_cast<size_t>(i)].gradient(x);
    if (convention == SumConvention::kSum) g *= static_cast<double>(m());
    return g;
  }

  static SmoothOracle Quadratic(Matrix H, Vector c) {
    require(H.rows() == H.cols() && H.rows() == c.size(), "Quadratic: dimension mismatch");
    SmoothOracle o;
    o.dim = c.size();
    double lmax = H.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
    double lmin = H.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff();
    o.lipschitz_L = lmax;
    o.strong_convexity_mu = std::max(0.0, lmin);
    auto Hs = std::make_shared<Matrix>(std::move(H));
    auto cs = std::make_shared<Vector>(std::move(c));
    o.value = [Hs, cs](const Vector &x) { return 0.5 * x.dot(*Hs * x) + cs->dot(x); };
    o.gradient = [Hs, cs](const Vector &x) -> Vector { return *Hs * x + *cs; };
    return o;
  }
};

/// A proximable function: prox(y, alpha) = argmin_v value(v) + |v-y|^2/(2 alpha).
struct ProxOracle {
  Index dim = 0;
  std::function<Vector(const Vector &, double)> prox;
  std::function<double(const Vector &)> value;

  static ProxOracle ZeroFunction(Index dim) {
    ProxOracle p;
    p.dim = dim;
    p.prox = [](const Vector &y, double) { return y; };
    p.value = [](const Vector &) { return 0.0; };
    return p;
  }
};

}  // namespace balpa

#endif  // BALPA_ORACLES_HPP
