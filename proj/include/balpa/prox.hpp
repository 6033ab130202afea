#ifndef BALPA_PROX_HPP
#define BALPA_PROX_HPP

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "balpa/core.hpp"
#include "balpa/oracles.hpp"

namespace balpa {

/// Soft thresholding: prox of w * |.|_1.
inline Vector prox_l1(const Vector &y, double alpha, double w) {
  require(alpha > 0, "prox_l1: alpha must be positive");
  require(w >= 0, "prox_l1: weight must be nonnegative");
  const double t = alpha * w;
  Vector out(y.size());
  // y - clamp(y, -t, t): same map as sign(y) max(|y|-t, 0) but satisfies the
  // Moreau identity exactly in floating point
  for (Index i = 0; i < y.size(); ++i) out(i) = y(i) - std::clamp(y(i), -t, t);
  return out;
}

/// Block soft thresholding: prox of w * |.|_2 (unsquared Euclidean norm).
/// |y| = 0 falls into the thresholded-to-zero branch.
inline Vector prox_l2norm(const Vector &y, double alpha, double w) {
  require(alpha > 0, "prox_l2norm: alpha must be positive");
  require(w >= 0, "prox_l2norm: weight must be nonnegative");
  const double t = alpha * w;
  const double ny = y.norm();
  if (ny <= t) return Vector::Zero(y.size());
  return (1.0 - t / ny) * y;
}

inline ProxOracle make_l1_prox(Index dim, double w) {
  ProxOracle p;
  p.dim = dim;
  p.prox = [w](const Vector &y, double alpha) { return prox_l1(y, alpha, w); };
  p.value = [w](const Vector &y) { return w * y.lpNorm<1>(); };
  return p;
}

inline ProxOracle make_l2norm_prox(Index dim, double w) {
  ProxOracle p;
  p.dim = dim;
  p.prox = [w](const Vector &y, double alpha) { return prox_l2norm(y, alpha, w); };
  p.value = [w](const Vector &y) { return w * y.norm(); };
  return p;
}

/// A block of a separable prox: [offset, offset+len) handled by `oracle`.
struct ProxBlock {
  Index offset = 0;
  Index len = 0;
  ProxOracle oracle;
};

/// Applies per-block proxes independently. Blocks must partition [0, dim).
inline Vector prox_separable(const std::vector<ProxBlock> &blocks, const Vector &y, double alpha) {
  Index covered = 0;
  for (const auto &b : blocks) {
    require(b.offset == covered, "prox_separable: blocks must be contiguous and ordered");
    require(b.oracle.dim == b.len, "prox_separable: block oracle dim mismatch");
    covered += b.len;
  }
  require(covered == y.size(), "prox_separable: blocks do not cover the vector");
  Vector out(y.size());
  for (const auto &b : blocks) {
    out.segment(b.offset, b.len) = b.oracle.prox(y.segment(b.offset, b.len), alpha);
  }
  return out;
}

inline ProxOracle make_separable_prox(std::vector<ProxBlock> blocks) {
  Index dim = 0;
  for (const auto &b : blocks) dim += b.len;
  ProxOracle p;
  p.dim = dim;
  auto bs = std::make_shared<std::vector<ProxBlock>>(std::move(blocks));
  p.prox = [bs](const Vector &y, double alpha) { return prox_separable(*bs, y, alpha); };
  p.value = [bs](const Vector &y) {
    double v = 0.0;
    for (const auto &b : *bs) v += b.oracle.value(y.segment(b.offset, b.len));
    return v;
  };
  return p;
}

}  // namespace balpa

#endif  // BALPA_PROX_HPP
