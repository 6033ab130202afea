#include <catch_amalgamated.hpp>

#include <random>

#include "balpa/prox.hpp"

using namespace balpa;

namespace {
Vector randv(std::mt19937_64 &rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}
}  // namespace

TEST_CASE("prox_l1: soft thresholding") {
  Vector y(2);
  y << 2.5, -0.3;
  Vector p = prox_l1(y, 1.0, 1.0);
  CHECK(p(0) == 1.5);
  CHECK(p(1) == 0.0);
  CHECK(prox_l1(Vector::Zero(4), 2.0, 3.0).norm() == 0.0);
  Vector z(3);
  z << 1, -2, 3;
  CHECK((prox_l1(z, 1.0, 0.0) - z).norm() == 0.0);
  CHECK_THROWS(prox_l1(z, 0.0, 1.0));
  CHECK_THROWS(prox_l1(z, -1.0, 1.0));
}

TEST_CASE("prox_l2norm: block soft thresholding") {
  Vector y(2);
  y << 3, 4;
  Vector p = prox_l2norm(y, 1.0, 1.0);
  CHECK_THAT(p(0), Catch::Matchers::WithinAbs(2.4, 1e-15));
  CHECK_THAT(p(1), Catch::Matchers::WithinAbs(3.2, 1e-15));

  // |y| = alpha w exactly -> 0
  Vector b(2);
  b << 3, 4;
  CHECK(prox_l2norm(b, 5.0, 1.0).norm() == 0.0);
  CHECK(prox_l2norm(Vector::Zero(3), 1.0, 1.0).norm() == 0.0);
  CHECK((prox_l2norm(y, 1.0, 0.0) - y).norm() == 0.0);
  CHECK_THROWS(prox_l2norm(y, 0.0, 1.0));
}

TEST_CASE("prox_separable: block application") {
  // (zero on x, l1 on y)
  std::vector<ProxBlock> blocks;
  blocks.push_back({0, 2, ProxOracle::ZeroFunction(2)});
  blocks.push_back({2, 2, make_l1_prox(2, 1.0)});
  Vector v(4);
  v << 5, -5, 2.5, -0.3;
  Vector p = prox_separable(blocks, v, 1.0);
  CHECK(p(0) == 5.0);
  CHECK(p(1) == -5.0);
  CHECK(p(2) == 1.5);
  CHECK(p(3) == 0.0);

  // single block covering the whole vector equals the underlying prox
  std::vector<ProxBlock> whole;
  whole.push_back({0, 4, make_l1_prox(4, 0.5)});
  CHECK((prox_separable(whole, v, 2.0) - prox_l1(v, 2.0, 0.5)).norm() == 0.0);

  // two l1 blocks with different weights: separability of the joint problem
  std::vector<ProxBlock> two;
  two.push_back({0, 2, make_l1_prox(2, 0.5)});
  two.push_back({2, 2, make_l1_prox(2, 2.0)});
  Vector q = prox_separable(two, v, 1.0);
  CHECK((q.head(2) - prox_l1(v.head(2), 1.0, 0.5)).norm() == 0.0);
  CHECK((q.tail(2) - prox_l1(v.tail(2), 1.0, 2.0)).norm() == 0.0);

  // incomplete blocks rejected
  std::vector<ProxBlock> gap;
  gap.push_back({0, 2, ProxOracle::ZeroFunction(2)});
  gap.push_back({3, 1, make_l1_prox(1, 1.0)});
  CHECK_THROWS(prox_separable(gap, v, 1.0));
}

TEST_CASE("firm nonexpansiveness on 1000 seeded pairs per catalog entry") {
  std::mt19937_64 rng(1234);
  auto entries = std::vector<ProxOracle>{make_l1_prox(5, 0.8), make_l2norm_prox(5, 1.3),
                                         ProxOracle::ZeroFunction(5)};
  for (const auto &entry : entries) {
    for (int trial = 0; trial < 1000; ++trial) {
      Vector y1 = randv(rng, 5, 2.0), y2 = randv(rng, 5, 2.0);
      double alpha = 0.1 + 3.0 * std::generate_canonical<double, 53>(rng);
      Vector p1 = entry.prox(y1, alpha), p2 = entry.prox(y2, alpha);
      double lhs = (p1 - p2).squaredNorm();
      double rhs = (p1 - p2).dot(y1 - y2);
      CHECK(lhs <= rhs + 1e-12 * (1 + rhs));
    }
  }
}

TEST_CASE("Moreau identity for l1 holds exactly componentwise") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    double w = 0.5 + std::generate_canonical<double, 53>(rng);
    double alpha = 0.1 + 2.0 * std::generate_canonical<double, 53>(rng);
    Vector y = randv(rng, 6, 3.0);
    Vector p = prox_l1(y, alpha, w);
    for (Index i = 0; i < y.size(); ++i) {
      double clamped = std::clamp(y(i), -alpha * w, alpha * w);
      // exact up to the single rounding of the subtraction inside the prox
      CHECK(std::abs(p(i) + clamped - y(i)) <= std::ldexp(std::abs(y(i)), -52));
    }
  }
}

TEST_CASE("prox output minimizes the prox objective against perturbations") {
  std::mt19937_64 rng(555);
  auto entries = std::vector<ProxOracle>{make_l1_prox(4, 0.9), make_l2norm_prox(4, 1.5)};
  for (const auto &entry : entries) {
    for (int trial = 0; trial < 10; ++trial) {
      Vector y = randv(rng, 4, 2.0);
      double alpha = 0.2 + 2.0 * std::generate_canonical<double, 53>(rng);
      Vector p = entry.prox(y, alpha);
      double best = entry.value(p) + (p - y).squaredNorm() / (2 * alpha);
      for (int k = 0; k < 100; ++k) {
        Vector v = p + randv(rng, 4, 0.3);
        double cand = entry.value(v) + (v - y).squaredNorm() / (2 * alpha);
        CHECK(best <= cand + 1e-12 * (1 + std::abs(cand)));
      }
    }
  }
}
