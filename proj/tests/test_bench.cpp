#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "balpa/bench.hpp"

using namespace balpa;
namespace fs = std::filesystem;

TEST_CASE("gen_lasso_eq: shapes, norm targeting, and bitwise determinism") {
  LassoEqInstance inst = gen_lasso_eq(20, 10, 5, 5, 1e3, 1);
  CHECK(inst.A.size() == 10);
  CHECK(inst.A[0].rows() == 40);
  CHECK(inst.A[0].cols() == 20);
  CHECK(inst.B.rows() == 5);
  CHECK(inst.D.rows() == 5);
  CHECK(inst.normDD >= 950.0);
  CHECK(inst.normDD <= 1050.0);
  CHECK(inst.L > 0.0);

  LassoEqInstance again = gen_lasso_eq(20, 10, 5, 5, 1e3, 1);
  CHECK((inst.D - again.D).norm() == 0.0);
  CHECK((inst.B - again.B).norm() == 0.0);
  for (int i = 0; i < 10; ++i) {
    CHECK((inst.A[static_cast<size_t>(i)] - again.A[static_cast<size_t>(i)]).norm() == 0.0);
    CHECK((inst.a[static_cast<size_t>(i)] - again.a[static_cast<size_t>(i)]).norm() == 0.0);
  }

  LassoEqInstance other = gen_lasso_eq(20, 10, 5, 5, 1e3, 2);
  CHECK((inst.D - other.D).norm() > 0.0);
}

TEST_CASE("gen_lasso_eq: oracle matches the termwise objective and L rule") {
  LassoEqInstance inst = gen_lasso_eq(8, 3, 2, 2, 100.0, 5);
  CompositeProblem cp = inst.problem();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  Vector x(8);
  for (Index i = 0; i < 8; ++i) x(i) = g(rng);
  double v = 0.0;
  Vector grad = Vector::Zero(8);
  for (int i = 0; i < 3; ++i) {
    v += 0.5 * (inst.A[static_cast<size_t>(i)] * x - inst.a[static_cast<size_t>(i)]).squaredNorm();
    grad += inst.A[static_cast<size_t>(i)].transpose() *
            (inst.A[static_cast<size_t>(i)] * x - inst.a[static_cast<size_t>(i)]);
  }
  CHECK_THAT(cp.f.value(x), Catch::Matchers::WithinRel(v / 3.0, 1e-12));
  CHECK((cp.f.gradient(x) - grad / 3.0).norm() <= 1e-12 * grad.norm());

  double sumL = 0.0;
  for (int i = 0; i < 3; ++i) {
    sumL += op_norm_sq(LinearOperator(inst.A[static_cast<size_t>(i)]), 1e-10);
  }
  CHECK_THAT(inst.L, Catch::Matchers::WithinRel(sumL / 3.0, 1e-6));
}

TEST_CASE("parse_libsvm: format, empty rows, and index errors") {
  std::string path = "/tmp/balpa_test_libsvm.txt";
  {
    std::ofstream os(path);
    os << "+1 1:0.5 3:2\n";
    os << "-1\n";
  }
  Dataset ds = parse_libsvm(path);
  CHECK(ds.n_samples() == 2);
  CHECK(ds.n_features == 3);
  CHECK(ds.labels(0) == 1.0);
  CHECK(ds.labels(1) == -1.0);
  Matrix row0 = ds.dense_block(0, 1);
  CHECK(row0(0, 0) == 0.5);
  CHECK(row0(0, 1) == 0.0);
  CHECK(row0(0, 2) == 2.0);
  CHECK(ds.dense_block(1, 1).norm() == 0.0);  // empty feature list -> zero row

  {
    std::ofstream os(path);
    os << "+1 1:0.5\n1 0:5\n";
  }
  CHECK_THROWS_WITH(parse_libsvm(path), Catch::Matchers::ContainsSubstring("line 2"));

  {
    std::ofstream os(path);
    os << "+1 1:abc\n";
  }
  CHECK_THROWS_WITH(parse_libsvm(path), Catch::Matchers::ContainsSubstring("line 1"));

  {
    std::ofstream os(path);
    os << "+1 nocolon\n";
  }
  CHECK_THROWS(parse_libsvm(path));
  CHECK_THROWS(parse_libsvm("/tmp/balpa_no_such_file.txt"));
  std::remove(path.c_str());
}

TEST_CASE("gen_dist_regression: gradients, sharding, and N = 1 degeneration") {
  Dataset ds = make_classification_dataset(20, 4, 3);

  // logistic gradient at 0 on one sample (a, b): -b a / 2 (+ ridge 0)
  Dataset one;
  one.n_features = 4;
  one.rows = {{{0, 1.0}, {2, -2.0}}};
  one.labels = Vector::Constant(1, -1.0);
  auto solo = gen_dist_regression(one, 1, 2, RegressionKind::kLogistic, 7);
  Vector g0 = solo[0].f.gradient(Vector::Zero(4));
  Vector a = one.dense_block(0, 1).row(0).transpose();
  CHECK((g0 - (-(-1.0) * a / 2.0)).norm() <= 1e-14);

  // linear gradient matches A^T (A x - b)/m_i + x termwise
  auto lin = gen_dist_regression(ds, 4, 2, RegressionKind::kLinear, 7);
  Matrix A0 = ds.dense_block(0, 5);
  Vector b0 = ds.labels.head(5);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss;
  Vector x(4);
  for (Index i = 0; i < 4; ++i) x(i) = gauss(rng);
  Vector expect = A0.transpose() * (A0 * x - b0) / 5.0 + x;
  CHECK((lin[0].f.gradient(x) - expect).norm() <= 1e-12 * (1 + expect.norm()));

  // remainder goes to the last agent
  auto shards = gen_dist_regression(ds, 3, 2, RegressionKind::kLinear, 7);
  CHECK(shards.size() == 3);
  CHECK(shards[2].f.m() == 8);  // 20 = 6 + 6 + 8

  // N = 1 equals the centralized objective
  auto central = gen_dist_regression(ds, 1, 2, RegressionKind::kLogistic, 7);
  auto split = gen_dist_regression(ds, 1, 2, RegressionKind::kLogistic, 7);
  CHECK(central[0].f.value(x) == split[0].f.value(x));
  CHECK(central[0].f.m() == 20);

  CHECK_THROWS(gen_dist_regression(ds, 25, 2, RegressionKind::kLinear, 7));  // empty shard
}

TEST_CASE("slope_fit: exact power laws and input validation") {
  std::vector<double> k, inv_k, inv_sqrt;
  for (int i = 1; i <= 200; ++i) {
    k.push_back(i);
    inv_k.push_back(1.0 / i);
    inv_sqrt.push_back(1.0 / std::sqrt(double(i)));
  }
  CHECK_THAT(slope_fit(k, inv_k, 50), Catch::Matchers::WithinAbs(-1.0, 1e-6));
  CHECK_THAT(slope_fit(k, inv_sqrt, 50), Catch::Matchers::WithinAbs(-0.5, 1e-6));

  CHECK_THROWS(slope_fit(k, inv_k, 9));            // window too small
  CHECK_THROWS(slope_fit({1, 2}, {1, 2}, 10));     // not enough points
  std::vector<double> bad = inv_k;
  bad.back() = 0.0;
  CHECK_THROWS_WITH(slope_fit(k, bad, 50), Catch::Matchers::ContainsSubstring("nonpositive"));
}

TEST_CASE("parse_config: globals, solver sections, comments, and errors") {
  std::istringstream is(
      "# header comment\n"
      "n = 30\n"
      "tol = 1e-6  # trailing comment\n"
      "\n"
      "[solver balpa]\n"
      "gamma = 1\n"
      "[solver pd3o]\n"
      "beta = 1e-3\n");
  ExperimentConfig cfg = parse_config(is);
  CHECK(cfg.get_num("n", 0) == 30.0);
  CHECK(cfg.get_num("tol", 0) == 1e-6);
  REQUIRE(cfg.solvers.size() == 2);
  CHECK(cfg.solvers[0].name == "balpa");
  CHECK(cfg.solvers[0].kv.at("gamma") == "1");
  CHECK(cfg.solvers[1].name == "pd3o");

  std::istringstream bad1("[section]\n");
  CHECK_THROWS(parse_config(bad1));
  std::istringstream bad2("novalue\n");
  CHECK_THROWS(parse_config(bad2));
  CHECK_THROWS(solver_kind_from_name("unknown_solver"));
}

TEST_CASE("run_experiment: tol = inf finishes in zero epochs and reruns identically") {
  ExperimentConfig cfg;
  cfg.global = {{"n", "12"},  {"m", "3"},   {"p1", "3"},
                {"p2", "3"},  {"seed", "4"}, {"target_normDD", "100"},
                {"tol", "inf"}, {"max_epochs", "10"}};
  cfg.solvers.push_back({"balpa", {}});
  std::string out = "/tmp/balpa_test_exp";
  fs::remove_all(out);
  RaceResult res = run_experiment(cfg, out);
  REQUIRE(res.entries.size() == 1);
  CHECK(res.entries[0].converged);
  CHECK(res.entries[0].epochs == 0.0);
  CHECK_FALSE(res.any_dnf);
  CHECK(fs::exists(fs::path(out) / "balpa.csv"));
  CHECK(fs::exists(fs::path(out) / "summary.txt"));
  CHECK(fs::exists(fs::path(out) / "plot.gp"));

  // identical up to wall_time_s (column 7), which is not reproducible
  auto slurp = [](const fs::path &p) {
    std::ifstream f(p);
    std::string line, out;
    while (std::getline(f, line)) {
      std::stringstream ls(line);
      std::string cell;
      int col = 0;
      while (std::getline(ls, cell, ',')) {
        if (col != 6) out += cell + ",";
        ++col;
      }
      out += "\n";
    }
    return out;
  };
  std::string first = slurp(fs::path(out) / "balpa.csv");
  run_experiment(cfg, out);
  CHECK(slurp(fs::path(out) / "balpa.csv") == first);  // restart-safe overwrite
  fs::remove_all(out);
}

TEST_CASE("run_experiment: summary epochs agree with the trace crossing") {
  ExperimentConfig cfg;
  cfg.global = {{"n", "12"},  {"m", "3"},    {"p1", "3"},
                {"p2", "3"},  {"seed", "4"}, {"target_normDD", "100"},
                {"tol", "1e-6"}, {"max_epochs", "4000"}};
  cfg.solvers.push_back({"balpa", {}});
  std::string out = "/tmp/balpa_test_exp2";
  fs::remove_all(out);
  RaceResult res = run_experiment(cfg, out);
  REQUIRE(res.entries[0].converged);

  // find the first trace row with relative_error <= tol; its epoch column
  // must match the reported count
  std::ifstream csv(fs::path(out) / "balpa.csv");
  std::string line;
  std::getline(csv, line);  // header
  double crossing = -1.0;
  while (std::getline(csv, line)) {
    std::stringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() >= 8 && !cells[4].empty() && std::stod(cells[4]) <= 1e-6) {
      crossing = std::stod(cells[7]);
      break;
    }
  }
  CHECK(crossing == res.entries[0].epochs);
  fs::remove_all(out);
}
