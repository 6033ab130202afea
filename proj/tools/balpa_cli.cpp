// Command-line driver: instance generation, single solves, solver races,
// decentralized runs, and rate-slope fitting.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "balpa/bench.hpp"
#include "balpa/distributed.hpp"
#include "balpa/io.hpp"
#include "balpa/solvers.hpp"

namespace fs = std::filesystem;
using namespace balpa;

namespace {

struct CommonOpts {
  std::string config;
  uint64_t seed = 1;
  std::string out = "out";
  double tol = 1e-6;
  long max_epochs = 20000;
  bool seed_set = false;
  bool tol_set = false;
  bool max_epochs_set = false;
};

void add_common(CLI::App *app, CommonOpts &o) {
  app->add_option("--config", o.config, "config file path");
  app->add_option("--seed", o.seed, "RNG seed")->each([&](const std::string &) {
    o.seed_set = true;
  });
  app->add_option("--out", o.out, "output directory");
  app->add_option("--tol", o.tol, "stop tolerance")->each([&](const std::string &) {
    o.tol_set = true;
  });
  app->add_option("--max-epochs", o.max_epochs, "epoch budget")->each([&](const std::string &) {
    o.max_epochs_set = true;
  });
}

// CLI flags override config values.
ExperimentConfig load_config(const CommonOpts &o) {
  ExperimentConfig cfg;
  if (!o.config.empty()) cfg = parse_config_file(o.config);
  if (o.seed_set || !cfg.global.count("seed")) cfg.global["seed"] = std::to_string(o.seed);
  if (o.tol_set || !cfg.global.count("tol")) {
    std::ostringstream ss;
    ss << o.tol;
    cfg.global["tol"] = ss.str();
  }
  if (o.max_epochs_set || !cfg.global.count("max_epochs")) {
    cfg.global["max_epochs"] = std::to_string(o.max_epochs);
  }
  return cfg;
}

int cmd_gen(const CommonOpts &o) {
  ExperimentConfig cfg = load_config(o);
  LassoEqInstance inst = gen_lasso_eq(
      static_cast<Index>(cfg.get_num("n", 200)), static_cast<int>(cfg.get_num("m", 10)),
      static_cast<Index>(cfg.get_num("p1", 20)), static_cast<Index>(cfg.get_num("p2", 20)),
      cfg.get_num("target_normDD", 1e3), static_cast<uint64_t>(cfg.get_num("seed", 1)));
  fs::create_directories(o.out);
  for (size_t i = 0; i < inst.A.size(); ++i) {
    save_matrix(inst.A[i], (fs::path(o.out) / ("A" + std::to_string(i) + ".txt")).string());
    save_vector(inst.a[i], (fs::path(o.out) / ("a" + std::to_string(i) + ".txt")).string());
  }
  save_matrix(inst.B, (fs::path(o.out) / "B.txt").string());
  save_matrix(inst.D, (fs::path(o.out) / "D.txt").string());
  save_vector(inst.d, (fs::path(o.out) / "d.txt").string());
  std::ofstream meta(fs::path(o.out) / "meta.txt");
  meta << "seed " << inst.seed << "\nL " << inst.L << "\nnormDD " << inst.normDD << '\n';
  std::cout << "wrote instance to " << o.out << " (L = " << inst.L << ", |D^T D| = "
            << inst.normDD << ")\n";
  return 0;
}

int cmd_solve(const CommonOpts &o) {
  ExperimentConfig cfg = load_config(o);
  require(!cfg.solvers.empty(), "solve: config must name one [solver ...] section");
  LassoEqInstance inst = gen_lasso_eq(
      static_cast<Index>(cfg.get_num("n", 200)), static_cast<int>(cfg.get_num("m", 10)),
      static_cast<Index>(cfg.get_num("p1", 20)), static_cast<Index>(cfg.get_num("p2", 20)),
      cfg.get_num("target_normDD", 1e3), static_cast<uint64_t>(cfg.get_num("seed", 1)));
  LiftedProblem lp = lift_problem(inst.problem());
  const auto &sv = cfg.solvers.front();
  auto getk = [&](const std::string &k, double fb) {
    auto it = sv.kv.find(k);
    return it == sv.kv.end() ? fb : std::stod(it->second);
  };
  SolverConfig sc;
  sc.kind = solver_kind_from_name(sv.name);
  sc.tol = cfg.get_num("tol", 1e-6);
  sc.max_iter = static_cast<long>(cfg.get_num("max_epochs", 20000));
  sc.stop_metric = StopMetric::kFixedPointResidual;
  SolveReport report;
  std::vector<TraceRecord> trace;
  if (sc.kind == SolverKind::kBalpa) {
    sc.alpha = getk("alpha", 1.0 / inst.L);
    sc.gamma = getk("gamma", 1.0);
    DualMetric metric = build_dual_metric(lp.Dop, sc.alpha, sc.gamma);
    std::tie(report, trace) = run(lp, metric, sc);
  } else {
    double beta = getk("beta", 1e-3);
    sc.beta = beta;
    sc.alpha = getk("alpha", 1.0 / (beta * inst.normDD + inst.L));
    DualMetric metric = build_dual_metric(lp.Dop, sc.alpha, 1.0);
    std::tie(report, trace) = run(lp, metric, sc);
  }
  fs::create_directories(o.out);
  write_trace_csv(trace, (fs::path(o.out) / (sv.name + ".csv")).string());
  std::ofstream rep(fs::path(o.out) / (sv.name + ".report.txt"));
  rep << report.serialize();
  std::cout << report.serialize();
  return 0;
}

int cmd_race(const CommonOpts &o) {
  ExperimentConfig cfg = load_config(o);
  require(!cfg.solvers.empty(), "race: config must list [solver ...] sections");
  RaceResult res = run_experiment(cfg, o.out);
  for (const auto &e : res.entries) {
    std::cout << e.name << ": "
              << (e.converged ? std::to_string(e.epochs) + " epochs" : "DNF (" + e.note + ")")
              << '\n';
  }
  return res.any_dnf ? 3 : 0;
}

int cmd_dist(const CommonOpts &o) {
  ExperimentConfig cfg = load_config(o);
  const int N = static_cast<int>(cfg.get_num("agents", 10));
  const Index p1 = static_cast<Index>(cfg.get_num("p1", 5));
  const double alpha = cfg.get_num("alpha", 0.25);
  const double gamma = cfg.get_num("gamma", 0.5);
  const long rounds = static_cast<long>(cfg.get_num("max_epochs", 200));
  const uint64_t seed = static_cast<uint64_t>(cfg.get_num("seed", 1));

  Dataset ds;
  std::string data_path = cfg.get("dataset");
  if (!data_path.empty()) {
    ds = parse_libsvm(data_path);
  } else {
    ds = make_classification_dataset(static_cast<Index>(cfg.get_num("samples", 200)),
                                     static_cast<Index>(cfg.get_num("features", 20)), seed);
  }
  RegressionKind kind =
      cfg.get("model", "logistic") == "linear" ? RegressionKind::kLinear : RegressionKind::kLogistic;
  auto problems = gen_dist_regression(ds, N, p1, kind, seed);

  NetworkTopology topo;
  std::string topo_path = cfg.get("topology");
  if (!topo_path.empty() && topo_path != "ring") {
    auto [tn, edges] = load_topology(topo_path);
    require(tn == N, "dist: topology agent count mismatch");
    topo = metropolis_mixing(tn, edges);
  } else {
    topo = metropolis_mixing(N, ring_edges(N));
  }

  // stepsize check against the worst local smoothness
  double Lmax = 0.0;
  for (const auto &p : problems) Lmax = std::max(Lmax, p.f.lipschitz_L);
  require(alpha < 2.0 / Lmax, "dist: alpha violates 0 < alpha < 2/L");

  DistNetwork net(topo, std::move(problems), alpha, gamma);
  fs::create_directories(o.out);
  std::ofstream csv(fs::path(o.out) / "dist.csv");
  csv << "iter,objective,constraint_violation,fixed_point_residual,relative_error,"
         "ergodic_gap,wall_time_s,epochs,consensus_violation,messages_sent\n";
  auto t0 = std::chrono::steady_clock::now();
  Vector prev = net.stacked_x();
  for (long k = 0; k < rounds; ++k) {
    net.run_round(alpha);
    Vector cur = net.stacked_x();
    double obj = 0.0, cviol = 0.0;
    for (int i = 0; i < net.N(); ++i) {
      const auto &a = net.agent(i);
      obj += a.f.value(a.x) + (a.B.rows() > 0 ? a.r.value(a.B * a.x) : 0.0);
      if (a.B.rows() > 0) cviol += (a.B * a.x - a.y).squaredNorm();
    }
    double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    csv << k << ',' << obj << ',' << std::sqrt(cviol) << ',' << (cur - prev).norm() << ",,,"
        << wall << ',' << (k + 1) << ',' << net.consensus_violation() << ','
        << net.messages_sent() << '\n';
    prev = cur;
    if (net.consensus_violation() < cfg.get_num("tol", 1e-6) && (cur - prev).norm() == 0.0) break;
  }
  std::cout << "ran " << net.round() << " rounds, consensus violation "
            << net.consensus_violation() << ", messages " << net.messages_sent() << '\n';
  return 0;
}

int cmd_slopes(const CommonOpts &o, const std::string &csv_path, const std::string &x_field,
               const std::string &y_field, size_t window) {
  std::ifstream is(csv_path);
  require(is.good(), "slopes: cannot open " + csv_path);
  std::string header;
  require(static_cast<bool>(std::getline(is, header)), "slopes: empty file");
  std::vector<std::string> cols;
  {
    std::istringstream hs(header);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  auto col_of = [&](const std::string &name) {
    for (size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return i;
    throw std::invalid_argument("slopes: no column '" + name + "'");
  };
  size_t xi = col_of(x_field), yi = col_of(y_field);
  std::vector<double> xs, ys;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string c;
    std::vector<std::string> vals;
    while (std::getline(ls, c, ',')) vals.push_back(c);
    if (xi >= vals.size() || yi >= vals.size()) continue;
    if (vals[xi].empty() || vals[yi].empty()) continue;
    xs.push_back(std::stod(vals[xi]));
    ys.push_back(std::stod(vals[yi]));
  }
  double s = slope_fit(xs, ys, window);
  std::cout << "slope(log " << y_field << " vs log " << x_field << ") = " << s << '\n';
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"balanced primal-dual splitting toolkit"};
  app.require_subcommand(1);

  CommonOpts o;
  auto *gen = app.add_subcommand("gen", "generate a random constrained-lasso instance");
  add_common(gen, o);
  auto *solve = app.add_subcommand("solve", "run one solver on a generated instance");
  add_common(solve, o);
  auto *race = app.add_subcommand("race", "run all configured solvers and tabulate epochs");
  add_common(race, o);
  auto *dist = app.add_subcommand("dist", "run the decentralized solver over a topology");
  add_common(dist, o);
  auto *slopes = app.add_subcommand("slopes", "fit a log-log rate slope from a trace CSV");
  add_common(slopes, o);
  std::string csv_path, x_field = "epochs", y_field = "ergodic_gap";
  size_t window = 50;
  slopes->add_option("csv", csv_path, "trace CSV path")->required();
  slopes->add_option("--x", x_field, "x column");
  slopes->add_option("--y", y_field, "y column");
  slopes->add_option("--window", window, "tail window length");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(o);
    if (solve->parsed()) return cmd_solve(o);
    if (race->parsed()) return cmd_race(o);
    if (dist->parsed()) return cmd_dist(o);
    if (slopes->parsed()) return cmd_slopes(o, csv_path, x_field, y_field, window);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
