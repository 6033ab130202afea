#ifndef BALPA_BENCH_HPP
#define BALPA_BENCH_HPP

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "balpa/distributed.hpp"
#include "balpa/io.hpp"
#include "balpa/solvers.hpp"

namespace balpa {

// ---------------------------------------------------------------------------
// Generalized Lasso with equality constraints (the randomized benchmark)
// ---------------------------------------------------------------------------

/// min (1/2m) sum |A_i x - a_i|^2 + |Bx|_1 + delta_0(Dx - d),
/// A_i in R^{2n x n}, standard normal entries, D rescaled to a target |D^T D|.
struct LassoEqInstance {
  std::vector<Matrix> A;  // m matrices, 2n x n
  std::vector<Vector> a;
  Matrix B;               // p1 x n
  Matrix D;               // p2 x n
  Vector d;               // p2
  uint64_t seed = 0;
  double target_normDD = 0.0;
  double normDD = 0.0;     // measured |D^T D| after rescaling
  double L = 0.0;          // (1/m) sum |A_i^T A_i|

  CompositeProblem problem() const {
    CompositeProblem cp;
    SmoothOracle f;
    f.dim = B.cols();
    f.convention = SumConvention::kMean;
    f.lipschitz_L = L;
    auto As = std::make_shared<std::vector<Matrix>>(A);
    auto as = std::make_shared<std::vector<Vector>>(a);
    const int m = static_cast<int>(A.size());
    f.value = [As, as, m](const Vector &x) {
      double v = 0.0;
      for (int i = 0; i < m; ++i) v += 0.5 * ((*As)[i] * x - (*as)[i]).squaredNorm();
      return v / m;
    };
    f.gradient = [As, as, m](const Vector &x) -> Vector {
      Vector g = Vector::Zero(x.size());
      for (int i = 0; i < m; ++i) g += (*As)[i].transpose() * ((*As)[i] * x - (*as)[i]);
      return g / m;
    };
    for (int i = 0; i < m; ++i) {
      SmoothOracle::Component c;
      c.value = [As, as, i](const Vector &x) {
        return 0.5 * ((*As)[static_cast<size_t>(i)] * x - (*as)[static_cast<size_t>(i)])
                         .squaredNorm();
      };
      c.gradient = [As, as, i](const Vector &x) -> Vector {
        return (*As)[static_cast<size_t>(i)].transpose() *
               ((*As)[static_cast<size_t>(i)] * x - (*as)[static_cast<size_t>(i)]);
      };
      f.components.push_back(std::move(c));
    }
    cp.f = std::move(f);
    cp.r = make_l1_prox(B.rows(), 1.0);
    cp.B = LinearOperator(B);
    cp.D = LinearOperator(D);
    cp.d = d;
    return cp;
  }
};

inline LassoEqInstance gen_lasso_eq(Index n, int m, Index p1, Index p2, double target_normDD,
                                    uint64_t seed) {
  require(n > 0 && m > 0 && p1 >= 0 && p2 > 0, "gen_lasso_eq: bad dims");
  require(target_normDD > 0, "gen_lasso_eq: target_normDD must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto randn = [&](Index r, Index c) {
    Matrix M(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) M(i, j) = gauss(rng);
    return M;
  };
  LassoEqInstance inst;
  inst.seed = seed;
  inst.target_normDD = target_normDD;
  double sumL = 0.0;
  for (int i = 0; i < m; ++i) {
    inst.A.push_back(randn(2 * n, n));
    inst.a.push_back(randn(2 * n, 1).col(0));
    sumL += op_norm_sq(LinearOperator(inst.A.back()), 1e-8);
  }
  inst.L = sumL / m;
  inst.B = randn(p1, n);
  inst.D = randn(p2, n);
  inst.d = randn(p2, 1).col(0);
  double cur = op_norm_sq(LinearOperator(inst.D), 1e-8);
  inst.D *= std::sqrt(target_normDD / cur);
  inst.normDD = op_norm_sq(LinearOperator(inst.D), 1e-8);
  return inst;
}

// ---------------------------------------------------------------------------
// LIBSVM-format datasets
// ---------------------------------------------------------------------------

struct Dataset {
  std::vector<std::vector<std::pair<int, double>>> rows;  // 0-based indices
  Vector labels;
  Index n_features = 0;
  Index n_samples() const { return static_cast<Index>(rows.size()); }

  /// Dense view of a contiguous sample range.
  Matrix dense_block(Index begin, Index count) const {
    Matrix A = Matrix::Zero(count, n_features);
    for (Index i = 0; i < count; ++i) {
      for (const auto &[j, v] : rows[static_cast<size_t>(begin + i)]) A(i, j) = v;
    }
    return A;
  }
};

/// Parses the sparse "label idx:val idx:val" format with 1-based indices.
inline Dataset parse_libsvm(const std::string &path) {
  std::ifstream is(path);
  require(is.good(), "parse_libsvm: cannot open " + path);
  Dataset ds;
  std::vector<double> labels;
  std::string line;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double label;
    if (!(ls >> label)) {
      throw std::runtime_error("parse_libsvm: bad label at line " + std::to_string(lineno));
    }
    std::vector<std::pair<int, double>> row;
    std::string tok;
    while (ls >> tok) {
      auto colon = tok.find(':');
      if (colon == std::string::npos) {
        throw std::runtime_error("parse_libsvm: malformed feature '" + tok + "' at line " +
                                 std::to_string(lineno));
      }
      int idx;
      double val;
      try {
        idx = std::stoi(tok.substr(0, colon));
        val = std::stod(tok.substr(colon + 1));
      } catch (const std::exception &) {
        throw std::runtime_error("parse_libsvm: non-numeric token '" + tok + "' at line " +
                                 std::to_string(lineno));
      }
      if (idx < 1) {
        throw std::runtime_error("parse_libsvm: index must be >= 1 at line " +
                                 std::to_string(lineno));
      }
      ds.n_features = std::max(ds.n_features, static_cast<Index>(idx));
      row.emplace_back(idx - 1, val);
    }
    ds.rows.push_back(std::move(row));
    labels.push_back(label);
  }
  ds.labels = Eigen::Map<Vector>(labels.data(), static_cast<Index>(labels.size()));
  return ds;
}

/// Synthetic classification data for desk-scale runs; rows unit-normalized.
inline Dataset make_classification_dataset(Index n_samples, Index n_features, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset ds;
  ds.n_features = n_features;
  Vector w(n_features);
  for (Index j = 0; j < n_features; ++j) w(j) = gauss(rng);
  std::vector<double> labels;
  for (Index i = 0; i < n_samples; ++i) {
    Vector x(n_features);
    for (Index j = 0; j < n_features; ++j) x(j) = gauss(rng);
    x /= x.norm();
    std::vector<std::pair<int, double>> row;
    for (Index j = 0; j < n_features; ++j) row.emplace_back(static_cast<int>(j), x(j));
    ds.rows.push_back(std::move(row));
    labels.push_back(w.dot(x) + 0.1 * gauss(rng) >= 0 ? 1.0 : -1.0);
  }
  ds.labels = Eigen::Map<Vector>(labels.data(), static_cast<Index>(labels.size()));
  return ds;
}

enum class RegressionKind { kLogistic, kLinear };

/// Shards the dataset into N contiguous per-agent problems (remainder to the
/// last agent) with ridge 1/2 |x|^2 and the unsquared-norm regularizer
/// (1/2) |B_i x|.
inline std::vector<DistNetwork::AgentProblem> gen_dist_regression(const Dataset &ds, int N,
                                                                  Index p1, RegressionKind kind,
                                                                  uint64_t seed) {
  require(N >= 1, "gen_dist_regression: N must be >= 1");
  const Index total = ds.n_samples();
  const Index base = total / N;
  require(base >= 1, "gen_dist_regression: empty agent shard");
  const Index l = ds.n_features;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<DistNetwork::AgentProblem> out;
  for (int i = 0; i < N; ++i) {
    Index begin = static_cast<Index>(i) * base;
    Index count = (i == N - 1) ? total - begin : base;
    auto Ai = std::make_shared<Matrix>(ds.dense_block(begin, count));
    auto bi = std::make_shared<Vector>(ds.labels.segment(begin, count));
    const double mi = static_cast<double>(count);
    SmoothOracle f;
    f.dim = l;
    if (kind == RegressionKind::kLogistic) {
      f.lipschitz_L = op_norm_sq(LinearOperator(*Ai), 1e-8) / (4.0 * mi) + 1.0;
      f.strong_convexity_mu = 1.0;
      f.value = [Ai, bi, mi](const Vector &x) {
        Vector z = (*Ai) * x;
        double v = 0.0;
        for (Index j = 0; j < z.size(); ++j) v += std::log1p(std::exp(-z(j) * (*bi)(j)));
        return v / mi + 0.5 * x.squaredNorm();
      };
      f.gradient = [Ai, bi, mi](const Vector &x) -> Vector {
        Vector z = (*Ai) * x;
        Vector w(z.size());
        for (Index j = 0; j < z.size(); ++j) {
          w(j) = -(*bi)(j) / (1.0 + std::exp((*bi)(j)*z(j)));
        }
        return Ai->transpose() * w / mi + x;
      };
    } else {
      f.lipschitz_L = op_norm_sq(LinearOperator(*Ai), 1e-8) / mi + 1.0;
      f.strong_convexity_mu = 1.0;
      f.value = [Ai, bi, mi](const Vector &x) {
        return 0.5 * ((*Ai) * x - (*bi)).squaredNorm() / mi + 0.5 * x.squaredNorm();
      };
      f.gradient = [Ai, bi, mi](const Vector &x) -> Vector {
        return Ai->transpose() * ((*Ai) * x - (*bi)) / mi + x;
      };
    }
    // per-sample components (ridge charged to every component)
    for (Index s = 0; s < count; ++s) {
      SmoothOracle::Component c;
      if (kind == RegressionKind::kLogistic) {
        c.value = [Ai, bi, s](const Vector &x) {
          double z = Ai->row(s).dot(x);
          return std::log1p(std::exp(-z * (*bi)(s))) + 0.5 * x.squaredNorm();
        };
        c.gradient = [Ai, bi, s](const Vector &x) -> Vector {
          double z = Ai->row(s).dot(x);
          double w = -(*bi)(s) / (1.0 + std::exp((*bi)(s)*z));
          return Ai->row(s).transpose() * w + x;
        };
      } else {
        c.value = [Ai, bi, s](const Vector &x) {
          double e = Ai->row(s).dot(x) - (*bi)(s);
          return 0.5 * e * e + 0.5 * x.squaredNorm();
        };
        c.gradient = [Ai, bi, s](const Vector &x) -> Vector {
          double e = Ai->row(s).dot(x) - (*bi)(s);
          return Ai->row(s).transpose() * e + x;
        };
      }
      f.components.push_back(std::move(c));
    }
    f.convention = SumConvention::kMean;

    DistNetwork::AgentProblem p;
    p.f = std::move(f);
    Matrix Bi(p1, l);
    for (Index r = 0; r < p1; ++r)
      for (Index cidx = 0; cidx < l; ++cidx) Bi(r, cidx) = gauss(rng);
    p.B = std::move(Bi);
    p.r = make_l2norm_prox(p1, 0.5);
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rate verification
// ---------------------------------------------------------------------------

/// Least-squares slope of log y against log x over the last `window` points.
inline double slope_fit(const std::vector<double> &x, const std::vector<double> &y,
                        size_t window) {
  require(x.size() == y.size(), "slope_fit: length mismatch");
  require(window >= 10, "slope_fit: window must be >= 10");
  require(x.size() >= window, "slope_fit: not enough points");
  const size_t start = x.size() - window;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = start; i < x.size(); ++i) {
    require(x[i] > 0 && y[i] > 0, "slope_fit: nonpositive value in window");
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(window);
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Config-driven experiment harness
// ---------------------------------------------------------------------------

/// Flat key-value config with one [solver NAME] section per configured
/// solver. Keys before the first section are global.
struct ExperimentConfig {
  std::map<std::string, std::string> global;
  struct SolverSpec {
    std::string name;
    std::map<std::string, std::string> kv;
  };
  std::vector<SolverSpec> solvers;

  std::string get(const std::string &key, const std::string &fallback = "") const {
    auto it = global.find(key);
    return it == global.end() ? fallback : it->second;
  }
  double get_num(const std::string &key, double fallback) const {
    auto it = global.find(key);
    return it == global.end() ? fallback : std::stod(it->second);
  }
};

inline ExperimentConfig parse_config(std::istream &is) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> *target = &cfg.global;
  std::string line;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t\r");
      size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', "parse_config: bad section at line " + std::to_string(lineno));
      std::string inner = trim(line.substr(1, line.size() - 2));
      require(inner.rfind("solver ", 0) == 0,
              "parse_config: unknown section '" + inner + "' at line " + std::to_string(lineno));
      cfg.solvers.push_back({trim(inner.substr(7)), {}});
      target = &cfg.solvers.back().kv;
      continue;
    }
    auto eq = line.find('=');
    require(eq != std::string::npos, "parse_config: expected key=value at line " +
                                          std::to_string(lineno));
    (*target)[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string &path) {
  std::ifstream is(path);
  require(is.good(), "parse_config: cannot open " + path);
  return parse_config(is);
}

inline SolverKind solver_kind_from_name(const std::string &name) {
  if (name == "balpa" || name == "s-balpa" || name == "sbalpa") return SolverKind::kBalpa;
  if (name == "condat_vu" || name == "cv") return SolverKind::kCondatVu;
  if (name == "tripd") return SolverKind::kTriPd;
  if (name == "pd3o") return SolverKind::kPd3o;
  if (name == "pdfp") return SolverKind::kPdfp;
  if (name == "afba") return SolverKind::kAfba;
  throw std::invalid_argument("unknown solver '" + name + "'");
}

struct RaceEntry {
  std::string name;
  double epochs = 0.0;
  long iterations = 0;
  bool converged = false;
  std::string note;
};

struct RaceResult {
  std::vector<RaceEntry> entries;
  bool any_dnf = false;
};

/// Runs every configured solver on the same generated instance and seed.
/// Reference x* comes from a high-accuracy BALPA run. Writes one CSV per
/// solver, an epochs-to-tolerance summary, and log-log plot data per curve.
inline RaceResult run_experiment(const ExperimentConfig &cfg, const std::string &out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const Index n = static_cast<Index>(cfg.get_num("n", 200));
  const int m = static_cast<int>(cfg.get_num("m", 10));
  const Index p1 = static_cast<Index>(cfg.get_num("p1", 20));
  const Index p2 = static_cast<Index>(cfg.get_num("p2", 20));
  const double target = cfg.get_num("target_normDD", 1e3);
  const uint64_t seed = static_cast<uint64_t>(cfg.get_num("seed", 1));
  const double tol = cfg.get_num("tol", 1e-6);
  const long max_epochs = static_cast<long>(cfg.get_num("max_epochs", 20000));

  LassoEqInstance inst = gen_lasso_eq(n, m, p1, p2, target, seed);
  LiftedProblem lp = lift_problem(inst.problem());
  const double L = inst.L;

  // reference solution: high-accuracy BALPA
  DualMetric ref_metric = build_dual_metric(lp.Dop, 1.0 / L, 1.0);
  SolverConfig ref_cfg;
  ref_cfg.kind = SolverKind::kBalpa;
  ref_cfg.alpha = 1.0 / L;
  ref_cfg.gamma = 1.0;
  ref_cfg.max_iter = 200000;
  ref_cfg.tol = 1e-12;
  ref_cfg.stop_metric = StopMetric::kFixedPointResidual;
  auto [ref_report, ref_trace] = run(lp, ref_metric, ref_cfg);
  Reference ref;
  ref.xstar = ref_report.final_state.X.head(lp.n);
  ref.Xstar = ref_report.final_state.X;
  ref.lambda_star = ref_report.final_state.Lambda;
  ref.phi_star = lp.objective(ref_report.final_state.X);

  RaceResult result;
  std::ofstream summary(fs::path(out_dir) / "summary.txt");
  summary << "# epochs to relative error <= " << tol << " (normDD = " << inst.normDD << ")\n";
  std::ofstream gp(fs::path(out_dir) / "plot.gp");
  gp << "set logscale xy\nset xlabel 'epochs'\nset ylabel 'relative error'\nplot \\\n";

  for (const auto &sv : cfg.solvers) {
    SolverKind kind = solver_kind_from_name(sv.name);
    auto getk = [&](const std::string &k, double fb) {
      auto it = sv.kv.find(k);
      return it == sv.kv.end() ? fb : std::stod(it->second);
    };
    SolverConfig sc;
    sc.kind = kind;
    sc.tol = tol;
    sc.stop_metric = StopMetric::kRelativeErrorToReference;
    sc.max_iter = max_epochs;
    RaceEntry entry;
    entry.name = sv.name;
    try {
      std::vector<TraceRecord> trace;
      SolveReport report;
      if (kind == SolverKind::kBalpa) {
        sc.alpha = getk("alpha", 1.0 / L);
        sc.gamma = getk("gamma", 1.0);
        DualMetric metric = build_dual_metric(lp.Dop, sc.alpha, sc.gamma);
        std::string est_name = sv.kv.count("estimator") ? sv.kv.at("estimator") : "full";
        EstimatorState est = EstimatorState::Full();
        if (est_name == "saga") est = EstimatorState::Saga(seed);
        if (est_name == "lsvrg") est = EstimatorState::Lsvrg(seed, 1.0 / m);
        if (est_name == "minibatch") est = EstimatorState::Minibatch(seed);
        if (est_name != "full") sc.max_iter = max_epochs * m;
        std::tie(report, trace) = run(lp, metric, sc, &est, ref);
      } else {
        double beta = getk("beta", 1e-3);
        double scale = kind == SolverKind::kPd3o ? getk("alpha_scale", 0.8) : 1.0;
        sc.alpha = getk("alpha", scale / (beta * inst.normDD + L));
        sc.beta = beta;
        DualMetric dummy = build_dual_metric(lp.Dop, sc.alpha, 1.0);
        std::tie(report, trace) = run(lp, dummy, sc, nullptr, ref);
      }
      entry.epochs = report.epochs;
      entry.iterations = report.iterations;
      entry.converged = report.converged;
      entry.note = report.stop_reason;
      write_trace_csv(trace, (fs::path(out_dir) / (sv.name + ".csv")).string());
      std::ofstream curve(fs::path(out_dir) / (sv.name + ".dat"));
      for (const auto &t : trace) {
        if (t.relative_error && t.epoch_equivalent > 0) {
          curve << t.epoch_equivalent << ' ' << *t.relative_error << '\n';
        }
      }
      gp << "  '" << sv.name << ".dat' with lines title '" << sv.name << "', \\\n";
    } catch (const std::exception &e) {
      entry.converged = false;
      entry.note = e.what();
    }
    if (!entry.converged) result.any_dnf = true;
    summary << entry.name << ' ' << (entry.converged ? std::to_string(entry.epochs) : "DNF")
            << "  # " << entry.note << '\n';
    result.entries.push_back(std::move(entry));
  }
  return result;
}

}  // namespace balpa

#endif  // BALPA_BENCH_HPP
