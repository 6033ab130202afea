#ifndef BALPA_DISTRIBUTED_HPP
#define BALPA_DISTRIBUTED_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "balpa/problem.hpp"
#include "balpa/solvers.hpp"

namespace balpa {

using EdgeSet = std::set<std::pair<int, int>>;  // (i, j) with i < j

/// Undirected connected communication graph with its mixing matrix U.
struct NetworkTopology {
  int N = 0;
  EdgeSet edges;
  Matrix U;

  std::vector<int> neighbors(int i) const {
    std::vector<int> out;
    for (const auto &[a, b] : edges) {
      if (a == i) out.push_back(b);
      if (b == i) out.push_back(a);
    }
    return out;
  }
};

inline bool graph_connected(int N, const EdgeSet &edges) {
  if (N == 0) return false;
  std::vector<std::vector<int>> adj(static_cast<size_t>(N));
  for (const auto &[a, b] : edges) {
    adj[static_cast<size_t>(a)].push_back(b);
    adj[static_cast<size_t>(b)].push_back(a);
  }
  std::vector<bool> seen(static_cast<size_t>(N), false);
  std::vector<int> stack{0};
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[static_cast<size_t>(v)]) {
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == N;
}

/// Metropolis weights: U_ij = 1/(1 + max(deg_i, deg_j)) on edges, diagonal
/// fills the row to 1. Symmetric doubly stochastic, positive on the graph
/// support, null(I - U) = span(1) for connected graphs.
inline NetworkTopology metropolis_mixing(int N, const EdgeSet &edges) {
  for (const auto &[a, b] : edges) {
    require(0 <= a && a < b && b < N, "metropolis_mixing: bad edge");
  }
  require(graph_connected(N, edges), "metropolis_mixing: graph is disconnected");
  std::vector<int> deg(static_cast<size_t>(N), 0);
  for (const auto &[a, b] : edges) {
    ++deg[static_cast<size_t>(a)];
    ++deg[static_cast<size_t>(b)];
  }
  Matrix U = Matrix::Zero(N, N);
  for (const auto &[a, b] : edges) {
    double w = 1.0 / (1.0 + std::max(deg[static_cast<size_t>(a)], deg[static_cast<size_t>(b)]));
    U(a, b) = w;
    U(b, a) = w;
  }
  for (int i = 0; i < N; ++i) U(i, i) = 1.0 - U.row(i).sum();
  NetworkTopology t;
  t.N = N;
  t.edges = edges;
  t.U = std::move(U);
  return t;
}

inline EdgeSet ring_edges(int N) {
  EdgeSet e;
  for (int i = 0; i < N; ++i) {
    int j = (i + 1) % N;
    e.insert({std::min(i, j), std::max(i, j)});
  }
  return e;
}

inline EdgeSet path_edges(int N) {
  EdgeSet e;
  for (int i = 0; i + 1 < N; ++i) e.insert({i, i + 1});
  return e;
}

inline EdgeSet star_edges(int N) {
  EdgeSet e;
  for (int i = 1; i < N; ++i) e.insert({0, i});
  return e;
}

/// Per-agent dual preconditioner block
///   S_i = ((alpha + alpha gamma)/gamma) I + (alpha/(1-gamma)) B_i B_i^T.
inline Matrix build_agent_dual_factor(const Matrix &B_i, double alpha, double gamma) {
  require(alpha > 0, "build_agent_dual_factor: alpha must be positive");
  require(gamma > 0 && gamma < 1, "build_agent_dual_factor: gamma must lie in (0,1)");
  const Index mi = B_i.rows();
  Matrix S = ((alpha + alpha * gamma) / gamma) * Matrix::Identity(mi, mi);
  S.noalias() += (alpha / (1.0 - gamma)) * B_i * B_i.transpose();
  return S;
}

/// Local data and state of one agent in the synchronous simulation.
struct AgentState {
  SmoothOracle f;          // dim l
  ProxOracle r;            // dim m_i (zero function when absent)
  Matrix B;                // m_i x l
  Vector x, y, mu, nu;
  Vector xbar, ybar;
  Eigen::LLT<Matrix> dual_llt;
  EstimatorState estimator = EstimatorState::Full();
};

struct RoundMessage {
  int sender = 0;
  Vector payload;  // xbar_i
  long round = 0;
};

/// x̄_i = x_i - alpha_k (mu_i + B_i^T nu_i + g_i),
/// ȳ_i = prox_{r_i}^{alpha_k}(y_i + alpha_k nu_i).
inline RoundMessage agent_local_half(AgentState &a, double alpha_k, const Vector &g_i,
                                     long round) {
  a.xbar = a.x - alpha_k * (a.mu + a.B.transpose() * a.nu + g_i);
  a.ybar = a.r.prox(a.y + alpha_k * a.nu, alpha_k);
  return RoundMessage{-1, a.xbar, round};
}

/// mu/nu updates and the corrections, given the neighbor intermediates.
/// Solves S_i (nu^{k+1} - nu^k) = B_i x̄_i - ȳ_i, the first-order condition
/// of the psi^i_k prox.
inline void agent_dual_and_correct(AgentState &a, int self,
                                   const std::map<int, Vector> &inbox,
                                   const std::vector<int> &neighbors, const Matrix &U,
                                   double alpha, double gamma, double alpha_k) {
  Vector mix = U(self, self) * a.xbar;
  for (int j : neighbors) {
    auto it = inbox.find(j);
    if (it == inbox.end()) {
      throw std::runtime_error("agent_dual_and_correct: missing message from agent " +
                               std::to_string(j));
    }
    mix += U(self, j) * it->second;
  }
  Vector mu_next = a.mu + (gamma / (2.0 * alpha)) * (a.xbar - mix);
  Vector dnu = a.dual_llt.solve(a.B * a.xbar - a.ybar);
  Vector nu_next = a.nu + dnu;
  a.x = a.xbar + alpha_k * (a.mu - mu_next + a.B.transpose() * (a.nu - nu_next));
  a.y = a.ybar - alpha_k * (a.nu - nu_next);
  a.mu = std::move(mu_next);
  a.nu = std::move(nu_next);
}

/// Synchronous multi-agent S-BALPA-Dist simulation.
class DistNetwork {
 public:
  struct AgentProblem {
    SmoothOracle f;
    std::optional<ProxOracle> r;
    Matrix B;  // p1_i x l; empty (0 x l) when no regularizer composition
  };

  DistNetwork(NetworkTopology topology, std::vector<AgentProblem> problems, double alpha,
              double gamma)
      : topo_(std::move(topology)), alpha_(alpha), gamma_(gamma) {
    require(static_cast<int>(problems.size()) == topo_.N,
            "DistNetwork: one problem per agent required");
    for (auto &p : problems) {
      AgentState a;
      a.f = std::move(p.f);
      const Index l = a.f.dim;
      if (p.r) {
        a.r = *p.r;
        a.B = std::move(p.B);
        require(a.B.cols() == l && a.B.rows() == a.r.dim, "DistNetwork: B_i dims inconsistent");
      } else {
        a.B = Matrix::Zero(0, l);
        a.r = ProxOracle::ZeroFunction(0);
      }
      a.x = Vector::Zero(l);
      a.y = Vector::Zero(a.B.rows());
      a.mu = Vector::Zero(l);
      a.nu = Vector::Zero(a.B.rows());
      a.xbar = a.x;
      a.ybar = a.y;
      a.dual_llt.compute(build_agent_dual_factor(a.B, alpha, gamma));
      require(a.dual_llt.info() == Eigen::Success, "DistNetwork: agent dual factor not SPD");
      agents_.push_back(std::move(a));
    }
  }

  int N() const { return topo_.N; }
  const NetworkTopology &topology() const { return topo_; }
  AgentState &agent(int i) { return agents_[static_cast<size_t>(i)]; }
  const AgentState &agent(int i) const { return agents_[static_cast<size_t>(i)]; }
  long round() const { return round_; }
  long messages_sent() const { return messages_sent_; }

  /// One synchronous round: local halves, one exchange, dual and correction.
  void run_round(double alpha_k) {
    std::map<int, Vector> xbars;
    for (int i = 0; i < topo_.N; ++i) {
      AgentState &a = agents_[static_cast<size_t>(i)];
      Vector g = a.estimator.estimate(a.f, a.x);
      agent_local_half(a, alpha_k, g, round_);
      xbars[i] = a.xbar;
    }
    // one payload per directed edge
    messages_sent_ += 2 * static_cast<long>(topo_.edges.size());
    for (int i = 0; i < topo_.N; ++i) {
      agent_dual_and_correct(agents_[static_cast<size_t>(i)], i, xbars, topo_.neighbors(i),
                             topo_.U, alpha_, gamma_, alpha_k);
    }
    ++round_;
  }

  Vector stacked_x() const {
    const Index l = agents_.front().f.dim;
    Vector x(static_cast<Index>(topo_.N) * l);
    for (int i = 0; i < topo_.N; ++i) x.segment(i * l, l) = agents_[static_cast<size_t>(i)].x;
    return x;
  }

  double consensus_violation() const {
    const Index l = agents_.front().f.dim;
    Vector mean = Vector::Zero(l);
    for (const auto &a : agents_) mean += a.x;
    mean /= static_cast<double>(topo_.N);
    double worst = 0.0;
    for (const auto &a : agents_) worst = std::max(worst, (a.x - mean).norm());
    return worst;
  }

 private:
  NetworkTopology topo_;
  std::vector<AgentState> agents_;
  double alpha_;
  double gamma_;
  long round_ = 0;
  long messages_sent_ = 0;
};

/// The stacked problem the distributed run solves, with the analysis
/// operator D = ((I-U)/2 (x) I_l)^{1/2} materialized via eigendecomposition.
struct CompactForm {
  LiftedProblem lp;
  DualMetric metric;
  Index l = 0;
};

inline CompactForm build_compact_form(const NetworkTopology &topo,
                                      const std::vector<DistNetwork::AgentProblem> &problems,
                                      double alpha, double gamma) {
  const int N = topo.N;
  const Index l = problems.front().f.dim;
  const Index nl = static_cast<Index>(N) * l;
  require(nl <= 5000, "build_compact_form: stacked dimension exceeds the desk-scale guard");

  // D = sqrt((I-U)/2) kron I_l
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Matrix::Identity(N, N) - topo.U));
  Matrix sq_small = es.eigenvectors() *
                    es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                    es.eigenvectors().transpose();
  Matrix Dd = Matrix::Zero(nl, nl);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      Dd.block(i * l, j * l, l, l) = sq_small(i, j) * Matrix::Identity(l, l);
    }
  }

  Index p1 = 0;
  for (const auto &p : problems) p1 += p.r ? p.r->dim : 0;
  Matrix Bd = Matrix::Zero(p1, nl);
  std::vector<ProxBlock> rblocks;
  Index yoff = 0;
  for (int i = 0; i < N; ++i) {
    const auto &p = problems[static_cast<size_t>(i)];
    if (!p.r) continue;
    Bd.block(yoff, i * l, p.r->dim, l) = p.B;
    rblocks.push_back(ProxBlock{yoff, p.r->dim, *p.r});
    yoff += p.r->dim;
  }

  auto probs = std::make_shared<std::vector<DistNetwork::AgentProblem>>(problems);
  SmoothOracle f;
  f.dim = nl;
  f.convention = SumConvention::kSum;
  double Lmax = 0.0;
  for (const auto &p : problems) Lmax = std::max(Lmax, p.f.lipschitz_L);
  f.lipschitz_L = Lmax;
  f.value = [probs, l](const Vector &x) {
    double v = 0.0;
    for (size_t i = 0; i < probs->size(); ++i) {
      v += (*probs)[i].f.value(x.segment(static_cast<Index>(i) * l, l));
    }
    return v;
  };
  f.gradient = [probs, l](const Vector &x) -> Vector {
    Vector g(x.size());
    for (size_t i = 0; i < probs->size(); ++i) {
      g.segment(static_cast<Index>(i) * l, l) =
          (*probs)[i].f.gradient(x.segment(static_cast<Index>(i) * l, l));
    }
    return g;
  };

  CompositeProblem cp;
  cp.f = std::move(f);
  if (p1 > 0) {
    cp.r = make_separable_prox(std::move(rblocks));
    cp.B = LinearOperator(std::move(Bd));
  }
  cp.D = LinearOperator(std::move(Dd));
  cp.d = Vector::Zero(nl);

  CompactForm cf;
  cf.l = l;
  cf.lp = lift_problem(cp, /*dense_threshold=*/6000);

  std::vector<Matrix> blocks;
  blocks.push_back((alpha / gamma) * Matrix::Identity(nl, nl));
  for (const auto &p : problems) {
    if (p.r) blocks.push_back(build_agent_dual_factor(p.B, alpha, gamma));
  }
  cf.metric = DualMetric::BlockDiagonal(std::move(blocks), alpha, gamma, cf.lp.Dop);
  cf.metric.gamma = gamma;
  cf.metric.alpha_bar = alpha;
  return cf;
}

/// Runs the unified framework on the compact form with the block
/// preconditioner; returns the per-round iterates for equivalence testing.
inline std::vector<SaddleState> compact_form_oracle(const NetworkTopology &topo,
                                                    const std::vector<DistNetwork::AgentProblem>
                                                        &problems,
                                                    double alpha, double gamma, long rounds,
                                                    double alpha_k_override = -1.0) {
  CompactForm cf = build_compact_form(topo, problems, alpha, gamma);
  SaddleState state;
  state.X = Vector::Zero(cf.lp.primal_dim());
  state.Xbar = state.X;
  state.Lambda = Vector::Zero(cf.lp.dual_dim());
  std::vector<SaddleState> trace;
  trace.reserve(static_cast<size_t>(rounds));
  const double ak = alpha_k_override > 0 ? alpha_k_override : alpha;
  for (long k = 0; k < rounds; ++k) {
    Vector g = cf.lp.F.gradient(state.X);
    state = balpa_step(state, cf.lp, cf.metric, ak, g);
    trace.push_back(state);
  }
  return trace;
}

}  // namespace balpa

#endif  // BALPA_DISTRIBUTED_HPP
