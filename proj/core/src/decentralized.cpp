#include "proxskip/decentralized.hpp"

#include "proxskip/errors.hpp"
#include "proxskip/federated.hpp"
#include "proxskip/rng.hpp"
#include "run_loop.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace proxskip {

namespace {

std::vector<std::pair<Index, Index>> normalize_edges(Index n,
                                                     std::vector<std::pair<Index, Index>> edges) {
  std::set<std::pair<Index, Index>> unique;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw ArgumentError("topology: node index out of range");
    if (a == b) throw ArgumentError("topology: self-loops are not allowed");
    unique.insert({std::min(a, b), std::max(a, b)});
  }
  return {unique.begin(), unique.end()};
}

constexpr double kGammaTauSlack = 1e-12;

void check_mixing_ratio(double gamma, double tau, double p) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ArgumentError("gamma must be > 0");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ArgumentError("tau must be > 0");
  if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("p must lie in (0, 1]");
  if (gamma * tau / p > 1.0 + kGammaTauSlack)
    throw ArgumentError("gamma * tau / p must be <= 1");
}

}  // namespace

Topology::Topology(Kind kind, Index nodes, std::vector<std::pair<Index, Index>> edges)
    : kind_(kind), nodes_(nodes), edges_(normalize_edges(nodes, std::move(edges))) {
  if (nodes_ < 2) throw ArgumentError("topology: need at least two nodes");
  if (!connected()) throw ArgumentError("topology: graph is disconnected");
}

Topology Topology::ring(Index n) {
  if (n < 2) throw ArgumentError("topology: need at least two nodes");
  std::vector<std::pair<Index, Index>> e;
  for (Index i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Topology(Kind::kRing, n, std::move(e));
}

Topology Topology::complete(Index n) {
  if (n < 2) throw ArgumentError("topology: need at least two nodes");
  std::vector<std::pair<Index, Index>> e;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Topology(Kind::kComplete, n, std::move(e));
}

Topology Topology::star(Index n) {
  if (n < 2) throw ArgumentError("topology: need at least two nodes");
  std::vector<std::pair<Index, Index>> e;
  for (Index i = 1; i < n; ++i) e.emplace_back(0, i);
  return Topology(Kind::kStar, n, std::move(e));
}

Topology Topology::grid(Index rows, Index cols) {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw ArgumentError("topology: need at least two nodes");
  std::vector<std::pair<Index, Index>> e;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const Index v = r * cols + c;
      if (c + 1 < cols) e.emplace_back(v, v + 1);
      if (r + 1 < rows) e.emplace_back(v, v + cols);
    }
  }
  return Topology(Kind::kGrid, rows * cols, std::move(e));
}

Topology Topology::custom(Index n, std::vector<std::pair<Index, Index>> edges) {
  return Topology(Kind::kCustom, n, std::move(edges));
}

std::vector<Index> Topology::degrees() const {
  std::vector<Index> deg(static_cast<std::size_t>(nodes_), 0);
  for (auto [a, b] : edges_) {
    ++deg[static_cast<std::size_t>(a)];
    ++deg[static_cast<std::size_t>(b)];
  }
  return deg;
}

bool Topology::connected() const {
  std::vector<Index> parent(static_cast<std::size_t>(nodes_));
  for (Index i = 0; i < nodes_; ++i) parent[static_cast<std::size_t>(i)] = i;
  auto find = [&](Index v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  Index components = nodes_;
  for (auto [a, b] : edges_) {
    const Index ra = find(a);
    const Index rb = find(b);
    if (ra != rb) {
      parent[static_cast<std::size_t>(ra)] = rb;
      --components;
    }
  }
  return components == 1;
}

std::string Topology::name() const {
  const std::string n = std::to_string(nodes_);
  switch (kind_) {
    case Kind::kRing: return "ring(" + n + ")";
    case Kind::kComplete: return "complete(" + n + ")";
    case Kind::kStar: return "star(" + n + ")";
    case Kind::kGrid: return "grid(" + n + ")";
    case Kind::kCustom: return "custom(" + n + ")";
  }
  return "custom(" + n + ")";
}

MixingMatrix mixing_matrix(const Topology& topology) {
  if (!topology.connected()) throw ArgumentError("mixing_matrix: graph is disconnected");
  const Index n = topology.nodes();
  const std::vector<Index> deg = topology.degrees();
  Matrix m = Matrix::Zero(n, n);
  for (auto [a, b] : topology.edges()) {
    const double w =
        1.0 / (1.0 + static_cast<double>(std::max(deg[static_cast<std::size_t>(a)],
                                                   deg[static_cast<std::size_t>(b)])));
    m(a, b) = w;
    m(b, a) = w;
  }
  for (Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Index j = 0; j < n; ++j)
      if (j != i) off += m(i, j);
    m(i, i) = 1.0 - off;
  }
  Matrix w = 0.5 * m;
  w.diagonal().array() += 0.5;
  return mixing_matrix_from(SymMatrix(std::move(w)));
}

MixingMatrix mixing_matrix_from(SymMatrix w) {
  const Index n = w.size();
  if (n < 2) throw ArgumentError("mixing matrix: need at least two nodes");
  for (Index i = 0; i < n; ++i) {
    if (std::abs(w.matrix().row(i).sum() - 1.0) > 1e-12)
      throw ArgumentError("mixing matrix: rows must sum to 1");
  }
  const SymmetricEigen eig = symmetric_eigen(w);
  if (eig.values[n - 1] < -1e-10) throw ArgumentError("mixing matrix: not positive semidefinite");
  if (eig.values[0] > 1.0 + 1e-10) throw ArgumentError("mixing matrix: eigenvalue above 1");

  MixingMatrix out;
  out.eigenvalues = eig.values;
  out.delta = 1.0 - eig.values[1];
  if (!(out.delta > 1e-12)) throw ArgumentError("mixing matrix: spectral gap is zero (disconnected)");

  Matrix lap = -w.matrix();
  lap.diagonal().array() += 1.0;
  out.sqrt_laplacian = matrix_sqrt_psd(SymMatrix(std::move(lap)));
  // I - W shares the eigenvectors of W with eigenvalues 1 - lambda.
  out.sqrt_laplacian_pinv = Matrix::Zero(n, n);
  out.range_projector = Matrix::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    const double s = 1.0 - eig.values[k];
    if (s <= 1e-10) continue;
    const Vec v = eig.vectors.col(k);
    out.sqrt_laplacian_pinv += (1.0 / std::sqrt(s)) * v * v.transpose();
    out.range_projector += v * v.transpose();
  }
  out.w = std::move(w);
  return out;
}

void apply_blockwise(const Matrix& k, Index block_dim, const Vec& x, Vec& out) {
  const Index n = k.rows();
  if (k.cols() != n || x.size() != n * block_dim)
    throw ArgumentError("apply_blockwise: dimension mismatch");
  out.setZero(n * block_dim);
  for (Index i = 0; i < n; ++i) {
    auto oi = out.segment(i * block_dim, block_dim);
    for (Index j = 0; j < n; ++j) {
      const double kij = k(i, j);
      if (kij != 0.0) oi += kij * x.segment(j * block_dim, block_dim);
    }
  }
}

void DenseOperator::apply(const Vec& x, Vec& out) const {
  if (x.size() != m_.cols()) throw ArgumentError("DenseOperator: dimension mismatch");
  out = m_ * x;
}

void DenseOperator::apply_transpose(const Vec& y, Vec& out) const {
  if (y.size() != m_.rows()) throw ArgumentError("DenseOperator: dimension mismatch");
  out = m_.transpose() * y;
}

void BlockOperator::apply(const Vec& x, Vec& out) const {
  apply_blockwise(k_.matrix(), block_dim_, x, out);
}

void BlockOperator::apply_transpose(const Vec& y, Vec& out) const {
  apply_blockwise(k_.matrix(), block_dim_, y, out);
}

DecentralizedState DecentralizedState::initial(Index nodes, const Vec& x0) {
  const FederatedState f = FederatedState::initial(nodes, x0);
  DecentralizedState s;
  s.nodes = nodes;
  s.dim = x0.size();
  s.x = f.x;
  s.h = f.h;
  return s;
}

Vec DecentralizedState::mean_x() const { return block_mean(x, nodes, dim); }

DecentralizedState decentralized_scaffnew_round(const DecentralizedState& state,
                                                const ClientProblems& clients, const SymMatrix& w,
                                                double gamma, double tau, double p, bool theta) {
  check_mixing_ratio(gamma, tau, p);
  const Index n = clients.clients();
  const Index d = clients.dim();
  if (w.size() != n) throw ArgumentError("decentralized: mixing matrix size differs from node count");
  if (state.nodes != n || state.dim != d || state.x.size() != n * d || state.h.size() != n * d)
    throw ArgumentError("decentralized: state does not match the clients");

  DecentralizedState next;
  next.nodes = n;
  next.dim = d;
  next.t = state.t + 1;
  next.grad_evals = state.grad_evals + n;
  next.comm_rounds = state.comm_rounds + (theta ? 1 : 0);

  Vec x_hat(n * d);
  Vec xi(d);
  Vec gi(d);
  for (Index i = 0; i < n; ++i) {
    xi = state.x.segment(i * d, d);
    clients.client(i).gradient_into(xi, gi);
    x_hat.segment(i * d, d) = xi - gamma * (gi - state.h.segment(i * d, d));
  }
  if (!theta) {
    next.x = std::move(x_hat);
    next.h = state.h;
    return next;
  }
  // (1 - c) x_hat_i + c sum_j W_ij x_hat_j, written as x_hat_i + c sum_j W_ij (x_hat_j - x_hat_i)
  // (rows of W sum to 1) so that points already in consensus stay fixed exactly.
  const double c = gamma * tau / p;
  next.x = x_hat;
  for (Index i = 0; i < n; ++i) {
    Vec pull = Vec::Zero(d);
    for (Index j = 0; j < n; ++j) {
      const double wij = w(i, j);
      if (j == i || wij == 0.0) continue;
      pull += wij * (x_hat.segment(j * d, d) - x_hat.segment(i * d, d));
    }
    next.x.segment(i * d, d) += c * pull;
  }
  next.h = state.h + (p / gamma) * (next.x - x_hat);
  return next;
}

RunRecord run_decentralized_scaffnew(const ClientProblems& clients, const MixingMatrix& mixing,
                                     const DecentralizedConfig& cfg,
                                     const std::optional<Vec>& x_star, const RunOptions& options,
                                     const Vec* x0) {
  const double tau = cfg.resolved_tau();
  check_mixing_ratio(cfg.gamma, tau, cfg.p);
  if (cfg.iterations < 0) throw ArgumentError("iterations must be >= 0");
  const Index n = clients.clients();
  const Index d = clients.dim();
  if (mixing.nodes() != n) throw ArgumentError("decentralized: mixing matrix size differs from node count");
  if (x0 && x0->size() != d) throw ArgumentError("decentralized: x0 dimension mismatch");
  if (x_star && x_star->size() != d) throw ArgumentError("decentralized: x_star dimension mismatch");

  Vec h_star;
  Vec x_star_stacked;
  if (x_star) {
    h_star.resize(n * d);
    x_star_stacked.resize(n * d);
    for (Index i = 0; i < n; ++i) {
      h_star.segment(i * d, d) = clients.client(i).gradient(*x_star);
      x_star_stacked.segment(i * d, d) = *x_star;
    }
  }
  const double dual_weight = cfg.gamma / (cfg.p * tau);

  RunRecord rec;
  rec.method = "decentralized-scaffnew";
  rec.seed = cfg.seed;
  rec.params = {{"gamma", cfg.gamma}, {"p", cfg.p},           {"tau", tau},
                {"delta", mixing.delta}, {"T", static_cast<double>(cfg.iterations)},
                {"nodes", static_cast<double>(n)}};
  detail::RunLogger logger(rec, options);

  Vec dual_gap;
  auto row_of = [&](const DecentralizedState& s) {
    RunRow row;
    row.t = s.t;
    row.comm_rounds = s.comm_rounds;
    row.grad_evals = s.grad_evals;
    row.dispersion = consensus_dispersion(s.x, n, d);
    if (x_star) {
      row.dist_sq = (s.mean_x() - *x_star).squaredNorm();
      const Vec dh = s.h - h_star;
      apply_blockwise(mixing.sqrt_laplacian_pinv, d, dh, dual_gap);
      row.lyapunov = ((s.x - x_star_stacked).squaredNorm() + dual_weight * dual_gap.squaredNorm()) /
                     static_cast<double>(n);
    }
    return row;
  };

  DecentralizedState s = DecentralizedState::initial(n, x0 ? *x0 : Vec::Zero(d));
  logger.initial(row_of(s));
  for (std::int64_t t = 0; t < cfg.iterations; ++t) {
    const bool theta = coin_flip(cfg.seed, static_cast<std::uint64_t>(s.t), cfg.p);
    s = decentralized_scaffnew_round(s, clients, mixing.w, cfg.gamma, tau, cfg.p, theta);
    if (logger.step(row_of(s), s.x.norm(), t + 1 == cfg.iterations)) break;
  }
  return rec;
}

DualState DualState::initial(Vec x0, Index dual_dim) {
  if (dual_dim < 0) throw ArgumentError("DualState: negative dual dimension");
  DualState s;
  s.x = std::move(x0);
  s.y = Vec::Zero(dual_dim);
  return s;
}

DualState splitskip_step(const DualState& state, const Objective& f, const LinearOperator& lmat,
                         const ProxOperator& psi, double gamma, double tau, double p, bool theta) {
  if (!(gamma > 0.0) || !(tau > 0.0) || !(p > 0.0 && p <= 1.0))
    throw ArgumentError("splitskip_step: need gamma > 0, tau > 0 and p in (0, 1]");
  if (state.x.size() != f.dim() || state.x.size() != lmat.cols() || state.y.size() != lmat.rows())
    throw ArgumentError("splitskip_step: dimension mismatch");
  DualState next;
  next.t = state.t + 1;
  next.prox_calls = state.prox_calls;
  Vec g;
  f.gradient_into(state.x, g);
  Vec lty;
  lmat.apply_transpose(state.y, lty);
  Vec x_hat = state.x - gamma * (g + lty);
  if (!theta) {
    next.x = std::move(x_hat);
    next.y = state.y;
    return next;
  }
  Vec lx;
  lmat.apply(x_hat, lx);
  next.y = prox_conjugate(psi, tau, state.y + tau * lx);
  Vec back;
  lmat.apply_transpose(next.y - state.y, back);
  next.x = x_hat - (gamma / p) * back;
  ++next.prox_calls;
  return next;
}

double decentralized_lyapunov(const DualState& state, const Vec& x_star, const Vec& y_star,
                              double gamma, double p, double tau) {
  if (state.x.size() != x_star.size() || state.y.size() != y_star.size())
    throw ArgumentError("decentralized_lyapunov: dimension mismatch");
  return (state.x - x_star).squaredNorm() + gamma / (p * tau) * (state.y - y_star).squaredNorm();
}

double decentralized_phi0_bound(const ClientProblems& clients, const Vec& x0, const Vec& x_star,
                                double gamma, double p, double tau, double delta) {
  if (x0.size() != clients.dim() || x_star.size() != clients.dim())
    throw ArgumentError("decentralized_phi0_bound: dimension mismatch");
  double s = 0.0;
  for (Index i = 0; i < clients.clients(); ++i) s += clients.client(i).gradient(x_star).squaredNorm();
  return (x0 - x_star).squaredNorm() +
         gamma / (p * tau * delta * static_cast<double>(clients.clients())) * s;
}

Vec reference_dual_solution(const ClientProblems& clients, const MixingMatrix& mixing,
                            const Vec& x_star, double gamma, double tau) {
  const Index n = clients.clients();
  const Index d = clients.dim();
  if (mixing.nodes() != n) throw ArgumentError("reference_dual_solution: node count mismatch");
  if (x_star.size() != d) throw ArgumentError("reference_dual_solution: dimension mismatch");
  const StackedConsensusObjective f(clients);
  const BlockOperator lmat(mixing.sqrt_laplacian, d);
  const ProxOperator psi = ProxOperator::indicator_zero();
  Vec target(n * d);
  for (Index i = 0; i < n; ++i) target.segment(i * d, d) = x_star;
  const double tol = 1e-12 * std::max(1.0, x_star.norm() * std::sqrt(static_cast<double>(n)));
  DualState s = DualState::initial(Vec::Zero(n * d), n * d);
  for (int it = 0; it < 1000000; ++it) {
    const DualState next = splitskip_step(s, f, lmat, psi, gamma, tau, 1.0, true);
    const double dy = (next.y - s.y).norm();
    s = next;
    if ((s.x - target).norm() <= tol && dy <= tol * std::max(1.0, s.y.norm())) break;
  }
  return s.y;
}

double equivalence_check(const Topology& topology, const ClientProblems& clients,
                         const EquivalenceConfig& cfg, const Vec* x0) {
  const MixingMatrix mixing = mixing_matrix(topology);
  const Index n = clients.clients();
  const Index d = clients.dim();
  if (topology.nodes() != n) throw ArgumentError("equivalence_check: node count mismatch");
  const double tau = cfg.tau > 0.0 ? cfg.tau : cfg.p / cfg.gamma;
  check_mixing_ratio(cfg.gamma, tau, cfg.p);
  const Vec start = x0 ? *x0 : Vec::Zero(d);

  const StackedConsensusObjective f(clients);
  const BlockOperator lmat(mixing.sqrt_laplacian, d);
  const ProxOperator psi = ProxOperator::indicator_zero();

  DecentralizedState a = DecentralizedState::initial(n, start);
  DualState b = DualState::initial(a.x, n * d);
  double worst = 0.0;
  for (std::int64_t t = 0; t < cfg.iterations; ++t) {
    const bool theta = coin_flip(cfg.seed, static_cast<std::uint64_t>(t), cfg.p);
    a = decentralized_scaffnew_round(a, clients, mixing.w, cfg.gamma, tau, cfg.p, theta);
    b = splitskip_step(b, f, lmat, psi, cfg.gamma, tau, cfg.p, theta);
    worst = std::max(worst, (a.x - b.x).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

}  // namespace proxskip
