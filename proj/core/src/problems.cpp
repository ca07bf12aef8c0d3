#include "proxskip/problems.hpp"

#include "proxskip/errors.hpp"
#include "proxskip/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace proxskip {

namespace {

void check_psd(const SymMatrix& a) {
  const Vec values = symmetric_eigen(a).values;
  const double scale = std::max(1.0, std::abs(values[0]));
  if (values[values.size() - 1] < -1e-10 * scale)
    throw ArgumentError("quadratic: matrix is not positive semidefinite");
}

void check_dim(const Vec& x, Index d, const char* what) {
  if (x.size() != d)
    throw ArgumentError(std::string(what) + ": expected dimension " + std::to_string(d) +
                        ", got " + std::to_string(x.size()));
}

// Sequential loops keep summation order independent of memory alignment, so
// equal inputs give equal bits on every code path.
double dot(const double* a, const double* b, Index n) {
  double s = 0.0;
  for (Index k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

// 1 / (1 + exp(-t)).
double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

Problem Problem::quadratic(SymMatrix a, Vec b) {
  std::vector<QuadraticTerm> terms;
  terms.push_back({std::move(a), std::move(b)});
  return quadratic(std::move(terms));
}

Problem Problem::quadratic(std::vector<QuadraticTerm> terms) {
  if (terms.empty()) throw ArgumentError("quadratic: no terms");
  const Index d = terms.front().a.size();
  if (d < 1) throw ArgumentError("quadratic: empty matrix");
  for (const auto& t : terms) {
    if (t.a.size() != d) throw ArgumentError("quadratic: terms differ in dimension");
    check_dim(t.b, d, "quadratic");
    if (!t.b.allFinite()) throw ArgumentError("quadratic: non-finite linear term");
    check_psd(t.a);
  }
  Problem p;
  p.kind_ = Kind::kQuadratic;
  p.dim_ = d;
  p.samples_ = static_cast<Index>(terms.size());
  p.weight_ = 1.0 / static_cast<double>(p.samples_);
  p.terms_ = std::move(terms);
  return p;
}

Problem Problem::logistic(DataMatrix data, Vec labels, double lambda) {
  if (data.rows() < 1 || data.cols() < 1) throw ArgumentError("logistic: empty data");
  if (labels.size() != data.rows()) throw ArgumentError("logistic: label count mismatch");
  if (!data.allFinite()) throw ArgumentError("logistic: non-finite feature");
  for (Index j = 0; j < labels.size(); ++j)
    if (labels[j] != 1.0 && labels[j] != -1.0)
      throw ArgumentError("logistic: labels must be -1 or +1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("logistic: lambda must be >= 0");
  Problem p;
  p.kind_ = Kind::kLogistic;
  p.dim_ = data.cols();
  p.samples_ = data.rows();
  p.weight_ = 1.0 / static_cast<double>(p.samples_);
  p.lambda_ = lambda;
  p.data_ = std::move(data);
  p.labels_ = std::move(labels);
  return p;
}

double Problem::value(const Vec& x) const {
  check_dim(x, dim_, "value");
  double s = 0.0;
  if (kind_ == Kind::kQuadratic) {
    for (const auto& t : terms_) {
      const Vec ax = t.a.matrix() * x;
      s += 0.5 * dot(x.data(), ax.data(), dim_) - dot(t.b.data(), x.data(), dim_);
    }
  } else {
    for (Index j = 0; j < samples_; ++j) {
      const double m = dot(data_.row(j).data(), x.data(), dim_);
      s += softplus(-labels_[j] * m);
    }
  }
  return weight_ * s + 0.5 * lambda_ * dot(x.data(), x.data(), dim_);
}

namespace {

template <class IndexAt>
void accumulate_gradient(const Problem& p, Index count, IndexAt index_at, double weight,
                         const Vec& x, Vec& out) {
  const Index d = p.dim();
  out.setZero(d);
  if (p.kind() == Problem::Kind::kQuadratic) {
    for (Index r = 0; r < count; ++r) {
      const QuadraticTerm& t = p.terms()[static_cast<std::size_t>(index_at(r))];
      const Matrix& a = t.a.matrix();
      for (Index i = 0; i < d; ++i) {
        double s = 0.0;
        // A is symmetric, so row i equals column i; columns are contiguous.
        const double* col = a.col(i).data();
        for (Index k = 0; k < d; ++k) s += col[k] * x[k];
        out[i] += s - t.b[i];
      }
    }
  } else {
    const DataMatrix& data = p.data();
    const Vec& labels = p.labels();
    for (Index r = 0; r < count; ++r) {
      const Index j = index_at(r);
      const double* row = data.row(j).data();
      const double b = labels[j];
      const double m = dot(row, x.data(), d);
      const double c = -b * sigmoid(-b * m);
      for (Index k = 0; k < d; ++k) out[k] += c * row[k];
    }
  }
  const double lambda = p.lambda();
  for (Index k = 0; k < d; ++k) out[k] = weight * out[k] + lambda * x[k];
}

}  // namespace

void Problem::gradient_into(const Vec& x, Vec& out) const {
  check_dim(x, dim_, "gradient");
  accumulate_gradient(*this, samples_, [](Index r) { return r; }, weight_, x, out);
}

void Problem::partial_gradient_into(std::span<const Index> indices, double weight, const Vec& x,
                                    Vec& out) const {
  check_dim(x, dim_, "partial_gradient");
  for (Index j : indices)
    if (j < 0 || j >= samples_) throw ArgumentError("partial_gradient: sample index out of range");
  accumulate_gradient(
      *this, static_cast<Index>(indices.size()),
      [&](Index r) { return indices[static_cast<std::size_t>(r)]; }, weight, x, out);
}

Vec Problem::sample_gradient(Index j, const Vec& x) const {
  if (j < 0 || j >= samples_) throw ArgumentError("sample_gradient: index out of range");
  const Index idx[1] = {j};
  Vec out;
  partial_gradient_into(idx, 1.0, x, out);
  return out;
}

double Problem::sample_smoothness(Index j) const {
  if (j < 0 || j >= samples_) throw ArgumentError("sample_smoothness: index out of range");
  if (kind_ == Kind::kQuadratic)
    return symmetric_eigen(terms_[static_cast<std::size_t>(j)].a).values[0] + lambda_;
  return data_.row(j).squaredNorm() / 4.0 + lambda_;
}

Problem Problem::restrict(std::span<const Index> indices, double weight) const {
  if (indices.empty()) throw ArgumentError("restrict: no samples");
  if (!(weight > 0.0)) throw ArgumentError("restrict: weight must be > 0");
  Problem p;
  p.kind_ = kind_;
  p.dim_ = dim_;
  p.samples_ = static_cast<Index>(indices.size());
  p.weight_ = weight;
  p.lambda_ = lambda_;
  if (kind_ == Kind::kQuadratic) {
    p.terms_.reserve(indices.size());
    for (Index j : indices) {
      if (j < 0 || j >= samples_) throw ArgumentError("restrict: sample index out of range");
      p.terms_.push_back(terms_[static_cast<std::size_t>(j)]);
    }
  } else {
    p.data_.resize(p.samples_, dim_);
    p.labels_.resize(p.samples_);
    for (Index r = 0; r < p.samples_; ++r) {
      const Index j = indices[static_cast<std::size_t>(r)];
      if (j < 0 || j >= samples_) throw ArgumentError("restrict: sample index out of range");
      p.data_.row(r) = data_.row(j);
      p.labels_[r] = labels_[j];
    }
  }
  return p;
}

Problem Problem::with_lambda(double lambda) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("with_lambda: lambda must be >= 0");
  Problem p = *this;
  p.lambda_ = lambda;
  return p;
}

double largest_gram_eigenvalue(const DataMatrix& data, int max_iterations, double rel_tol) {
  const Index d = data.cols();
  if (d == 0 || data.rows() == 0) return 0.0;
  const CounterRng rng(0x5eed, streams::kData);
  Vec v(d);
  for (Index k = 0; k < d; ++k) v[k] = 1.0 + rng.uniform(0, static_cast<std::uint64_t>(k));
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    const Vec av = data * v;
    Vec w = data.transpose() * av;
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  // Rayleigh quotient at the final vector.
  const Vec av = data * v;
  return std::max(lambda, av.squaredNorm());
}

SmoothnessInfo smoothness_constants(const Problem& p) {
  SmoothnessInfo info;
  if (p.kind() == Problem::Kind::kQuadratic) {
    Matrix mean = Matrix::Zero(p.dim(), p.dim());
    for (const auto& t : p.terms()) mean += t.a.matrix();
    mean *= p.sample_weight();
    mean.diagonal().array() += p.lambda();
    const Matrix sym = 0.5 * (mean + mean.transpose());
    const Vec values = symmetric_eigen(SymMatrix(sym)).values;
    info.L = values[0];
    info.mu = std::max(values[values.size() - 1], 0.0);
  } else {
    info.L = p.sample_weight() * largest_gram_eigenvalue(p.data()) / 4.0 + p.lambda();
    info.mu = p.lambda();
  }
  return info;
}

ClientSplit::ClientSplit(std::vector<std::vector<Index>> groups, Index samples)
    : groups_(std::move(groups)), samples_(samples) {
  if (groups_.empty()) throw ArgumentError("ClientSplit: no clients");
  std::vector<char> seen(static_cast<std::size_t>(samples), 0);
  Index covered = 0;
  for (auto& g : groups_) {
    if (g.empty()) throw ArgumentError("ClientSplit: empty client");
    std::sort(g.begin(), g.end());
    for (Index j : g) {
      if (j < 0 || j >= samples) throw ArgumentError("ClientSplit: sample index out of range");
      if (seen[static_cast<std::size_t>(j)]) throw ArgumentError("ClientSplit: groups overlap");
      seen[static_cast<std::size_t>(j)] = 1;
      ++covered;
    }
  }
  if (covered != samples) throw ArgumentError("ClientSplit: groups do not cover all samples");
}

ClientSplit ClientSplit::single(Index samples) {
  std::vector<Index> all(static_cast<std::size_t>(samples));
  std::iota(all.begin(), all.end(), Index{0});
  return ClientSplit({std::move(all)}, samples);
}

ClientSplit heterogeneous_split(Index samples, Index clients, SplitMode mode,
                                std::span<const double> labels) {
  if (clients < 1) throw ArgumentError("heterogeneous_split: need at least one client");
  if (clients > samples) throw ArgumentError("heterogeneous_split: more clients than samples");
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(clients));
  if (mode == SplitMode::kRoundRobin) {
    for (Index j = 0; j < samples; ++j) groups[static_cast<std::size_t>(j % clients)].push_back(j);
  } else {
    if (!labels.empty() && static_cast<Index>(labels.size()) != samples)
      throw ArgumentError("heterogeneous_split: label count mismatch");
    std::vector<Index> order(static_cast<std::size_t>(samples));
    std::iota(order.begin(), order.end(), Index{0});
    if (!labels.empty()) {
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return labels[static_cast<std::size_t>(a)] > labels[static_cast<std::size_t>(b)];
      });
    }
    for (Index i = 0; i < clients; ++i) {
      const Index lo = i * samples / clients;
      const Index hi = (i + 1) * samples / clients;
      auto& g = groups[static_cast<std::size_t>(i)];
      g.assign(order.begin() + lo, order.begin() + hi);
    }
  }
  return ClientSplit(std::move(groups), samples);
}

ClientSplit heterogeneous_split(const Problem& p, Index clients, SplitMode mode) {
  if (p.kind() == Problem::Kind::kLogistic) {
    const Vec& l = p.labels();
    return heterogeneous_split(p.samples(), clients, mode,
                               std::span<const double>(l.data(), static_cast<std::size_t>(l.size())));
  }
  return heterogeneous_split(p.samples(), clients, mode);
}

ClientProblems::ClientProblems(const Problem& global, const ClientSplit& split)
    : global_(global), split_(split) {
  if (split.samples() != global.samples())
    throw ArgumentError("ClientProblems: split does not match the sample count");
  const double weight =
      static_cast<double>(split.clients()) / static_cast<double>(global.samples());
  clients_.reserve(static_cast<std::size_t>(split.clients()));
  for (const auto& g : split.groups()) clients_.push_back(global.restrict(g, weight));
}

Vec client_gradient(const Problem& p, const ClientSplit& split, Index i, const Vec& x) {
  if (split.samples() != p.samples())
    throw ArgumentError("client_gradient: split does not match the sample count");
  if (i < 0 || i >= split.clients()) throw ArgumentError("client_gradient: client out of range");
  const double weight = static_cast<double>(split.clients()) / static_cast<double>(p.samples());
  Vec out;
  p.partial_gradient_into(split.group(i), weight, x, out);
  return out;
}

namespace synthetic {

Problem heterogeneous_quadratic(Index clients, Index dim, double kappa, double heterogeneity,
                                std::uint64_t seed, double L) {
  if (clients < 1 || dim < 1) throw ArgumentError("heterogeneous_quadratic: empty problem");
  if (!(kappa >= 1.0) || !std::isfinite(kappa))
    throw ArgumentError("heterogeneous_quadratic: kappa must be >= 1");
  if (dim == 1 && kappa != 1.0)
    throw ArgumentError("heterogeneous_quadratic: kappa > 1 needs dim >= 2");
  if (!(L > 0.0)) throw ArgumentError("heterogeneous_quadratic: L must be > 0");
  if (!(heterogeneity >= 0.0)) throw ArgumentError("heterogeneous_quadratic: heterogeneity must be >= 0");

  const CounterRng rng(seed, streams::kData);
  const double mu = L / kappa;

  DrawSequence basis_draws(rng, 0);
  Matrix g(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) g(i, j) = basis_draws.normal();
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();

  DrawSequence center_draws(rng, 1);
  Vec center(dim);
  for (Index k = 0; k < dim; ++k) center[k] = center_draws.normal();

  std::vector<QuadraticTerm> terms;
  terms.reserve(static_cast<std::size_t>(clients));
  for (Index i = 0; i < clients; ++i) {
    DrawSequence draws(rng, 2 + static_cast<std::uint64_t>(i));
    Vec s(dim);
    s[0] = L;
    if (dim > 1) s[dim - 1] = mu;
    for (Index k = 1; k + 1 < dim; ++k) s[k] = mu * std::pow(kappa, draws.uniform());
    Matrix a = q * s.asDiagonal() * q.transpose();
    a = 0.5 * (a + a.transpose()).eval();
    Vec u(dim);
    for (Index k = 0; k < dim; ++k) u[k] = center[k] + heterogeneity * draws.normal();
    Vec b = a * u;  // client i alone is minimized at u
    terms.push_back({SymMatrix(std::move(a)), std::move(b)});
  }
  return Problem::quadratic(std::move(terms));
}

Problem heterogeneous_curvature_quadratic(Index clients, Index dim, double kappa, double spread,
                                          double heterogeneity, std::uint64_t seed, double L) {
  if (clients < 1) throw ArgumentError("heterogeneous_curvature_quadratic: need clients >= 1");
  if (dim < 2) throw ArgumentError("heterogeneous_curvature_quadratic: need dim >= 2");
  if (!(kappa >= 1.0) || !std::isfinite(kappa))
    throw ArgumentError("heterogeneous_curvature_quadratic: kappa must be >= 1");
  if (!(spread > 0.0 && spread <= 1.0))
    throw ArgumentError("heterogeneous_curvature_quadratic: spread must lie in (0, 1]");
  if (!(L > 0.0)) throw ArgumentError("heterogeneous_curvature_quadratic: L must be > 0");
  if (!(heterogeneity >= 0.0))
    throw ArgumentError("heterogeneous_curvature_quadratic: heterogeneity must be >= 0");

  const CounterRng rng(seed, streams::kData);
  DrawSequence basis_draws(rng, 0);
  Matrix g(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) g(i, j) = basis_draws.normal();
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();

  std::vector<QuadraticTerm> terms;
  terms.reserve(static_cast<std::size_t>(clients));
  for (Index i = 0; i < clients; ++i) {
    DrawSequence draws(rng, 2 + static_cast<std::uint64_t>(i));
    Vec s(dim);
    for (Index k = 0; k + 1 < dim; ++k) s[k] = L * std::pow(spread, draws.uniform());
    s[i % (dim - 1)] = L;
    s[dim - 1] = L / kappa;
    Matrix a = q * s.asDiagonal() * q.transpose();
    a = 0.5 * (a + a.transpose()).eval();
    Vec u(dim);
    for (Index k = 0; k < dim; ++k) u[k] = heterogeneity * draws.normal();
    Vec b = a * u;
    terms.push_back({SymMatrix(std::move(a)), std::move(b)});
  }
  return Problem::quadratic(std::move(terms));
}

Problem logistic(Index samples, Index dim, double lambda, std::uint64_t seed,
                 double flip_fraction) {
  if (samples < 1 || dim < 1) throw ArgumentError("synthetic::logistic: empty problem");
  if (!(flip_fraction >= 0.0 && flip_fraction <= 1.0))
    throw ArgumentError("synthetic::logistic: flip_fraction must lie in [0, 1]");
  const CounterRng rng(seed, streams::kData);
  DrawSequence plane(rng, 0);
  Vec w(dim);
  for (Index k = 0; k < dim; ++k) w[k] = plane.normal();
  DataMatrix data(samples, dim);
  Vec labels(samples);
  for (Index j = 0; j < samples; ++j) {
    DrawSequence draws(rng, 1 + static_cast<std::uint64_t>(j));
    for (Index k = 0; k < dim; ++k) data(j, k) = draws.normal();
    double label = data.row(j).dot(w) >= 0.0 ? 1.0 : -1.0;
    if (draws.uniform() < flip_fraction) label = -label;
    labels[j] = label;
  }
  return Problem::logistic(std::move(data), std::move(labels), lambda);
}

}  // namespace synthetic

}  // namespace proxskip
