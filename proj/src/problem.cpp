#include "tripscreen/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace tripscreen {

void Dataset::validate() const {
  if (features.rows() < 2) throw InputError("dataset needs at least 2 samples");
  if (static_cast<Index>(labels.size()) != features.rows())
    throw InputError("label count does not match sample count");
  if (!features.allFinite()) throw InputError("dataset has non-finite features");
  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw InputError("dataset needs at least 2 distinct labels");
}

Workset::Workset(const TripletSet& set, std::vector<Index> members) : members_(std::move(members)) {
  std::vector<Index> slot(static_cast<std::size_t>(set.pair_count()), -1);
  std::vector<Index> used;
  lu_.resize(members_.size());
  lv_.resize(members_.size());
  auto take = [&](Index pair) {
    Index& s = slot[static_cast<std::size_t>(pair)];
    if (s < 0) {
      s = static_cast<Index>(used.size());
      used.push_back(pair);
    }
    return s;
  };
  for (std::size_t k = 0; k < members_.size(); ++k) {
    const Triplet& t = set[static_cast<std::size_t>(members_[k])];
    lu_[k] = take(t.u_pair);
    lv_[k] = take(t.v_pair);
  }
  pairs_.resize(set.dim(), static_cast<Index>(used.size()));
  for (std::size_t c = 0; c < used.size(); ++c) pairs_.col(static_cast<Index>(c)) = set.pairs().col(used[c]);
}

VectorXd Workset::inner(const SymMat& m, bool diagonal) const {
  VectorXd q;
  if (diagonal) {
    q = pairs_.cwiseAbs2().transpose() * m.matrix().diagonal();
  } else {
    const MatrixXd mp = m.matrix() * pairs_;
    q = pairs_.cwiseProduct(mp).colwise().sum().transpose();
  }
  VectorXd out(static_cast<Index>(members_.size()));
  for (std::size_t k = 0; k < members_.size(); ++k) out(static_cast<Index>(k)) = q(lu_[k]) - q(lv_[k]);
  return out;
}

SymMat Workset::weighted_sum(const VectorXd& c, bool diagonal) const {
  if (c.size() != static_cast<Index>(members_.size())) throw DimensionError("weight vector size mismatch");
  VectorXd w = VectorXd::Zero(pairs_.cols());
  for (std::size_t k = 0; k < members_.size(); ++k) {
    w(lu_[k]) += c(static_cast<Index>(k));
    w(lv_[k]) -= c(static_cast<Index>(k));
  }
  if (diagonal) return SymMat::diagonal(pairs_.cwiseAbs2() * w);
  const MatrixXd scaled = pairs_ * w.asDiagonal();
  MatrixXd s = scaled * pairs_.transpose();
  return SymMat::assume_symmetric(std::move(s));
}

namespace {

void fill_norms(const MatrixXd& pairs, Triplet& t) {
  const auto u = pairs.col(t.u_pair);
  const auto v = pairs.col(t.v_pair);
  const double uu = u.squaredNorm();
  const double vv = v.squaredNorm();
  const double uv = u.dot(v);
  t.hnorm = std::sqrt(std::max(0.0, uu * uu + vv * vv - 2.0 * uv * uv));
  t.hnorm_diag = (u.cwiseAbs2() - v.cwiseAbs2()).norm();
}

}  // namespace

TripletSet::TripletSet(MatrixXd pairs, std::vector<Triplet> triplets)
    : pairs_(std::move(pairs)), triplets_(std::move(triplets)) {
  if (!pairs_.allFinite()) throw InputError("pair differences are not finite");
  for (Triplet& t : triplets_) {
    if (t.u_pair < 0 || t.u_pair >= pairs_.cols() || t.v_pair < 0 || t.v_pair >= pairs_.cols())
      throw DimensionError("triplet references a missing pair");
    fill_norms(pairs_, t);
  }
  std::vector<Index> everyone(triplets_.size());
  std::iota(everyone.begin(), everyone.end(), Index{0});
  all_ = std::make_shared<const Workset>(*this, std::move(everyone));
}

TripletSet TripletSet::from_vectors(const MatrixXd& u, const MatrixXd& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) throw DimensionError("u and v shapes differ");
  const Index n = u.cols();
  MatrixXd pairs(u.rows(), 2 * n);
  std::vector<Triplet> ts(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t) {
    pairs.col(2 * t) = u.col(t);
    pairs.col(2 * t + 1) = v.col(t);
    ts[static_cast<std::size_t>(t)].u_pair = 2 * t;
    ts[static_cast<std::size_t>(t)].v_pair = 2 * t + 1;
  }
  return TripletSet(std::move(pairs), std::move(ts));
}

TripletSet build_triplets(const Dataset& data, int k) {
  data.validate();
  if (k < 0) throw ConfigError("k must be positive (0 selects all neighbours)");
  const Index n = data.size();
  const Index d = data.dim();
  const MatrixXd& x = data.features;
  const VectorXd sq = x.rowwise().squaredNorm();

  std::vector<Index> pair_i, pair_o;  // pair = x_i - x_o
  std::vector<Triplet> out;
  std::vector<std::pair<double, Index>> same, other;
  for (Index i = 0; i < n; ++i) {
    same.clear();
    other.clear();
    const VectorXd dist = (sq.array() + sq(i) - 2.0 * (x * x.row(i).transpose()).array()).matrix();
    for (Index o = 0; o < n; ++o) {
      if (o == i) continue;
      const double dd = std::max(0.0, dist(o));
      if (data.labels[static_cast<std::size_t>(o)] == data.labels[static_cast<std::size_t>(i)])
        same.emplace_back(dd, o);
      else
        other.emplace_back(dd, o);
    }
    const auto pick = [&](std::vector<std::pair<double, Index>>& cand) {
      const std::size_t take = k == 0 ? cand.size() : std::min<std::size_t>(static_cast<std::size_t>(k), cand.size());
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
      cand.resize(take);
    };
    pick(same);
    pick(other);
    if (same.empty() || other.empty()) continue;
    const Index v_base = static_cast<Index>(pair_i.size());
    for (const auto& s : same) {
      pair_i.push_back(i);
      pair_o.push_back(s.second);
    }
    const Index u_base = static_cast<Index>(pair_i.size());
    for (const auto& o : other) {
      pair_i.push_back(i);
      pair_o.push_back(o.second);
    }
    for (std::size_t a = 0; a < same.size(); ++a) {
      for (std::size_t b = 0; b < other.size(); ++b) {
        Triplet t;
        t.i = i;
        t.j = same[a].second;
        t.l = other[b].second;
        t.v_pair = v_base + static_cast<Index>(a);
        t.u_pair = u_base + static_cast<Index>(b);
        out.push_back(t);
      }
    }
  }
  if (out.empty()) throw ConfigError("dataset yields no triplets");
  MatrixXd pairs(d, static_cast<Index>(pair_i.size()));
  for (std::size_t c = 0; c < pair_i.size(); ++c)
    pairs.col(static_cast<Index>(c)) = (x.row(pair_i[c]) - x.row(pair_o[c])).transpose();
  return TripletSet(std::move(pairs), std::move(out));
}

void LossSpec::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0, 1]");
}

double loss_value(const LossSpec& spec, double x) {
  const double g = spec.gamma;
  if (x > 1.0) return 0.0;
  if (x < 1.0 - g) return 1.0 - x - 0.5 * g;
  return (1.0 - x) * (1.0 - x) / (2.0 * g);
}

double loss_grad(const LossSpec& spec, double x) {
  const double g = spec.gamma;
  if (x >= 1.0) return 0.0;
  if (x < 1.0 - g) return -1.0;
  return -(1.0 - x) / g;
}

double loss_conj_neg(const LossSpec& spec, double a) { return 0.5 * spec.gamma * a * a - a; }

Problem::Problem(TripletSet set, LossSpec spec, bool diag)
    : triplets(std::make_shared<const TripletSet>(std::move(set))), loss(spec), diagonal(diag) {
  loss.validate();
}

SymMat Problem::project(const SymMat& a) const {
  if (diagonal) return SymMat::diagonal(a.matrix().diagonal().cwiseMax(0.0));
  return project_psd(a);
}

PsdSplit Problem::split(const SymMat& a) const {
  if (diagonal) {
    const VectorXd dg = a.matrix().diagonal();
    return {SymMat::diagonal(dg.cwiseMax(0.0)), SymMat::diagonal(dg.cwiseMin(0.0))};
  }
  return psd_split(a);
}

double triplet_inner(const SymMat& m, const TripletSet& set, std::size_t t) {
  if (m.order() != set.dim()) throw DimensionError("metric order does not match triplet dimension");
  const VectorXd u = set.u(t);
  const VectorXd v = set.v(t);
  return u.dot(m.matrix() * u) - v.dot(m.matrix() * v);
}

VectorXd triplet_inner_all(const Problem& p, const SymMat& m) {
  if (m.order() != p.dim()) throw DimensionError("metric order does not match triplet dimension");
  return p.set().all().inner(m, p.diagonal);
}

void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be positive and finite");
}

double loss_sum(const Problem& p, const SymMat& m) {
  const VectorXd x = triplet_inner_all(p, m);
  double s = 0.0;
  for (Index t = 0; t < x.size(); ++t) s += loss_value(p.loss, x(t));
  return s;
}

double primal_value(const Problem& p, const SymMat& m, double lambda) {
  require_lambda(lambda);
  return loss_sum(p, m) + 0.5 * lambda * m.squared_norm();
}

SymMat gradient(const Problem& p, const SymMat& m, double lambda) {
  require_lambda(lambda);
  const VectorXd x = triplet_inner_all(p, m);
  VectorXd g(x.size());
  for (Index t = 0; t < x.size(); ++t) g(t) = loss_grad(p.loss, x(t));
  SymMat out = p.set().all().weighted_sum(g, p.diagonal);
  if (p.diagonal)
    out += SymMat::diagonal(lambda * m.matrix().diagonal());
  else
    out += lambda * m;
  return out;
}

DualState dual_from_primal(const Problem& p, const SymMat& m) {
  const VectorXd x = triplet_inner_all(p, m);
  DualState st;
  st.alpha.resize(x.size());
  for (Index t = 0; t < x.size(); ++t) st.alpha(t) = -loss_grad(p.loss, x(t));
  st.gamma_matrix = -p.split(alpha_sum(p, st.alpha)).minus;
  return st;
}

namespace {

void require_feasible(const VectorXd& alpha, std::size_t n) {
  if (static_cast<std::size_t>(alpha.size()) != n) throw DimensionError("alpha size does not match triplet count");
  for (Index t = 0; t < alpha.size(); ++t)
    if (!(alpha(t) >= 0.0 && alpha(t) <= 1.0)) throw FeasibilityError("alpha must lie in [0, 1]");
}

}  // namespace

SymMat alpha_sum(const Problem& p, const VectorXd& alpha) {
  return p.set().all().weighted_sum(alpha, p.diagonal);
}

SymMat m_of_alpha(const Problem& p, const VectorXd& alpha, double lambda) {
  require_lambda(lambda);
  require_feasible(alpha, p.size());
  return (1.0 / lambda) * p.project(alpha_sum(p, alpha));
}

double dual_value_from_sum(const Problem& p, const VectorXd& alpha, const SymMat& sum, double lambda,
                           SymMat* m_out) {
  const SymMat plus = p.project(sum);
  if (m_out) *m_out = (1.0 / lambda) * plus;
  return -0.5 * p.loss.gamma * alpha.squaredNorm() + alpha.sum() - plus.squared_norm() / (2.0 * lambda);
}

double dual_value(const Problem& p, const VectorXd& alpha, double lambda) {
  require_lambda(lambda);
  require_feasible(alpha, p.size());
  return dual_value_from_sum(p, alpha, alpha_sum(p, alpha), lambda);
}

double duality_gap(const Problem& p, const SymMat& m, const VectorXd& alpha, double lambda) {
  return primal_value(p, m, lambda) - dual_value(p, alpha, lambda);
}

Partition categorize_values(const VectorXd& inner, const LossSpec& spec) {
  Partition out;
  out.category.resize(static_cast<std::size_t>(inner.size()));
  for (Index t = 0; t < inner.size(); ++t) {
    Category c = Category::C;
    if (inner(t) < 1.0 - spec.gamma)
      c = Category::L;
    else if (inner(t) > 1.0)
      c = Category::R;
    out.category[static_cast<std::size_t>(t)] = c;
    (c == Category::L ? out.n_l : c == Category::R ? out.n_r : out.n_c)++;
  }
  return out;
}

Partition categorize(const Problem& p, const SymMat& mstar) {
  return categorize_values(triplet_inner_all(p, mstar), p.loss);
}

}  // namespace tripscreen
