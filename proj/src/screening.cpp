#include "tripscreen/screening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tripscreen {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_radius(double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw ParameterError("radius must be finite and non-negative");
}

}  // namespace

Sphere gb(const SymMat& m, const SymMat& grad, double lambda) {
  require_lambda(lambda);
  const SymMat xi = grad - lambda * m;
  Sphere s;
  s.lambda = lambda;
  s.center = m - (0.5 / lambda) * grad;
  s.radius = grad.norm() / (2.0 * lambda);
  s.general = GeneralForm{0.5 * m, -0.5 * xi, 0.25 * m.squared_norm(), 0.5 * frob_inner(xi, m),
                          0.25 * xi.squared_norm()};
  return s;
}

Sphere pgb(const Sphere& gb_sphere, bool diagonal) {
  Sphere s;
  s.lambda = gb_sphere.lambda;
  PsdSplit split;
  if (diagonal) {
    const VectorXd dg = gb_sphere.center.matrix().diagonal();
    split = {SymMat::diagonal(dg.cwiseMax(0.0)), SymMat::diagonal(dg.cwiseMin(0.0))};
  } else {
    split = psd_split(gb_sphere.center);
  }
  const double r2 = gb_sphere.radius * gb_sphere.radius - split.minus.squared_norm();
  s.center = std::move(split.plus);
  if (r2 < 0.0) {
    s.radius = 0.0;
    s.clamped = true;
  } else {
    s.radius = std::sqrt(r2);
  }
  s.center_psd = true;
  return s;
}

Sphere dgb(const SymMat& m, double gap, double lambda) {
  require_lambda(lambda);
  Sphere s;
  s.lambda = lambda;
  s.center = m;
  s.radius = std::sqrt(2.0 * std::max(gap, 0.0) / lambda);
  s.center_psd = true;
  return s;
}

Sphere dgb(const Problem& p, const SymMat& m, const VectorXd& alpha, double lambda) {
  require_lambda(lambda);
  const VectorXd x = triplet_inner_all(p, m);
  const SymMat sum = alpha_sum(p, alpha);
  const double dual = dual_value_from_sum(p, alpha, sum, lambda);
  double loss = 0.0;
  double conj = 0.0;
  for (Index t = 0; t < x.size(); ++t) {
    loss += loss_value(p.loss, x(t));
    conj += loss_conj_neg(p.loss, alpha(t));
  }
  const double primal = loss + 0.5 * lambda * m.squared_norm();
  Sphere s = dgb(m, primal - dual, lambda);
  s.general = GeneralForm{m, SymMat::zero(m.order()), m.squared_norm(), 2.0 * (loss + conj),
                          p.project(sum).squared_norm()};
  return s;
}

Sphere cdgb(const Problem& p, const VectorXd& alpha, double lambda) {
  require_lambda(lambda);
  SymMat center;
  const double dual = dual_value_from_sum(p, alpha, alpha_sum(p, alpha), lambda, &center);
  const double gap = primal_value(p, center, lambda) - dual;
  Sphere s;
  s.lambda = lambda;
  s.radius = std::sqrt(std::max(gap, 0.0) / lambda);
  s.center = std::move(center);
  s.center_psd = true;
  return s;
}

Sphere rpb(const SymMat& m0star, double lambda0, double lambda1) { return rrpb(m0star, 0.0, lambda0, lambda1); }

Sphere rrpb(const SymMat& m0, double eps, double lambda0, double lambda1) {
  require_lambda(lambda0);
  require_lambda(lambda1);
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ParameterError("eps must be finite and non-negative");
  const double nm = m0.norm();
  const double diff = std::abs(lambda0 - lambda1);
  Sphere s;
  s.lambda = lambda1;
  s.center = ((lambda0 + lambda1) / (2.0 * lambda1)) * m0;
  s.radius = diff / (2.0 * lambda1) * nm + (diff + lambda0 + lambda1) / (2.0 * lambda1) * eps;
  s.center_psd = true;
  // r is affine in 1/lambda on each side of lambda0.
  GeneralForm g{0.5 * m0, (0.5 * lambda0) * m0, 0.0, 0.0, 0.0};
  double r0 = 0.0;
  double r1 = 0.0;  // r = r0 + r1 / lambda
  if (lambda1 <= lambda0) {
    r0 = -0.5 * nm;
    r1 = lambda0 * (0.5 * nm + eps);
  } else {
    r0 = eps + 0.5 * nm;
    r1 = -0.5 * lambda0 * nm;
  }
  g.a = r0 * r0;
  g.b = 2.0 * r0 * r1;
  g.c = r1 * r1;
  s.general = std::move(g);
  return s;
}

SymMat gradient_with_alpha(const Problem& p, const SymMat& m, const VectorXd& alpha, double lambda) {
  require_lambda(lambda);
  SymMat reg = p.diagonal ? SymMat::diagonal(lambda * m.matrix().diagonal()) : lambda * m;
  return reg - alpha_sum(p, alpha);
}

HalfSpace halfspace_from_iterate(const SymMat& a) {
  PsdSplit split = psd_split(a);
  HalfSpace h;
  h.normal = -split.minus;
  h.vacuous = split.minus.norm() == 0.0;
  return h;
}

TripletStatus sphere_verdict(double hq, double hnorm, double radius, double gamma) {
  const double spread = radius * hnorm;
  if (hq - spread > 1.0) return TripletStatus::ScreenedR;
  if (hq + spread < 1.0 - gamma) return TripletStatus::ScreenedL;
  return TripletStatus::Unknown;
}

double linear_min(double hq, double hn, double ph, double pq, double pn2, double r) {
  const double sphere_val = hq - r * hn;
  if (r == 0.0 || hn == 0.0 || !(pn2 > 0.0)) return sphere_val;
  // Unconstrained minimiser Q - r H / ||H|| already satisfies <P, X> >= 0.
  if (pq * hn - r * ph >= 0.0) return sphere_val;
  const double hp2 = hn * hn - ph * ph / pn2;
  if (hp2 <= 1e-12 * hn * hn) {
    // H parallel to P: a positive multiple gives the bound 0 on the half-space.
    return ph > 0.0 ? std::max(0.0, sphere_val) : sphere_val;
  }
  const double rho2 = r * r - pq * pq / pn2;
  if (rho2 <= 0.0) return pq > 0.0 ? sphere_val : kNaN;
  const double val = hq - pq * ph / pn2 - std::sqrt(rho2 * hp2);
  return std::max(val, sphere_val);
}

std::optional<double> diag_min(const VectorXd& h, const VectorXd& q, double r) {
  const Index d = h.size();
  const double r2 = r * r;
  const double neg2 = q.cwiseMin(0.0).squaredNorm();
  if (neg2 > r2) return std::nullopt;

  auto x_at = [&](double alpha) { return (q - h / (2.0 * alpha)).cwiseMax(0.0).eval(); };
  auto phi = [&](double alpha) { return (x_at(alpha) - q).squaredNorm(); };

  if ((h.array() >= 0.0).all()) {
    double phi0 = 0.0;
    for (Index k = 0; k < d; ++k) phi0 += h(k) > 0.0 ? q(k) * q(k) : std::min(q(k), 0.0) * std::min(q(k), 0.0);
    if (phi0 <= r2) return 0.0;
  }

  std::vector<double> breaks;
  for (Index k = 0; k < d; ++k)
    if (h(k) * q(k) > 0.0) breaks.push_back(h(k) / (2.0 * q(k)));
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const std::size_t n_int = breaks.size() + 1;
  for (std::size_t iv = 0; iv < n_int; ++iv) {
    const double lo = iv == 0 ? 0.0 : breaks[iv - 1];
    const double hi = iv == breaks.size() ? kInf : breaks[iv];
    double probe;
    if (lo == 0.0 && hi == kInf)
      probe = 1.0;
    else if (lo == 0.0)
      probe = 0.5 * hi;
    else if (hi == kInf)
      probe = 2.0 * lo;
    else
      probe = 0.5 * (lo + hi);
    double a_s = 0.0;
    double b_s = 0.0;
    for (Index k = 0; k < d; ++k) {
      if (q(k) - h(k) / (2.0 * probe) > 0.0)
        a_s += 0.25 * h(k) * h(k);
      else
        b_s += q(k) * q(k);
    }
    if (a_s <= 0.0 || r2 <= b_s) continue;
    const double alpha = std::sqrt(a_s / (r2 - b_s));
    const double slack = 1e-12 * std::max(1.0, alpha);
    if (alpha >= lo - slack && alpha <= hi + slack) return h.dot(x_at(alpha));
  }

  // Rounding left no interval accepting its root; fall back to bisection on
  // the monotone radius function.
  double lo = 1e-300;
  double hi = 1.0;
  while (phi(hi) > r2 && hi < 1e300) hi *= 2.0;
  if (phi(hi) > r2) return std::nullopt;
  for (int it = 0; it < 2000 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = lo < 1e-200 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    (phi(mid) > r2 ? lo : hi) = mid;
  }
  return h.dot(x_at(hi));
}

namespace {

struct SdlsEval {
  double dual;
  double deriv;  // D'(y) / 2 = <[Q - yH']_+, H'> - C
};

class SdlsOracle {
 public:
  SdlsOracle(const SymMat& q, const VectorXd& u, const VectorXd& v, double sign, double c, bool center_psd)
      : q_(q), u_(u), v_(v), sign_(sign), c_(c), psd_(center_psd) {
    qq_ = q.squared_norm();
    qh_ = sign * (u.dot(q.matrix() * u) - v.dot(q.matrix() * v));
    const double uu = u.squaredNorm(), vv = v.squaredNorm(), uv = u.dot(v);
    hh_ = std::max(0.0, uu * uu + vv * vv - 2.0 * uv * uv);
  }

  double hnorm_sq() const { return hh_; }

  SdlsEval operator()(double y) {
    MatrixXd a = q_.matrix() - (y * sign_) * (u_ * u_.transpose() - v_ * v_.transpose());
    const SymMat am = SymMat::assume_symmetric(std::move(a));
    double plus2;
    double plus_h;
    bool done = false;
    if (psd_) {
      try {
        MinEigOptions opts;
        if (warm_.size() == q_.order()) opts.start = warm_;
        const MinEigPair mp = min_eigpair(am, opts);
        warm_ = mp.vector;
        const double a2 = qq_ - 2.0 * y * qh_ + y * y * hh_;
        const double ah = qh_ - y * hh_;
        if (mp.value >= 0.0) {
          plus2 = a2;
          plus_h = ah;
        } else {
          const double qu = mp.vector.dot(u_), qv = mp.vector.dot(v_);
          plus2 = a2 - mp.value * mp.value;
          plus_h = ah - mp.value * sign_ * (qu * qu - qv * qv);
        }
        done = true;
      } catch (const ConvergenceError&) {
      }
    }
    if (!done) {
      const EigDecomp e = eig_sym(am);
      plus2 = 0.0;
      plus_h = 0.0;
      for (Index k = 0; k < e.eigenvalues.size(); ++k) {
        const double lam = e.eigenvalues(k);
        if (lam <= 0.0) continue;
        const double qu = e.eigenvectors.col(k).dot(u_), qv = e.eigenvectors.col(k).dot(v_);
        plus2 += lam * lam;
        plus_h += lam * sign_ * (qu * qu - qv * qv);
      }
    }
    return {qq_ - plus2 - 2.0 * c_ * y, plus_h - c_};
  }

 private:
  const SymMat& q_;
  const VectorXd& u_;
  const VectorXd& v_;
  double sign_, c_;
  bool psd_;
  double qq_ = 0.0, qh_ = 0.0, hh_ = 0.0;
  VectorXd warm_;
};

}  // namespace

SdlsResult sdls_dual_ascent(const SymMat& q, const VectorXd& u, const VectorXd& v, double sign, double c,
                            double r, int budget, bool center_psd) {
  require_radius(r);
  SdlsResult res;
  SdlsOracle oracle(q, u, v, sign, c, center_psd);
  const double r2 = r * r;
  SdlsEval cur = oracle(0.0);
  res.dual = cur.dual;
  res.residual = cur.deriv;
  // Ball misses the cone entirely: only possible through rounding.
  if (cur.dual > r2) return res;
  // [Q]_+ is feasible and inside the ball.
  if (cur.deriv <= 0.0) {
    res.converged = true;
    return res;
  }
  const double hh = oracle.hnorm_sq();
  if (hh == 0.0) return res;
  const double tol = 1e-12 * std::max({1.0, std::abs(c), std::sqrt(hh) * q.norm()});

  double lo = 0.0, g_lo = cur.deriv;
  double hi = -1.0, g_hi = 0.0;
  double step = 1.0 / (2.0 * hh);
  for (int it = 1; it <= budget; ++it) {
    double y;
    if (hi < 0.0) {
      // D'(y) = 2 g, so a 1/L step on D with L = 2 ||H||^2 moves by g / ||H||^2.
      y = lo + 2.0 * step * g_lo;
    } else {
      const double w = hi - lo;
      y = lo - g_lo * w / (g_hi - g_lo);
      if (!(y > lo + 0.01 * w && y < hi - 0.01 * w)) y = 0.5 * (lo + hi);
    }
    cur = oracle(y);
    res.iterations = it;
    res.y = y;
    res.dual = cur.dual;
    res.residual = cur.deriv;
    if (cur.dual > r2) {
      res.fired = true;
      return res;
    }
    if (std::abs(cur.deriv) <= tol) {
      res.converged = true;
      return res;
    }
    if (cur.deriv > 0.0) {
      lo = y;
      g_lo = cur.deriv;
      if (hi < 0.0) step *= 2.0;
    } else {
      hi = y;
      g_hi = cur.deriv;
    }
    if (hi >= 0.0 && hi - lo <= 1e-15 * std::max(1.0, hi)) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

namespace {

TripletStatus diag_verdict(const VectorXd& h, const VectorXd& q, double r, double gamma) {
  const std::optional<double> lo = diag_min(h, q, r);
  if (lo && *lo > 1.0) return TripletStatus::ScreenedR;
  const std::optional<double> neg = diag_min(-h, q, r);
  if (neg && -*neg < 1.0 - gamma) return TripletStatus::ScreenedL;
  return TripletStatus::Unknown;
}

TripletStatus linear_verdict(double hq, double hn, double ph, double pq, double pn2, double r, double gamma) {
  const double lo = linear_min(hq, hn, ph, pq, pn2, r);
  if (lo > 1.0) return TripletStatus::ScreenedR;
  const double neg = linear_min(-hq, hn, -ph, pq, pn2, r);
  if (-neg < 1.0 - gamma) return TripletStatus::ScreenedL;
  return TripletStatus::Unknown;
}

TripletStatus sdls_verdict(const Sphere& s, const VectorXd& u, const VectorXd& v, double qplus_h,
                           double gamma, int budget) {
  if (qplus_h > 1.0) {
    if (sdls_dual_ascent(s.center, u, v, 1.0, 1.0, s.radius, budget, s.center_psd).fired)
      return TripletStatus::ScreenedR;
  } else if (qplus_h < 1.0 - gamma) {
    if (sdls_dual_ascent(s.center, u, v, -1.0, -(1.0 - gamma), s.radius, budget, s.center_psd).fired)
      return TripletStatus::ScreenedL;
  }
  return TripletStatus::Unknown;
}

double quad_diff(const MatrixXd& a, const VectorXd& u, const VectorXd& v) {
  return u.dot(a * u) - v.dot(a * v);
}

VectorXd diag_h(const VectorXd& u, const VectorXd& v) { return u.cwiseAbs2() - v.cwiseAbs2(); }

}  // namespace

TripletStatus rule_sphere(const Sphere& s, const Problem& p, std::size_t t) {
  return sphere_verdict(triplet_inner(s.center, p.set(), t), p.hnorm(t), s.radius, p.loss.gamma);
}

TripletStatus rule_linear(const Sphere& s, const HalfSpace& h, const Problem& p, std::size_t t) {
  if (p.diagonal) return rule_diag(s, p, t);
  const double hq = triplet_inner(s.center, p.set(), t);
  const TripletStatus base = sphere_verdict(hq, p.hnorm(t), s.radius, p.loss.gamma);
  if (base != TripletStatus::Unknown || h.vacuous) return base;
  const double ph = triplet_inner(h.normal, p.set(), t);
  return linear_verdict(hq, p.hnorm(t), ph, frob_inner(h.normal, s.center), h.normal.squared_norm(), s.radius,
                        p.loss.gamma);
}

TripletStatus rule_sdls(const Sphere& s, const Problem& p, std::size_t t, int budget) {
  if (p.diagonal) return rule_diag(s, p, t);
  const double hq = triplet_inner(s.center, p.set(), t);
  const TripletStatus base = sphere_verdict(hq, p.hnorm(t), s.radius, p.loss.gamma);
  if (base != TripletStatus::Unknown) return base;
  const double qph = s.center_psd ? hq : triplet_inner(project_psd(s.center), p.set(), t);
  return sdls_verdict(s, p.set().u(t), p.set().v(t), qph, p.loss.gamma, budget);
}

TripletStatus rule_diag(const Sphere& s, const Problem& p, std::size_t t) {
  if (!p.diagonal) throw ConfigError("diag rule requires diagonal mode");
  const VectorXd h = diag_h(p.set().u(t), p.set().v(t));
  const VectorXd q = s.center.matrix().diagonal();
  const TripletStatus base = sphere_verdict(h.dot(q), h.norm(), s.radius, p.loss.gamma);
  if (base != TripletStatus::Unknown) return base;
  return diag_verdict(h, q, s.radius, p.loss.gamma);
}

TripletRanges lambda_range_rrpb(double hm0, double hnorm, double m0norm, double eps, double lambda0,
                                double gamma) {
  TripletRanges out;
  const double hm = hnorm * m0norm;
  const double he = 2.0 * eps * hnorm;

  const double a_r = hm0 - 2.0 + hm;
  if (a_r > 0.0) {
    const double lo = lambda0 * (hm - hm0 + he) / a_r;
    const double hi = lambda0 * (hm + hm0) / (hm - hm0 + 2.0 + he);
    if (lo < lambda0) out.r = {std::max(lo, 0.0), hi, false};
  }

  const double a_l = 2.0 * (1.0 - gamma) + hm - hm0;
  if (a_l > 0.0) {
    const double lo = lambda0 * (hm + hm0 + he) / a_l;
    const double c1 = hm0 + hm + he - 2.0 * (1.0 - gamma);
    const double hi = c1 > 0.0 ? lambda0 * (hm - hm0) / c1 : kInf;
    if (lo < lambda0) out.l = {std::max(lo, 0.0), hi, false};
  }
  return out;
}

TripletRanges lambda_range_rrpb(const SymMat& m0, double eps, double lambda0, const Problem& p, std::size_t t) {
  return lambda_range_rrpb(triplet_inner(m0, p.set(), t), p.hnorm(t), m0.norm(), eps, lambda0, p.loss.gamma);
}

ScreenCounts screen_members(const Problem& p, const Sphere& s, const RuleOptions& opts,
                            std::span<const Index> members, const VectorXd& hq,
                            std::vector<TripletStatus>& statuses) {
  if (statuses.size() != p.size()) throw DimensionError("status vector size does not match triplet count");
  if (hq.size() != static_cast<Index>(members.size())) throw DimensionError("hq size does not match members");
  Rule rule = opts.rule;
  if (p.diagonal && rule != Rule::Sphere) rule = Rule::Diag;
  if (!p.diagonal && rule == Rule::Diag) throw ConfigError("diag rule requires diagonal mode");
  const bool use_linear = rule == Rule::Linear && opts.halfspace && !opts.halfspace->vacuous;

  double pq = 0.0, pn2 = 0.0;
  if (use_linear) {
    pq = frob_inner(opts.halfspace->normal, s.center);
    pn2 = opts.halfspace->normal.squared_norm();
  }
  SymMat qplus;
  if (rule == Rule::SDLS && !s.center_psd) qplus = project_psd(s.center);
  const VectorXd qdiag = s.center.matrix().diagonal();
  const double gamma = p.loss.gamma;

  ScreenCounts counts;
  for (std::size_t k = 0; k < members.size(); ++k) {
    const std::size_t t = static_cast<std::size_t>(members[k]);
    if (statuses[t] != TripletStatus::Unknown) continue;
    const double hn = p.hnorm(t);
    TripletStatus st = sphere_verdict(hq(static_cast<Index>(k)), hn, s.radius, gamma);
    if (st == TripletStatus::Unknown && rule != Rule::Sphere) {
      const VectorXd u = p.set().u(t);
      const VectorXd v = p.set().v(t);
      if (rule == Rule::Diag) {
        st = diag_verdict(diag_h(u, v), qdiag, s.radius, gamma);
      } else if (use_linear) {
        const double ph = quad_diff(opts.halfspace->normal.matrix(), u, v);
        st = linear_verdict(hq(static_cast<Index>(k)), hn, ph, pq, pn2, s.radius, gamma);
      } else if (rule == Rule::SDLS) {
        const double qph = s.center_psd ? hq(static_cast<Index>(k)) : quad_diff(qplus.matrix(), u, v);
        st = sdls_verdict(s, u, v, qph, gamma, opts.sdls_budget);
      }
    }
    statuses[t] = st;
    if (st == TripletStatus::ScreenedL)
      ++counts.new_l;
    else if (st == TripletStatus::ScreenedR)
      ++counts.new_r;
  }
  for (TripletStatus st : statuses)
    if (st == TripletStatus::Unknown) ++counts.remaining;
  return counts;
}

ScreenCounts screen_all(const Problem& p, const Sphere& s, const RuleOptions& opts,
                        std::vector<TripletStatus>& statuses) {
  if (statuses.size() != p.size()) throw DimensionError("status vector size does not match triplet count");
  std::vector<Index> members;
  for (std::size_t t = 0; t < statuses.size(); ++t)
    if (statuses[t] == TripletStatus::Unknown) members.push_back(static_cast<Index>(t));
  const Workset ws(p.set(), members);
  const VectorXd hq = ws.inner(s.center, p.diagonal);
  return screen_members(p, s, opts, members, hq, statuses);
}

const char* to_string(Bound b) {
  switch (b) {
    case Bound::None: return "none";
    case Bound::GB: return "gb";
    case Bound::PGB: return "pgb";
    case Bound::DGB: return "dgb";
    case Bound::CDGB: return "cdgb";
    case Bound::RRPB: return "rrpb";
    case Bound::RRPB_PGB: return "rrpb+pgb";
  }
  return "?";
}

const char* to_string(Rule r) {
  switch (r) {
    case Rule::Sphere: return "sphere";
    case Rule::Linear: return "linear";
    case Rule::SDLS: return "sdls";
    case Rule::Diag: return "diag";
  }
  return "?";
}

Bound parse_bound(const std::string& name) {
  for (Bound b : {Bound::None, Bound::GB, Bound::PGB, Bound::DGB, Bound::CDGB, Bound::RRPB, Bound::RRPB_PGB})
    if (name == to_string(b)) return b;
  throw ConfigError("unknown bound '" + name + "'");
}

Rule parse_rule(const std::string& name) {
  for (Rule r : {Rule::Sphere, Rule::Linear, Rule::SDLS, Rule::Diag})
    if (name == to_string(r)) return r;
  throw ConfigError("unknown rule '" + name + "'");
}

}  // namespace tripscreen
