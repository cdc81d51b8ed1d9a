#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace tripscreen;
using namespace tripscreen::testing;

namespace {

SymMat diag2(double a, double b) { return SymMat::diagonal((VectorXd(2) << a, b).finished()); }

struct Solved {
  Problem p;
  double lambda;
  SolveResult opt;
};

Solved solved_instance(std::uint64_t seed, Index d = 2, double frac = 0.3) {
  Problem p = make_problem(seed, 30, d, 2, 3);
  const double lam = frac * lambda_max(p);
  SolveResult opt = solve_tight(p, lam);
  return {std::move(p), lam, std::move(opt)};
}

double quad_form_diff(const SymMat& m, const VectorXd& u, const VectorXd& v) {
  return u.dot(m.matrix() * u) - v.dot(m.matrix() * v);
}

}  // namespace

TEST(GB, Examples) {
  const SymMat m = SymMat::identity(2);
  Sphere s = gb(m, SymMat::zero(2), 3.0);
  EXPECT_EQ(s.radius, 0.0);
  EXPECT_EQ((s.center - m).norm(), 0.0);
  s = gb(m, 2.0 * SymMat::identity(2), 1.0);
  EXPECT_NEAR(s.center.norm(), 0.0, 1e-15);
  EXPECT_NEAR(s.radius, std::sqrt(2.0), 1e-15);
  ASSERT_TRUE(s.general);
  EXPECT_LE((s.general->center_at(1.0) - s.center).norm(), 1e-12);
  EXPECT_NEAR(s.general->radius_sq_at(1.0), s.radius * s.radius, 1e-12);
  EXPECT_THROW(gb(m, m, 0.0), ParameterError);
}

TEST(GB, GeneralFormAcrossLambdaAndContainment) {
  const Solved inst = solved_instance(21);
  const SolveResult ref = solve_to(inst.p, inst.lambda, 1e-3);
  const SymMat g = gradient(inst.p, ref.metric, inst.lambda);
  const Sphere s = gb(ref.metric, g, inst.lambda);
  EXPECT_LE((s.center - inst.opt.metric).norm(), s.radius + 1e-9);
  // The general form built at one lambda reproduces GB at another.
  const double other = 0.5 * inst.lambda;
  const Sphere s2 = gb(ref.metric, gradient(inst.p, ref.metric, other), other);
  EXPECT_LE((s.general->center_at(other) - s2.center).norm(), 1e-9 * std::max(1.0, s2.center.norm()));
  EXPECT_NEAR(s.general->radius_sq_at(other), s2.radius * s2.radius, 1e-9 * std::max(1.0, s2.radius * s2.radius));
}

TEST(PGB, Examples) {
  Sphere g;
  g.center = diag2(1.0, -1.0);
  g.radius = std::sqrt(3.0);
  g.lambda = 1.0;
  const Sphere s = pgb(g);
  EXPECT_LE((s.center - diag2(1.0, 0.0)).norm(), 1e-14);
  EXPECT_NEAR(s.radius * s.radius, 2.0, 1e-12);
  EXPECT_FALSE(s.clamped);

  g.center = diag2(1.0, 2.0);
  const Sphere same = pgb(g);
  EXPECT_LE((same.center - g.center).norm(), 1e-14);
  EXPECT_NEAR(same.radius, g.radius, 1e-14);

  g.center = diag2(1.0, -3.0);
  g.radius = 1.0;
  const Sphere cl = pgb(g);
  EXPECT_TRUE(cl.clamped);
  EXPECT_EQ(cl.radius, 0.0);
}

TEST(PGB, ZeroRadiusAndRpbMatchWithAlphaSubgradient) {
  Problem p = make_problem(22, 30, 3, 2, 3);
  const double lam0 = 0.3 * lambda_max(p);
  const SolveResult opt = solve_tight(p, lam0);
  ASSERT_TRUE(opt.converged);
  // Linked optimal pair: M0 = M(alpha0) reproduces the KKT structure exactly.
  const SymMat m0 = m_of_alpha(p, opt.alpha, lam0);
  const Sphere same = pgb(gb(m0, gradient_with_alpha(p, m0, opt.alpha, lam0), lam0));
  EXPECT_LE(same.radius, 1e-6);
  const double lam1 = 0.8 * lam0;
  const Sphere pg = pgb(gb(m0, gradient_with_alpha(p, m0, opt.alpha, lam1), lam1));
  const Sphere rp = rpb(m0, lam0, lam1);
  EXPECT_LE((pg.center - rp.center).norm(), 1e-9 * rp.center.norm());
  EXPECT_NEAR(pg.radius, rp.radius, 1e-9 * rp.radius);
}

TEST(DGB, Examples) {
  EXPECT_NEAR(dgb(SymMat::identity(2), 2.0, 4.0).radius, 1.0, 1e-15);
  EXPECT_EQ(dgb(SymMat::identity(2), -1e-12, 4.0).radius, 0.0);
  const Solved inst = solved_instance(23);
  const Sphere opt = dgb(inst.p, inst.opt.metric, dual_from_primal(inst.p, inst.opt.metric).alpha, inst.lambda);
  EXPECT_LE(opt.radius, 1e-4);
  const SolveResult mid = solve_to(inst.p, inst.lambda, 1e-2);
  const Sphere s = dgb(inst.p, mid.metric, mid.alpha, inst.lambda);
  EXPECT_LE((s.center - inst.opt.metric).norm(), s.radius + 1e-9);
  ASSERT_TRUE(s.general);
  EXPECT_NEAR(s.general->radius_sq_at(inst.lambda), s.radius * s.radius, 1e-9 * std::max(1.0, s.radius * s.radius));
  EXPECT_THROW(dgb(SymMat::identity(2), 1.0, 0.0), ParameterError);
}

TEST(CDGB, ExamplesAndSqrtTwoFactor) {
  const Solved inst = solved_instance(24);
  EXPECT_LE(cdgb(inst.p, inst.opt.alpha, inst.lambda).radius, 1e-4);
  const SolveResult mid = solve_to(inst.p, inst.lambda, 1e-2);
  const Sphere c = cdgb(inst.p, mid.alpha, inst.lambda);
  EXPECT_LE((c.center - inst.opt.metric).norm(), c.radius + 1e-9);
  // Linked reference M = M(alpha).
  const Sphere d = dgb(inst.p, m_of_alpha(inst.p, mid.alpha, inst.lambda), mid.alpha, inst.lambda);
  EXPECT_NEAR(c.radius, d.radius / std::sqrt(2.0), 1e-9 * d.radius);
}

TEST(RPB, Examples) {
  const SymMat m0 = diag2(0.6, 0.8);
  Sphere s = rpb(m0, 3.0, 3.0);
  EXPECT_EQ(s.radius, 0.0);
  EXPECT_LE((s.center - m0).norm(), 1e-15);
  s = rpb(m0, 2.0, 1.0);
  EXPECT_LE((s.center - 1.5 * m0).norm(), 1e-15);
  EXPECT_NEAR(s.radius, 0.5, 1e-15);
}

TEST(RPB, DgbRelationAtOptimalReference) {
  const Problem p = make_problem(25, 30, 3, 2, 3);
  const double lam0 = 0.3 * lambda_max(p);
  const SolveResult opt = solve_tight(p, lam0, 1e-14);
  const SymMat m0 = m_of_alpha(p, opt.alpha, lam0);
  for (double f : {0.9, 0.5, 1.3}) {
    const double lam1 = f * lam0;
    const Sphere r = rpb(m0, lam0, lam1);
    const Sphere d = dgb(p, m0, opt.alpha, lam1);
    EXPECT_NEAR(d.radius, 2 * r.radius, 1e-9 * d.radius);
    EXPECT_NEAR((d.center - r.center).norm(), r.radius, 1e-9 * r.radius);
    EXPECT_LE((d.center - r.center).norm() + r.radius, d.radius + 1e-9);
  }
}

TEST(RRPB, Examples) {
  const SymMat m0 = diag2(0.6, 0.8);
  const Sphere a = rrpb(m0, 0.0, 2.0, 1.0), b = rpb(m0, 2.0, 1.0);
  EXPECT_EQ(a.radius, b.radius);
  const Sphere same = rrpb(m0, 0.3, 2.0, 2.0);
  EXPECT_LE((same.center - m0).norm(), 1e-15);
  EXPECT_NEAR(same.radius, 0.3, 1e-15);
  const Sphere num = rrpb(2.0 * diag2(0.6, 0.8), 0.01, 1.0, 0.9);
  EXPECT_NEAR(num.radius, 0.1 / 1.8 * 2 + 2.0 / 1.8 * 0.01, 1e-12);
  EXPECT_NEAR(num.radius, 0.12222, 1e-5);
  EXPECT_THROW(rrpb(m0, -1.0, 1.0, 1.0), ParameterError);
  for (double l1 : {0.3, 0.9, 2.0, 5.0}) {
    const Sphere s = rrpb(m0, 0.05, 1.0, l1);
    EXPECT_NEAR(s.general->radius_sq_at(l1), s.radius * s.radius, 1e-12);
    EXPECT_LE((s.general->center_at(l1) - s.center).norm(), 1e-12);
  }
}

TEST(RRPB, ContainsNextOptimum) {
  const Problem p = make_problem(26, 30, 3, 2, 3);
  const double lam0 = 0.3 * lambda_max(p);
  const SolveResult ref = solve_to(p, lam0, 1e-4);
  const double eps = std::sqrt(2 * ref.gap / lam0);
  for (double f : {0.9, 0.7, 1.2}) {
    const SolveResult opt = solve_tight(p, f * lam0);
    const Sphere s = rrpb(ref.metric, eps, lam0, f * lam0);
    EXPECT_LE((s.center - opt.metric).norm(), s.radius + 1e-9);
  }
}

TEST(SphereRule, Examples) {
  EXPECT_EQ(sphere_verdict(3.0, 1.0, 1.0, 0.05), TripletStatus::ScreenedR);
  EXPECT_EQ(sphere_verdict(-2.0, 1.0, 1.0, 0.05), TripletStatus::ScreenedL);
  EXPECT_EQ(sphere_verdict(2.0, 1.0, 1.0, 0.05), TripletStatus::Unknown);
  const Solved inst = solved_instance(27);
  Sphere s;
  s.center = inst.opt.metric;
  s.radius = 0.0;
  const Partition part = categorize(inst.p, inst.opt.metric);
  for (std::size_t t = 0; t < inst.p.size(); ++t) {
    const TripletStatus st = rule_sphere(s, inst.p, t);
    const Category c = part.category[t];
    EXPECT_EQ(st, c == Category::L ? TripletStatus::ScreenedL
                  : c == Category::R ? TripletStatus::ScreenedR
                                     : TripletStatus::Unknown);
  }
}

TEST(HalfSpace, Examples) {
  const HalfSpace h = halfspace_from_iterate(diag2(1.0, -2.0));
  EXPECT_FALSE(h.vacuous);
  EXPECT_LE((h.normal - diag2(0.0, 2.0)).norm(), 1e-14);
  EXPECT_TRUE(halfspace_from_iterate(diag2(1.0, 2.0)).vacuous);

  const Solved inst = solved_instance(28, 3);
  const SymMat m = SymMat::identity(3);
  const SymMat it = m - (1.0 / inst.lambda) * gradient(inst.p, m, inst.lambda);
  const HalfSpace hs = halfspace_from_iterate(it);
  ASSERT_FALSE(hs.vacuous);
  EXPECT_GE(min_eig(hs.normal), -1e-12);
  std::mt19937_64 rng(28);
  for (int i = 0; i < 1000; ++i) EXPECT_GE(frob_inner(hs.normal, random_psd(3, rng)), -1e-12);
}

TEST(LinearRule, ClosedFormCases) {
  // H = 2P with the unconstrained minimiser outside the half-space.
  EXPECT_EQ(linear_min(0.4, 2.0, 2.0, 0.2, 1.0, 1.0), 0.0);
  // Minimiser inside the half-space: sphere value.
  EXPECT_DOUBLE_EQ(linear_min(3.0, 1.0, -0.5, 2.0, 1.0, 1.0), 2.0);
  // Ball entirely inside the half-space.
  EXPECT_DOUBLE_EQ(linear_min(3.0, 1.0, 0.9, 0.5, 1.0, 0.4), 3.0 - 0.4);
  // Ball entirely outside the half-space.
  EXPECT_TRUE(std::isnan(linear_min(3.0, 1.0, 0.9, -0.5, 1.0, 0.4)));
}

TEST(LinearRule, MatchesDualOracle) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  int checked = 0;
  for (int trial = 0; trial < 400 && checked < 60; ++trial) {
    const Index d = 3;
    const MatrixXd q = random_sym(d, rng).matrix();
    const MatrixXd pm = random_psd(d, rng).matrix();
    VectorXd u(d), v(d);
    for (Index k = 0; k < d; ++k) u(k) = g(rng), v(k) = g(rng);
    const MatrixXd h = u * u.transpose() - v * v.transpose();
    const double r = 0.5 + std::abs(g(rng));
    const double hq = h.cwiseProduct(q).sum(), hn = h.norm(), ph = pm.cwiseProduct(h).sum();
    const double pq = pm.cwiseProduct(q).sum(), pn2 = pm.squaredNorm();
    if (pq * hn - r * ph >= 0.0) continue;
    if (r * r - pq * pq / pn2 <= 0.0) continue;
    const double val = linear_min(hq, hn, ph, pq, pn2, r);
    const double oracle = linear_oracle(h, pm, q, r);
    EXPECT_NEAR(val, oracle, 1e-6 * std::max(1.0, std::abs(oracle))) << "trial " << trial;
    EXPECT_GE(val, hq - r * hn - 1e-12);
    ++checked;
  }
  EXPECT_GE(checked, 30);
}

TEST(LinearRule, DominatesSphereAndIsSafe) {
  for (std::uint64_t seed : {32u, 33u}) {
    const Solved inst = solved_instance(seed, 3);
    const SolveResult ref = solve_to(inst.p, inst.lambda, 1e-2);
    const SymMat grad = gradient(inst.p, ref.metric, inst.lambda);
    const Sphere s = gb(ref.metric, grad, inst.lambda);
    const HalfSpace hs = halfspace_from_iterate(ref.metric - (1.0 / inst.lambda) * grad);
    const Partition part = categorize(inst.p, inst.opt.metric);
    for (std::size_t t = 0; t < inst.p.size(); ++t) {
      const TripletStatus sp = rule_sphere(s, inst.p, t), li = rule_linear(s, hs, inst.p, t);
      if (sp != TripletStatus::Unknown) EXPECT_EQ(li, sp);
      if (li == TripletStatus::ScreenedR) EXPECT_EQ(part.category[t], Category::R);
      if (li == TripletStatus::ScreenedL) EXPECT_EQ(part.category[t], Category::L);
    }
  }
}

TEST(DiagRule, Examples) {
  VectorXd h(1), q(1);
  h << 1.0;
  q << 3.0;
  EXPECT_NEAR(*diag_min(h, q, 1.0), 2.0, 1e-12);
  // Nonnegative direction and ball inside the orthant: sphere value.
  VectorXd h2(3), q2(3);
  h2 << 1.0, 0.5, 2.0;
  q2 << 3.0, 4.0, 5.0;
  EXPECT_NEAR(*diag_min(h2, q2, 1.0), h2.dot(q2) - h2.norm(), 1e-12);
  // Ball misses the orthant.
  VectorXd q3(2), h3(2);
  q3 << -2.0, 1.0;
  h3 << 1.0, 1.0;
  EXPECT_FALSE(diag_min(h3, q3, 1.0).has_value());
}

TEST(DiagRule, MatchesDualOracle) {
  std::mt19937_64 rng(34);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    const Index d = 5;
    VectorXd h(d), q(d);
    for (Index k = 0; k < d; ++k) h(k) = g(rng), q(k) = g(rng);
    const double r = 0.3 + 2.0 * std::abs(g(rng));
    const auto val = diag_min(h, q, r);
    if (q.cwiseMin(0.0).squaredNorm() >= r * r * 0.99) continue;
    ASSERT_TRUE(val.has_value());
    const double oracle = diag_oracle(h, q, r);
    EXPECT_NEAR(*val, oracle, 1e-7 * std::max(1.0, std::abs(oracle))) << "trial " << trial;
  }
}

TEST(DiagRule, SafeInDiagonalMode) {
  Problem p = make_problem(35, 30, 4, 2, 3, 0.05, true);
  const double lam = 0.3 * lambda_max(p);
  const SolveResult opt = solve_tight(p, lam);
  const SolveResult ref = solve_to(p, lam, 1e-2);
  const Sphere s = pgb(gb(ref.metric, gradient(p, ref.metric, lam), lam), true);
  const Partition part = categorize(p, opt.metric);
  std::size_t fired = 0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    const TripletStatus st = rule_diag(s, p, t);
    if (rule_sphere(s, p, t) != TripletStatus::Unknown) EXPECT_EQ(st, rule_sphere(s, p, t));
    if (st == TripletStatus::ScreenedR) {
      EXPECT_EQ(part.category[t], Category::R);
      ++fired;
    }
    if (st == TripletStatus::ScreenedL) {
      EXPECT_EQ(part.category[t], Category::L);
      ++fired;
    }
  }
  EXPECT_GT(fired, 0u);
  Problem full = make_problem(35, 30, 4, 2, 3);
  EXPECT_THROW(rule_diag(s, full, 0), ConfigError);
}

TEST(SdlsRule, ImmediateUnknownWhenCenterSatisfiesConstraint) {
  VectorXd u(2), v(2);
  u << 1.0, 0.0;
  v << 0.0, 1.0;
  // <Q, H> = 0.5 <= 1: the center itself is feasible.
  const SdlsResult r = sdls_dual_ascent(diag2(1.0, 0.5), u, v, 1.0, 1.0, 0.3);
  EXPECT_FALSE(r.fired);
  EXPECT_EQ(r.iterations, 0);
}

TEST(SdlsRule, MatchesGridOracleOn2x2) {
  std::mt19937_64 rng(36);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> un(-0.3, 0.3);
  int checked = 0, fired = 0, refused = 0;
  for (int trial = 0; trial < 120 && checked < 40; ++trial) {
    // Centers on or near the cone boundary make the PSD cut matter.
    MatrixXd b(2, 1);
    b << g(rng), g(rng);
    MatrixXd q = b * b.transpose();
    q += 0.3 * random_sym(2, rng).matrix();
    VectorXd u(2), v(2);
    u << g(rng), g(rng);
    v << g(rng), g(rng);
    const double r = 0.3 + 0.7 * std::abs(g(rng));
    MatrixXd h = u * u.transpose() - v * v.transpose();
    const GridResult grid = grid_2x2(q, h, r);
    if (!std::isfinite(grid.min_val) || grid.min_val <= 0.05) continue;
    // Rescale H so the threshold 1 sits near the true minimum.
    const double c = (1.0 + un(rng)) / grid.min_val;
    const double gmin = c * grid.min_val;
    const double slack = 2.0 * c * h.norm() * grid.step;
    if (std::abs(gmin - 1.0) < slack) continue;
    const VectorXd us = std::sqrt(c) * u, vs = std::sqrt(c) * v;
    const SdlsResult res = sdls_dual_ascent(SymMat(q), us, vs, 1.0, 1.0, r, 200);
    // Grid min >= true min, so a grid value below 1 - slack proves infeasibility of the certificate.
    if (gmin < 1.0) {
      EXPECT_FALSE(res.fired) << "trial " << trial;
      ++refused;
    } else {
      EXPECT_TRUE(res.fired) << "trial " << trial;
      ++fired;
    }
    ++checked;
  }
  EXPECT_GE(fired, 5);
  EXPECT_GE(refused, 5);
}

TEST(SdlsRule, WeakDualityAndResidual) {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd b(2, 1);
    b << g(rng), g(rng);
    const MatrixXd q = b * b.transpose() + 0.2 * random_sym(2, rng).matrix();
    VectorXd u(2), v(2);
    u << g(rng), g(rng);
    v << g(rng), g(rng);
    const MatrixXd h = u * u.transpose() - v * v.transpose();
    const double hq = h.cwiseProduct(q).sum();
    const double cst = hq - 0.5 * h.norm();
    const SdlsResult res = sdls_dual_ascent(SymMat(q), u, v, 1.0, cst, 1e6, 200);
    // Squared distance from Q to {X PSD, <X,H> <= C} by grid search over a box.
    const double box = 3.0 + q.norm();
    const int n = 120;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j)
        for (int k = 0; k <= n; ++k) {
          const double a = q(0, 0) - box + 2 * box * i / n, off = q(0, 1) - box + 2 * box * j / n,
                       c = q(1, 1) - box + 2 * box * k / n;
          if (a < 0 || c < 0 || off * off > a * c) continue;
          if (h(0, 0) * a + 2 * h(0, 1) * off + h(1, 1) * c > cst) continue;
          best = std::min(best, (a - q(0, 0)) * (a - q(0, 0)) + 2 * (off - q(0, 1)) * (off - q(0, 1)) +
                                    (c - q(1, 1)) * (c - q(1, 1)));
        }
    if (!std::isfinite(best)) continue;
    EXPECT_LE(res.dual, best + 1e-9) << "trial " << trial;
    if (res.converged) EXPECT_LE(std::abs(res.residual), 1e-6 * std::max(1.0, h.norm())) << "trial " << trial;
  }
}

TEST(SdlsRule, DominatesSphereAndIsSafe) {
  const Solved inst = solved_instance(38, 3);
  const SolveResult ref = solve_to(inst.p, inst.lambda, 1e-2);
  const Sphere s = pgb(gb(ref.metric, gradient(inst.p, ref.metric, inst.lambda), inst.lambda));
  const Partition part = categorize(inst.p, inst.opt.metric);
  std::size_t sphere_hits = 0, sdls_hits = 0;
  for (std::size_t t = 0; t < inst.p.size(); ++t) {
    const TripletStatus sp = rule_sphere(s, inst.p, t), sd = rule_sdls(s, inst.p, t);
    if (sp != TripletStatus::Unknown) {
      EXPECT_EQ(sd, sp);
      ++sphere_hits;
    }
    if (sd != TripletStatus::Unknown) ++sdls_hits;
    if (sd == TripletStatus::ScreenedR) EXPECT_EQ(part.category[t], Category::R);
    if (sd == TripletStatus::ScreenedL) EXPECT_EQ(part.category[t], Category::L);
  }
  EXPECT_GE(sdls_hits, sphere_hits);
}

TEST(RangeScreening, Examples) {
  // Reference already certifies nothing: both ranges empty.
  const TripletRanges none = lambda_range_rrpb(0.95, 1.0, 1.0, 0.1, 1.0, 0.05);
  EXPECT_TRUE(none.r.empty);
  EXPECT_TRUE(none.l.empty);
  // With eps = 0 the lambda0 endpoint lies in the range whenever the rule fires there.
  const TripletRanges rr = lambda_range_rrpb(3.0, 1.0, 1.0, 0.0, 1.0, 0.05);
  ASSERT_FALSE(rr.r.empty);
  EXPECT_TRUE(rr.r.contains(1.0));
  EXPECT_FALSE(LambdaRange{}.contains(1.0));
}

TEST(RangeScreening, AgreesWithRuleOnLambdaGrid) {
  std::mt19937_64 rng(39);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> un(0.0, 1.0);
  int inside_checks = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Index d = 3;
    const SymMat m0 = random_psd(d, rng);
    VectorXd u(d), v(d);
    for (Index k = 0; k < d; ++k) u(k) = g(rng), v(k) = g(rng);
    const double scale = 1.0 / std::max(1e-3, std::abs(quad_form_diff(m0, u, v)));
    const double s = std::sqrt(scale * (0.2 + 3.0 * un(rng)));
    u *= s;
    v *= s;
    const MatrixXd h = u * u.transpose() - v * v.transpose();
    const double hm0 = h.cwiseProduct(m0.matrix()).sum();
    const double eps = 0.05 * un(rng) * m0.norm();
    const double lam0 = 1.0;
    const TripletRanges tr = lambda_range_rrpb(hm0, h.norm(), m0.norm(), eps, lam0, 0.05);
    for (int k = 0; k < 50; ++k) {
      const double lam = std::exp(std::log(0.05) + (std::log(20.0) - std::log(0.05)) * k / 49.0);
      const Sphere sp = rrpb(m0, eps, lam0, lam);
      const double hq = h.cwiseProduct(sp.center.matrix()).sum();
      const TripletStatus st = sphere_verdict(hq, h.norm(), sp.radius, 0.05);
      const double lo_r = hq - sp.radius * h.norm(), hi_l = hq + sp.radius * h.norm();
      // Skip grid points within rounding distance of a boundary.
      if (std::abs(lo_r - 1.0) < 1e-9 || std::abs(hi_l - 0.95) < 1e-9) continue;
      if (tr.r.contains(lam)) {
        EXPECT_EQ(st, TripletStatus::ScreenedR) << trial << " " << lam;
        ++inside_checks;
      }
      if (tr.l.contains(lam)) {
        EXPECT_EQ(st, TripletStatus::ScreenedL) << trial << " " << lam;
        ++inside_checks;
      }
      const bool near_edge = [&] {
        for (const LambdaRange& r : {tr.r, tr.l})
          if (!r.empty && (std::abs(lam - r.lo) < 1e-6 * lam || std::abs(lam - r.hi) < 1e-6 * lam)) return true;
        return false;
      }();
      if (!near_edge && st == TripletStatus::ScreenedR) EXPECT_TRUE(tr.r.contains(lam)) << trial << " " << lam;
      if (!near_edge && st == TripletStatus::ScreenedL) EXPECT_TRUE(tr.l.contains(lam)) << trial << " " << lam;
    }
  }
  EXPECT_GT(inside_checks, 100);
}

TEST(ScreenAll, ZeroRadiusAtOptimumLeavesCenterSet) {
  const Solved inst = solved_instance(40);
  Sphere s;
  s.center = inst.opt.metric;
  std::vector<TripletStatus> st(inst.p.size(), TripletStatus::Unknown);
  const ScreenCounts c = screen_all(inst.p, s, RuleOptions{}, st);
  const Partition part = categorize(inst.p, inst.opt.metric);
  EXPECT_EQ(c.remaining, part.n_c);
  EXPECT_EQ(c.new_l, part.n_l);
  EXPECT_EQ(c.new_r, part.n_r);
}

TEST(ScreenAll, IdempotentAndMonotone) {
  const Solved inst = solved_instance(41);
  const SolveResult ref = solve_to(inst.p, inst.lambda, 1e-2);
  const Sphere s = pgb(gb(ref.metric, gradient(inst.p, ref.metric, inst.lambda), inst.lambda));
  std::vector<TripletStatus> st(inst.p.size(), TripletStatus::Unknown);
  const ScreenCounts first = screen_all(inst.p, s, RuleOptions{}, st);
  const std::vector<TripletStatus> snap = st;
  const ScreenCounts again = screen_all(inst.p, s, RuleOptions{}, st);
  EXPECT_EQ(again.new_l + again.new_r, 0u);
  EXPECT_EQ(st, snap);
  EXPECT_EQ(again.remaining, first.remaining);
  // A worse sphere never un-screens.
  Sphere big = s;
  big.radius *= 10;
  screen_all(inst.p, big, RuleOptions{}, st);
  EXPECT_EQ(st, snap);
}

TEST(ScreenAll, AllBoundsSafeOnSmallInstances) {
  for (std::uint64_t seed : {42u, 43u, 44u}) {
    const Solved inst = solved_instance(seed, 3, 0.2);
    const double lam0 = inst.lambda / 0.8;
    const SolveResult ref = solve_to(inst.p, lam0, 1e-4);
    const SolveResult cur = solve_to(inst.p, inst.lambda, 1e-2);
    const SymMat grad = gradient(inst.p, cur.metric, inst.lambda);
    const double eps = std::sqrt(2 * std::max(ref.gap, 0.0) / lam0);
    const Sphere g = gb(cur.metric, grad, inst.lambda);
    const std::vector<Sphere> spheres = {g,
                                         pgb(g),
                                         dgb(inst.p, cur.metric, cur.alpha, inst.lambda),
                                         cdgb(inst.p, cur.alpha, inst.lambda),
                                         rrpb(ref.metric, eps, lam0, inst.lambda)};
    const Partition part = categorize(inst.p, inst.opt.metric);
    const HalfSpace hs = halfspace_from_iterate(cur.metric - (1.0 / inst.lambda) * grad);
    for (const Sphere& s : spheres) {
      EXPECT_LE((s.center - inst.opt.metric).norm(), s.radius + 1e-9);
      for (Rule rule : {Rule::Sphere, Rule::Linear, Rule::SDLS}) {
        RuleOptions o;
        o.rule = rule;
        o.halfspace = &hs;
        std::vector<TripletStatus> st(inst.p.size(), TripletStatus::Unknown);
        screen_all(inst.p, s, o, st);
        for (std::size_t t = 0; t < st.size(); ++t) {
          if (st[t] == TripletStatus::ScreenedR) EXPECT_EQ(part.category[t], Category::R);
          if (st[t] == TripletStatus::ScreenedL) EXPECT_EQ(part.category[t], Category::L);
        }
      }
    }
  }
}

TEST(Names, RoundTrip) {
  for (Bound b : {Bound::None, Bound::GB, Bound::PGB, Bound::DGB, Bound::CDGB, Bound::RRPB, Bound::RRPB_PGB})
    EXPECT_EQ(parse_bound(to_string(b)), b);
  for (Rule r : {Rule::Sphere, Rule::Linear, Rule::SDLS, Rule::Diag}) EXPECT_EQ(parse_rule(to_string(r)), r);
  EXPECT_EQ(std::string(to_string(Bound::RRPB_PGB)), "rrpb+pgb");
  EXPECT_THROW(parse_bound("xyz"), ConfigError);
  EXPECT_THROW(parse_rule("xyz"), ConfigError);
}
