#include "tripscreen/path.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace tripscreen {

void PathConfig::validate() const {
  if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("decay must lie in (0, 1)");
  if (!(stop_threshold > 0.0)) throw ConfigError("stop_threshold must be positive");
  if (max_steps < 1) throw ConfigError("max_steps must be at least 1");
  if (lambda_start && !(*lambda_start > 0.0)) throw ConfigError("lambda_start must be positive");
  solve.validate();
}

double lambda_max(const Problem& p) {
  if (p.size() == 0) throw ConfigError("empty triplet set");
  if (!(p.loss.gamma < 1.0)) throw ParameterError("lambda_max needs gamma < 1");
  const SymMat plus = p.project(alpha_sum(p, VectorXd::Ones(static_cast<Index>(p.size()))));
  if (plus.norm() == 0.0) return 1.0;
  const double top = triplet_inner_all(p, plus).maxCoeff();
  if (!(top > 0.0)) return 1.0;
  return top / (1.0 - p.loss.gamma);
}

double path_stop_ratio(double loss_prev, double loss_cur, double lambda_prev, double lambda_cur) {
  if (!(loss_prev > 0.0)) return 0.0;
  return (loss_prev - loss_cur) / loss_prev * lambda_prev / (lambda_prev - lambda_cur);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Reference {
  SymMat m;
  VectorXd inner;  // <H_t, m>
  double lambda = 0.0;
  double eps = 0.0;
};

class PathRunner {
 public:
  PathRunner(const Problem& p, const PathConfig& cfg) : p_(p), cfg_(cfg) {}

  PathResult run() {
    cfg_.validate();
    const auto t0 = Clock::now();
    PathResult out;
    out.lambda_max = lambda_max(p_);
    double lambda = cfg_.lambda_start.value_or(out.lambda_max);
    const std::size_t n = p_.size();

    // Closed-form optimum at lambda_max, where every alpha equals 1.
    SymMat warm =
        (1.0 / lambda) * p_.project(alpha_sum(p_, VectorXd::Ones(static_cast<Index>(n))));
    std::optional<Reference> ref;
    ranges_.clear();

    for (int step = 0; step < cfg_.max_steps; ++step) {
      const auto ts = Clock::now();
      PathStep rec;
      rec.lambda = lambda;
      std::vector<TripletStatus> statuses(n, TripletStatus::Unknown);
      double screen_time = 0.0;
      if (ref && cfg_.path_screening && cfg_.solve.bound != Bound::None) {
        const auto tscr = Clock::now();
        path_screen(*ref, lambda, statuses, rec);
        screen_time = seconds_since(tscr);
      }
      rec.n_path_l = count(statuses, TripletStatus::ScreenedL);
      rec.n_path_r = count(statuses, TripletStatus::ScreenedR);

      if (cfg_.keep_metrics) rec.path_statuses = statuses;

      SolveConfig sc = cfg_.solve;
      if (ref && cfg_.path_screening) sc.screen_at_start = false;
      const SolveResult res = solve(p_, lambda, sc, warm, std::move(statuses));

      rec.iterations = res.iterations;
      rec.gap = res.gap;
      rec.converged = res.converged;
      rec.loss = res.loss;
      rec.n_screened_l = res.n_screened_l;
      rec.n_screened_r = res.n_screened_r;
      rec.n_unknown = res.n_unknown;
      const Partition part = categorize_values(res.inner, p_.loss);
      rec.n_center = part.n_c;
      const double total = static_cast<double>(n);
      rec.path_rate_total = static_cast<double>(rec.n_path_l + rec.n_path_r) / total;
      rec.rate_total = static_cast<double>(res.n_screened_l + res.n_screened_r) / total;
      const double screenable = static_cast<double>(n - part.n_c);
      rec.rate_screenable =
          screenable > 0.0 ? std::min(1.0, static_cast<double>(res.n_screened_l + res.n_screened_r) / screenable)
                           : 0.0;
      rec.wall_time_screen = screen_time + res.screen_time;
      rec.wall_time_solve = res.wall_time - res.screen_time;
      if (cfg_.keep_metrics) {
        rec.metric = res.metric;
        rec.partition = part;
      }
      rec.wall_time_total = seconds_since(ts);
      out.steps.push_back(std::move(rec));

      if (!res.converged && cfg_.abort_on_failure) {
        out.failed = true;
        break;
      }
      if (!res.converged) out.failed = true;

      if (out.steps.size() >= 2) {
        const PathStep& a = out.steps[out.steps.size() - 2];
        const PathStep& b = out.steps.back();
        if (path_stop_ratio(a.loss, b.loss, a.lambda, b.lambda) < cfg_.stop_threshold) {
          out.stopped_by_criterion = true;
          break;
        }
      }

      ref = Reference{res.metric, res.inner, lambda, std::sqrt(2.0 * std::max(res.gap, 0.0) / lambda)};
      warm = res.metric;
      lambda *= cfg_.decay;
    }
    out.wall_time = seconds_since(t0);
    return out;
  }

 private:
  static std::size_t count(const std::vector<TripletStatus>& st, TripletStatus want) {
    std::size_t c = 0;
    for (TripletStatus s : st) c += s == want;
    return c;
  }

  VectorXd alpha_of(const VectorXd& inner) const {
    VectorXd a(inner.size());
    for (Index t = 0; t < inner.size(); ++t) a(t) = -loss_grad(p_.loss, inner(t));
    return a;
  }

  void path_screen(const Reference& ref, double lambda, std::vector<TripletStatus>& statuses, PathStep& rec) {
    const std::size_t n = p_.size();
    const Bound bound = cfg_.solve.bound;
    const bool rrpb_family = bound == Bound::RRPB || bound == Bound::RRPB_PGB;

    std::vector<Index> members;
    members.reserve(n);
    if (rrpb_family && cfg_.use_range_screening && ranges_.size() == n) {
      for (std::size_t t = 0; t < n; ++t) {
        if (ranges_[t].r.contains(lambda)) {
          statuses[t] = TripletStatus::ScreenedR;
          ++rec.range_hits;
        } else if (ranges_[t].l.contains(lambda)) {
          statuses[t] = TripletStatus::ScreenedL;
          ++rec.range_hits;
        } else {
          members.push_back(static_cast<Index>(t));
        }
      }
    } else {
      for (std::size_t t = 0; t < n; ++t) members.push_back(static_cast<Index>(t));
    }

    // Sphere ingredients at the new lambda from the reference point.
    const VectorXd alpha = alpha_of(ref.inner);
    const SymMat s = alpha_sum(p_, alpha);
    const SymMat reg = p_.diagonal ? SymMat::diagonal(lambda * ref.m.matrix().diagonal()) : lambda * ref.m;
    const Sphere gbs = gb(ref.m, reg - s, lambda);
    HalfSpace hs;
    if (cfg_.solve.rule == Rule::Linear && !p_.diagonal) hs = halfspace_from_iterate(gbs.center);
    const RuleOptions opts{cfg_.solve.rule, cfg_.solve.sdls_budget, &hs};

    auto gather = [&](double scale) {
      VectorXd hq(static_cast<Index>(members.size()));
      for (std::size_t k = 0; k < members.size(); ++k)
        hq(static_cast<Index>(k)) = scale * ref.inner(members[k]);
      return hq;
    };
    auto apply = [&](const Sphere& sph, bool center_is_scaled_ref, double scale) {
      VectorXd hq;
      if (center_is_scaled_ref)
        hq = gather(scale);
      else
        hq = Workset(p_.set(), members).inner(sph.center, p_.diagonal);
      screen_members(p_, sph, opts, members, hq, statuses);
    };

    switch (bound) {
      case Bound::None:
        break;
      case Bound::GB:
        apply(gbs, false, 0.0);
        break;
      case Bound::PGB:
        apply(pgb(gbs, p_.diagonal), false, 0.0);
        break;
      case Bound::DGB: {
        const double primal = loss_of(ref.inner) + 0.5 * lambda * ref.m.squared_norm();
        const double dual = dual_value_from_sum(p_, alpha, s, lambda);
        apply(dgb(ref.m, primal - dual, lambda), true, 1.0);
        break;
      }
      case Bound::CDGB:
        apply(cdgb(p_, alpha, lambda), false, 0.0);
        break;
      case Bound::RRPB:
      case Bound::RRPB_PGB: {
        const double scale = (ref.lambda + lambda) / (2.0 * lambda);
        apply(rrpb(ref.m, ref.eps, ref.lambda, lambda), true, scale);
        if (bound == Bound::RRPB_PGB) apply(pgb(gbs, p_.diagonal), false, 0.0);
        break;
      }
    }

    if (rrpb_family && cfg_.use_range_screening) {
      ranges_.resize(n);
      const double m0norm = ref.m.norm();
      for (std::size_t t = 0; t < n; ++t)
        ranges_[t] = lambda_range_rrpb(ref.inner(static_cast<Index>(t)), p_.hnorm(t), m0norm, ref.eps, ref.lambda,
                                       p_.loss.gamma);
    }
  }

  double loss_of(const VectorXd& inner) const {
    double s = 0.0;
    for (Index t = 0; t < inner.size(); ++t) s += loss_value(p_.loss, inner(t));
    return s;
  }

  const Problem& p_;
  PathConfig cfg_;
  std::vector<TripletRanges> ranges_;
};

}  // namespace

PathResult run_path(const Problem& p, const PathConfig& config) { return PathRunner(p, config).run(); }

}  // namespace tripscreen
