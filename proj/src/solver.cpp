#include "tripscreen/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace tripscreen {

void SolveConfig::validate() const {
  if (!(gap_tol > 0.0)) throw ConfigError("gap_tol must be positive");
  if (screen_every < 1) throw ConfigError("screen_every must be at least 1");
  if (max_iter < 0) throw ConfigError("max_iter must be non-negative");
  if (sdls_budget < 1) throw ConfigError("sdls_budget must be at least 1");
}

double bb_step(const SymMat& dm, const SymMat& dg, double previous) {
  const double mg = frob_inner(dm, dg);
  const double gg = dg.squared_norm();
  const double mm = dm.squared_norm();
  if (mg == 0.0 || gg == 0.0) return previous;
  const double step = 0.5 * std::abs(mg / gg + mm / mg);
  return std::isfinite(step) && step > 0.0 ? step : previous;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SymMat reg_term(const Problem& p, const SymMat& m, double lambda) {
  return p.diagonal ? SymMat::diagonal(lambda * m.matrix().diagonal()) : lambda * m;
}

std::vector<Index> members_with(const std::vector<TripletStatus>& st, TripletStatus want) {
  std::vector<Index> out;
  for (std::size_t t = 0; t < st.size(); ++t)
    if (st[t] == want) out.push_back(static_cast<Index>(t));
  return out;
}

SymMat linear_sum(const Problem& p, const std::vector<Index>& ls) {
  if (ls.empty()) return SymMat::zero(p.dim());
  const Workset ws(p.set(), ls);
  return ws.weighted_sum(VectorXd::Ones(static_cast<Index>(ls.size())), p.diagonal);
}

double rel_floor(double v) { return std::max(1.0, std::abs(v)); }

class Solver {
 public:
  Solver(const Problem& p, double lambda, const SolveConfig& cfg, const SymMat& init,
         std::vector<TripletStatus> statuses, bool active)
      : p_(p), lambda_(lambda), cfg_(cfg), active_(active), m_(p.project(init)) {
    require_lambda(lambda);
    cfg.validate();
    if (init.order() != p.dim()) throw DimensionError("initial metric order does not match data");
    if (statuses.empty()) statuses.assign(p.size(), TripletStatus::Unknown);
    if (statuses.size() != p.size()) throw DimensionError("status vector size does not match triplet count");
    statuses_ = std::move(statuses);
    lsum_ = linear_sum(p, members_with(statuses_, TripletStatus::ScreenedL));
    n_l_ = members_with(statuses_, TripletStatus::ScreenedL).size();
    rebuild_unknown();
    work_ = unknown_ws_;
  }

  SolveResult run() {
    const auto t0 = Clock::now();
    SymMat g = work_gradient(m_);
    double step = 1.0 / lambda_;
    int k = 0;
    bool done = false;
    while (true) {
      if (k % cfg_.screen_every == 0) {
        bool changed = false;
        done = checkpoint(k, changed);
        if (done) break;
        if (changed) g = work_gradient(m_);
      }
      if (k >= cfg_.max_iter) break;
      const SymMat next = p_.project(m_ - (step * scale_) * g);
      const SymMat g_next = work_gradient(next);
      step = bb_step(next - m_, g_next - g, step);
      m_ = next;
      g = g_next;
      ++k;
    }
    if (!done) m_ = best_m_;
    SolveResult res = finish(k, done);
    res.wall_time = seconds_since(t0);
    res.screen_time = screen_time_;
    return res;
  }

 private:
  void rebuild_unknown() {
    unknown_ = members_with(statuses_, TripletStatus::Unknown);
    unknown_ws_ = Workset(p_.set(), unknown_);
  }

  SymMat work_gradient(const SymMat& m) const {
    const VectorXd x = work_.inner(m, p_.diagonal);
    VectorXd gl(x.size());
    for (Index t = 0; t < x.size(); ++t) gl(t) = loss_grad(p_.loss, x(t));
    return work_.weighted_sum(gl, p_.diagonal) - lsum_ + reg_term(p_, m, lambda_);
  }

  // Gap check, dynamic screening and active-set refresh; returns true once
  // the full gap certifies convergence.
  bool checkpoint(int k, bool& changed) {
    const double gamma = p_.loss.gamma;
    const double nl = static_cast<double>(n_l_);
    const std::vector<Index> members = unknown_;
    const VectorXd x = unknown_ws_.inner(m_, p_.diagonal);
    VectorXd alpha(x.size());
    double loss = 0.0;
    for (Index t = 0; t < x.size(); ++t) {
      loss += loss_value(p_.loss, x(t));
      alpha(t) = -loss_grad(p_.loss, x(t));
    }
    const double lin = (1.0 - 0.5 * gamma) * nl - frob_inner(m_, lsum_);
    const double primal = loss + lin + 0.5 * lambda_ * m_.squared_norm();
    const SymMat s = unknown_ws_.weighted_sum(alpha, p_.diagonal) + lsum_;
    const SymMat splus = p_.project(s);
    const double dual = -0.5 * gamma * (alpha.squaredNorm() + nl) + alpha.sum() + nl -
                        splus.squared_norm() / (2.0 * lambda_);
    const double gap = primal - dual;

    if (gap < best_gap_) {
      best_gap_ = gap;
      best_m_ = m_;
    }
    // Counts checkpoints without a new best primal, which also catches BB cycles.
    if (k > 0 && primal >= best_primal_) {
      if (++rises_ >= 5) {
        scale_ *= 0.5;
        rises_ = 0;
      }
    } else {
      rises_ = 0;
    }
    best_primal_ = std::min(best_primal_, primal);

    if (gap <= cfg_.gap_tol * rel_floor(primal) && certify()) return true;

    const bool screen_now = cfg_.bound != Bound::None && !unknown_.empty() && (k > 0 || cfg_.screen_at_start);
    if (screen_now) {
      const auto ts = Clock::now();
      const ScreenCounts c = screen(x, s, splus, gap, dual);
      log_.push_back({k, c.new_l, c.new_r, c.remaining});
      if (c.new_l + c.new_r > 0) {
        std::vector<Index> fresh_l;
        for (Index t : unknown_)
          if (statuses_[static_cast<std::size_t>(t)] == TripletStatus::ScreenedL) fresh_l.push_back(t);
        if (!fresh_l.empty()) {
          lsum_ += linear_sum(p_, fresh_l);
          n_l_ += fresh_l.size();
        }
        rebuild_unknown();
        // The reduced objective changed; restart the divergence guard.
        best_primal_ = std::numeric_limits<double>::infinity();
        rises_ = 0;
        changed = true;
      }
      screen_time_ += seconds_since(ts);
    }

    if (active_) {
      // Active set: unknown triplets with positive loss at the current iterate.
      std::vector<Index> act;
      for (std::size_t i = 0; i < members.size(); ++i) {
        const Index t = members[i];
        if (statuses_[static_cast<std::size_t>(t)] == TripletStatus::Unknown && x(static_cast<Index>(i)) < 1.0)
          act.push_back(t);
      }
      work_ = Workset(p_.set(), std::move(act));
      changed = true;
    } else if (changed) {
      work_ = unknown_ws_;
    }
    return false;
  }

  ScreenCounts screen(const VectorXd& x, const SymMat& s, const SymMat& splus, double gap, double dual) {
    const SymMat grad = reg_term(p_, m_, lambda_) - s;
    const Sphere gbs = gb(m_, grad, lambda_);
    HalfSpace hs;
    if (cfg_.rule == Rule::Linear && !p_.diagonal) hs = halfspace_from_iterate(gbs.center);
    RuleOptions opts{cfg_.rule, cfg_.sdls_budget, &hs};

    ScreenCounts total;
    auto apply = [&](const Sphere& sph, const VectorXd* hq) {
      VectorXd own;
      if (!hq) {
        own = unknown_ws_.inner(sph.center, p_.diagonal);
        hq = &own;
      }
      const ScreenCounts c = screen_members(p_, sph, opts, unknown_, *hq, statuses_);
      total.new_l += c.new_l;
      total.new_r += c.new_r;
      total.remaining = c.remaining;
    };
    switch (cfg_.bound) {
      case Bound::None:
        break;
      case Bound::GB:
        apply(gbs, nullptr);
        break;
      case Bound::PGB:
        apply(pgb(gbs, p_.diagonal), nullptr);
        break;
      case Bound::DGB:
      case Bound::RRPB:
        // RRPB with the current iterate as reference at the same lambda.
        apply(dgb(m_, gap, lambda_), &x);
        break;
      case Bound::RRPB_PGB:
        apply(dgb(m_, gap, lambda_), &x);
        apply(pgb(gbs, p_.diagonal), nullptr);
        break;
      case Bound::CDGB: {
        apply(cdgb_reduced(splus, dual), nullptr);
        break;
      }
    }
    return total;
  }

  // CDGB on the reduced problem: center [S]_+/lambda, radius from the
  // reduced primal at the center.
  Sphere cdgb_reduced(const SymMat& splus, double dual) const {
    const double gamma = p_.loss.gamma;
    const double nl = static_cast<double>(n_l_);
    Sphere c;
    c.lambda = lambda_;
    c.center = (1.0 / lambda_) * splus;
    c.center_psd = true;
    const VectorXd xc = unknown_ws_.inner(c.center, p_.diagonal);
    double loss_c = 0.0;
    for (Index t = 0; t < xc.size(); ++t) loss_c += loss_value(p_.loss, xc(t));
    const double primal_c = loss_c + (1.0 - 0.5 * gamma) * nl - frob_inner(c.center, lsum_) +
                            0.5 * lambda_ * c.center.squared_norm();
    c.radius = std::sqrt(std::max(primal_c - dual, 0.0) / lambda_);
    return c;
  }

  // Full-problem gap at the current iterate with alpha fixed on screened sets.
  bool certify() {
    evaluate_full(m_);
    return full_gap_ <= cfg_.gap_tol * rel_floor(full_primal_);
  }

  void evaluate_full(const SymMat& m) {
    full_inner_ = triplet_inner_all(p_, m);
    full_alpha_.resize(full_inner_.size());
    full_loss_ = 0.0;
    for (Index t = 0; t < full_inner_.size(); ++t) {
      full_loss_ += loss_value(p_.loss, full_inner_(t));
      const TripletStatus st = statuses_[static_cast<std::size_t>(t)];
      full_alpha_(t) = st == TripletStatus::ScreenedL   ? 1.0
                       : st == TripletStatus::ScreenedR ? 0.0
                                                        : -loss_grad(p_.loss, full_inner_(t));
    }
    full_primal_ = full_loss_ + 0.5 * lambda_ * m.squared_norm();
    full_dual_ = dual_value_from_sum(p_, full_alpha_, alpha_sum(p_, full_alpha_), lambda_);
    full_gap_ = full_primal_ - full_dual_;
    full_at_ = m;
  }

  SolveResult finish(int k, bool converged) {
    if (!converged || full_at_.order() != m_.order() || (full_at_ - m_).norm() != 0.0) evaluate_full(m_);
    SolveResult r;
    r.metric = m_;
    r.alpha = full_alpha_;
    r.inner = full_inner_;
    r.gap = std::max(full_gap_, 0.0);
    r.primal = full_primal_;
    r.dual = full_dual_;
    r.loss = full_loss_;
    r.iterations = k;
    r.converged = converged;
    r.statuses = statuses_;
    r.screening_log = log_;
    for (TripletStatus st : statuses_) {
      if (st == TripletStatus::ScreenedL)
        ++r.n_screened_l;
      else if (st == TripletStatus::ScreenedR)
        ++r.n_screened_r;
      else
        ++r.n_unknown;
    }
    return r;
  }

  const Problem& p_;
  double lambda_;
  SolveConfig cfg_;
  bool active_;
  SymMat m_;
  std::vector<TripletStatus> statuses_;
  SymMat lsum_;
  std::size_t n_l_ = 0;
  std::vector<Index> unknown_;
  Workset unknown_ws_;
  Workset work_;
  std::vector<ScreenEvent> log_;

  double scale_ = 1.0;
  int rises_ = 0;
  double best_primal_ = std::numeric_limits<double>::infinity();
  double best_gap_ = std::numeric_limits<double>::infinity();
  SymMat best_m_;
  double screen_time_ = 0.0;

  SymMat full_at_;
  VectorXd full_inner_;
  VectorXd full_alpha_;
  double full_loss_ = 0.0;
  double full_primal_ = 0.0;
  double full_dual_ = 0.0;
  double full_gap_ = 0.0;
};

}  // namespace

double reduced_primal_value(const Problem& p, const SymMat& m, double lambda,
                            const std::vector<TripletStatus>& statuses) {
  require_lambda(lambda);
  if (statuses.size() != p.size()) throw DimensionError("status vector size does not match triplet count");
  const std::vector<Index> unk = members_with(statuses, TripletStatus::Unknown);
  const std::vector<Index> ls = members_with(statuses, TripletStatus::ScreenedL);
  const VectorXd x = Workset(p.set(), unk).inner(m, p.diagonal);
  double v = 0.0;
  for (Index t = 0; t < x.size(); ++t) v += loss_value(p.loss, x(t));
  v += (1.0 - 0.5 * p.loss.gamma) * static_cast<double>(ls.size()) - frob_inner(m, linear_sum(p, ls));
  return v + 0.5 * lambda * m.squared_norm();
}

SymMat reduced_gradient(const Problem& p, const SymMat& m, double lambda,
                        const std::vector<TripletStatus>& statuses) {
  require_lambda(lambda);
  if (statuses.size() != p.size()) throw DimensionError("status vector size does not match triplet count");
  const Workset ws(p.set(), members_with(statuses, TripletStatus::Unknown));
  const VectorXd x = ws.inner(m, p.diagonal);
  VectorXd g(x.size());
  for (Index t = 0; t < x.size(); ++t) g(t) = loss_grad(p.loss, x(t));
  return ws.weighted_sum(g, p.diagonal) - linear_sum(p, members_with(statuses, TripletStatus::ScreenedL)) +
         reg_term(p, m, lambda);
}

SolveResult pgd_solve(const Problem& p, double lambda, const SolveConfig& config, const SymMat& init,
                      std::vector<TripletStatus> statuses) {
  return Solver(p, lambda, config, init, std::move(statuses), false).run();
}

SolveResult active_set_solve(const Problem& p, double lambda, const SolveConfig& config, const SymMat& init,
                             std::vector<TripletStatus> statuses) {
  return Solver(p, lambda, config, init, std::move(statuses), true).run();
}

SolveResult solve(const Problem& p, double lambda, const SolveConfig& config, const SymMat& init,
                  std::vector<TripletStatus> statuses) {
  return config.active_set ? active_set_solve(p, lambda, config, init, std::move(statuses))
                           : pgd_solve(p, lambda, config, init, std::move(statuses));
}

}  // namespace tripscreen
