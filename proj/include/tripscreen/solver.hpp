#pragma once

// Projected gradient solver for the regularized triplet problem with
// Barzilai-Borwein steps, dynamic screening and an optional active set.

#include <cstddef>
#include <vector>

#include "tripscreen/screening.hpp"

namespace tripscreen {

struct SolveConfig {
  // Relative: stop once gap <= gap_tol * max(1, |primal|).
  double gap_tol = 1e-6;
  int max_iter = 100000;
  // Checkpoint cadence for gap checks, screening and active-set refresh.
  int screen_every = 10;
  Bound bound = Bound::None;
  Rule rule = Rule::Sphere;
  bool active_set = false;
  // Screen at iteration 0 as well; the path driver turns this off when it has
  // just path-screened the same point.
  bool screen_at_start = true;
  int sdls_budget = 30;
  void validate() const;
};

struct ScreenEvent {
  int iteration = 0;
  std::size_t new_l = 0;
  std::size_t new_r = 0;
  std::size_t remaining = 0;
};

struct SolveResult {
  SymMat metric;
  VectorXd alpha;
  // <H_t, metric> for every triplet.
  VectorXd inner;
  double gap = 0.0;  // full-problem gap with alpha fixed on screened sets
  double primal = 0.0;
  double dual = 0.0;
  double loss = 0.0;  // loss term of the primal
  int iterations = 0;
  bool converged = false;
  std::vector<TripletStatus> statuses;
  std::vector<ScreenEvent> screening_log;
  std::size_t n_screened_l = 0;
  std::size_t n_screened_r = 0;
  std::size_t n_unknown = 0;
  double wall_time = 0.0;
  double screen_time = 0.0;
};

// Averaged Barzilai-Borwein step; returns previous on degenerate differences.
double bb_step(const SymMat& dm, const SymMat& dg, double previous);

// Primal with screened triplets replaced by their fixed linear or zero parts.
double reduced_primal_value(const Problem& p, const SymMat& m, double lambda,
                            const std::vector<TripletStatus>& statuses);
SymMat reduced_gradient(const Problem& p, const SymMat& m, double lambda,
                        const std::vector<TripletStatus>& statuses);

// Empty statuses means all Unknown.
SolveResult pgd_solve(const Problem& p, double lambda, const SolveConfig& config, const SymMat& init,
                      std::vector<TripletStatus> statuses = {});
SolveResult active_set_solve(const Problem& p, double lambda, const SolveConfig& config, const SymMat& init,
                             std::vector<TripletStatus> statuses = {});
// Dispatches on config.active_set.
SolveResult solve(const Problem& p, double lambda, const SolveConfig& config, const SymMat& init,
                  std::vector<TripletStatus> statuses = {});

}  // namespace tripscreen
