#pragma once

// Regularization path driver with warm starts, path screening and
// range-based screening.

#include <optional>
#include <vector>

#include "tripscreen/solver.hpp"

namespace tripscreen {

struct PathConfig {
  double decay = 0.9;
  double stop_threshold = 0.01;
  SolveConfig solve;
  bool path_screening = true;
  bool use_range_screening = false;
  int max_steps = 1000;
  bool abort_on_failure = false;
  // Keep each step's metric, final partition and path-screening statuses.
  bool keep_metrics = false;
  // Overrides lambda_max as the first lambda.
  std::optional<double> lambda_start;
  void validate() const;
};

struct PathStep {
  double lambda = 0.0;
  int iterations = 0;
  double gap = 0.0;
  bool converged = false;
  double loss = 0.0;
  // Screened before the solve (rule evaluation plus range hits).
  std::size_t n_path_l = 0;
  std::size_t n_path_r = 0;
  std::size_t range_hits = 0;
  // After the solve, including dynamic screening.
  std::size_t n_screened_l = 0;
  std::size_t n_screened_r = 0;
  std::size_t n_unknown = 0;
  // |C*| of the converged metric.
  std::size_t n_center = 0;
  double path_rate_total = 0.0;
  double rate_total = 0.0;
  double rate_screenable = 0.0;
  double wall_time_solve = 0.0;
  double wall_time_screen = 0.0;
  double wall_time_total = 0.0;
  std::optional<SymMat> metric;
  std::optional<Partition> partition;
  // Statuses right after path screening, before the solve.
  std::optional<std::vector<TripletStatus>> path_statuses;
};

struct PathResult {
  double lambda_max = 0.0;
  std::vector<PathStep> steps;
  bool stopped_by_criterion = false;
  bool failed = false;
  double wall_time = 0.0;
};

// max_t <H_t, [sum H]_+> / (1 - gamma); 1.0 when [sum H]_+ vanishes.
double lambda_max(const Problem& p);

// Stopping ratio of the path between consecutive loss values.
double path_stop_ratio(double loss_prev, double loss_cur, double lambda_prev, double lambda_cur);

PathResult run_path(const Problem& p, const PathConfig& config);

}  // namespace tripscreen
