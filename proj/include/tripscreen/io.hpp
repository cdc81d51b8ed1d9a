#pragma once

// Dataset files, run configuration and the experiment runner behind the CLI.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tripscreen/path.hpp"

namespace tripscreen {

enum class DataFormat { Auto, LibSVM, CSV };

DataFormat parse_format(const std::string& name);
const char* to_string(DataFormat f);

// LibSVM: "<label> <index>:<value> ..." with 1-based indices, densified.
// CSV: one sample per row, label in label_column (negative counts from the
// end), optional non-numeric header row. Lines starting with '#' are skipped
// in both formats.
Dataset load_dataset(const std::string& path, DataFormat format = DataFormat::Auto, int label_column = 0);
Dataset parse_libsvm(const std::string& text, Index dim = 0);
Dataset parse_csv(const std::string& text, int label_column = 0);
void write_dataset(const std::string& path, const Dataset& data, DataFormat format);

// Isotropic Gaussian classes with centres spaced by `separation` along random
// directions.
Dataset synthetic_gaussian(Index n, Index d, int classes, std::uint64_t seed, double separation = 2.0);

// Random subset of round(fraction * n) samples in original order.
Dataset subsample(const Dataset& data, double fraction, std::uint64_t seed);

struct RunConfig {
  std::string dataset;
  DataFormat format = DataFormat::Auto;
  int label_column = 0;
  int k = 10;
  double gamma = 0.05;
  double decay = 0.9;
  double stop_threshold = 0.01;
  int max_steps = 1000;
  double gap_tol = 1e-6;
  int max_iter = 100000;
  int screen_every = 10;
  Bound bound = Bound::RRPB;
  Rule rule = Rule::Sphere;
  bool active_set = true;
  bool diagonal = false;
  bool range_screening = false;
  int sdls_budget = 30;
  double subsample = 0.9;
  int trials = 5;
  std::uint64_t seed = 1;
  std::string output_dir = ".";

  void validate() const;
  PathConfig path_config() const;
};

// Applies "key = value" assignments; unknown keys and bad values throw
// ConfigError.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
// '#' starts a comment; blank lines ignored.
void apply_config_text(RunConfig& cfg, const std::string& text);
void apply_config_file(RunConfig& cfg, const std::string& path);
std::string dump_config(const RunConfig& cfg);

struct TrialReport {
  int trial = 0;
  std::size_t n_samples = 0;
  std::size_t n_triplets = 0;
  PathResult path;
  std::string error;
};

struct RunReport {
  std::vector<TrialReport> trials;
  std::string path_csv;
  std::string summary_csv;
  int exit_status = 0;
};

// Column order of the per-lambda CSV.
const std::vector<std::string>& path_csv_columns();

// Runs every trial, writes path.csv and summary.csv into output_dir.
RunReport run(const RunConfig& cfg);

}  // namespace tripscreen
