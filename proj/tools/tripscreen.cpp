// Command-line front end: run experiments, inspect datasets, generate
// synthetic data.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tripscreen/tripscreen.hpp"

namespace ts = tripscreen;

namespace {

struct Overrides {
  std::vector<std::pair<std::string, std::string>> items;
};

void add_setting(CLI::App* app, Overrides& ov, const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(
      "--" + key, [&ov, key](const std::string& v) { ov.items.emplace_back(key, v); }, help);
}

int cmd_run(const std::string& config_path, const Overrides& ov, bool dry_run) {
  ts::RunConfig cfg;
  if (!config_path.empty()) ts::apply_config_file(cfg, config_path);
  for (const auto& [k, v] : ov.items) ts::apply_setting(cfg, k, v);
  cfg.validate();
  if (dry_run) {
    std::cout << ts::dump_config(cfg);
    return 0;
  }
  const ts::RunReport rep = ts::run(cfg);
  for (const ts::TrialReport& tr : rep.trials) {
    std::cout << "trial " << tr.trial << ": n=" << tr.n_samples << " triplets=" << tr.n_triplets
              << " steps=" << tr.path.steps.size() << " lambda_max=" << tr.path.lambda_max
              << " time=" << tr.path.wall_time << "s";
    if (!tr.error.empty()) std::cout << " error: " << tr.error;
    std::cout << '\n';
  }
  std::cout << "wrote " << rep.path_csv << " and " << rep.summary_csv << '\n';
  return rep.exit_status;
}

int cmd_info(const std::string& data_path, const std::string& format, int label_column, int k, double gamma) {
  const ts::Dataset data = ts::load_dataset(data_path, ts::parse_format(format), label_column);
  data.validate();
  std::map<int, int> classes;
  for (int l : data.labels) ++classes[l];
  std::cout << "samples " << data.size() << "\nfeatures " << data.dim() << "\nclasses " << classes.size() << '\n';
  for (const auto& [label, count] : classes) std::cout << "  label " << label << ": " << count << '\n';
  const ts::Problem p(ts::build_triplets(data, k), ts::LossSpec{gamma});
  std::cout << "triplets " << p.size() << "\nlambda_max " << ts::lambda_max(p) << '\n';
  return 0;
}

int cmd_generate(const std::string& out, int n, int d, int classes, std::uint64_t seed, double separation,
                 const std::string& format) {
  const ts::Dataset data = ts::synthetic_gaussian(n, d, classes, seed, separation);
  ts::write_dataset(out, data, ts::parse_format(format));
  std::cout << "wrote " << n << " samples to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Triplet-loss metric learning with safe triplet screening"};
  app.set_version_flag("--version", ts::kVersion);
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  bool dry_run = false;
  CLI::App* run = app.add_subcommand("run", "Run the regularization path over subsampled trials");
  run->add_option("--config", config_path, "key = value configuration file (flags override it)");
  run->add_flag("--dry-run", dry_run, "Print the resolved configuration and exit");
  add_setting(run, ov, "dataset", "Input dataset path");
  add_setting(run, ov, "format", "auto | libsvm | csv");
  add_setting(run, ov, "label_column", "CSV label column (negative counts from the end)");
  add_setting(run, ov, "k", "Neighbours per anchor (inf for all)");
  add_setting(run, ov, "gamma", "Smoothed hinge width (0 = hinge)");
  add_setting(run, ov, "decay", "Lambda decay factor per path step");
  add_setting(run, ov, "stop_threshold", "Path termination threshold");
  add_setting(run, ov, "max_steps", "Maximum number of path steps");
  add_setting(run, ov, "gap_tol", "Relative duality gap tolerance");
  add_setting(run, ov, "max_iter", "Iteration limit per lambda");
  add_setting(run, ov, "screen_every", "Iterations between screening checkpoints");
  add_setting(run, ov, "bound", "none | gb | pgb | dgb | cdgb | rrpb | rrpb+pgb");
  add_setting(run, ov, "rule", "sphere | linear | sdls | diag");
  add_setting(run, ov, "active_set", "Use the active-set solver (true/false)");
  add_setting(run, ov, "diagonal", "Restrict the metric to diagonal matrices (true/false)");
  add_setting(run, ov, "range_screening", "Use lambda-range screening (true/false)");
  add_setting(run, ov, "sdls_budget", "Dual ascent iterations for the sdls rule");
  add_setting(run, ov, "subsample", "Fraction of samples per trial");
  add_setting(run, ov, "trials", "Number of random trials");
  add_setting(run, ov, "seed", "Base random seed");
  add_setting(run, ov, "output_dir", "Directory for path.csv and summary.csv");

  std::string info_data, info_format = "auto";
  int info_label = 0, info_k = 10;
  double info_gamma = 0.05;
  CLI::App* info = app.add_subcommand("info", "Describe a dataset and its triplet set");
  info->add_option("--dataset", info_data, "Input dataset path")->required();
  info->add_option("--format", info_format, "auto | libsvm | csv");
  info->add_option("--label_column", info_label, "CSV label column");
  info->add_option("--k", info_k, "Neighbours per anchor (0 for all)");
  info->add_option("--gamma", info_gamma, "Smoothed hinge width");

  std::string gen_out, gen_format = "auto";
  int gen_n = 200, gen_d = 5, gen_classes = 2;
  std::uint64_t gen_seed = 1;
  double gen_sep = 2.0;
  CLI::App* gen = app.add_subcommand("generate", "Write a synthetic Gaussian dataset");
  gen->add_option("--out", gen_out, "Output path")->required();
  gen->add_option("--n", gen_n, "Samples");
  gen->add_option("--d", gen_d, "Features");
  gen->add_option("--classes", gen_classes, "Classes");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--separation", gen_sep, "Distance of class centres from the origin");
  gen->add_option("--format", gen_format, "auto | libsvm | csv");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(config_path, ov, dry_run);
    if (info->parsed()) return cmd_info(info_data, info_format, info_label, info_k, info_gamma);
    if (gen->parsed()) return cmd_generate(gen_out, gen_n, gen_d, gen_classes, gen_seed, gen_sep, gen_format);
  } catch (const ts::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
