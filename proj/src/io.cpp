#include "tripscreen/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace tripscreen {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_label(const std::string& tok, int& out) {
  double v;
  if (!parse_double(tok, v) || v != std::floor(v) || std::abs(v) > 2e9) return false;
  out = static_cast<int>(v);
  return true;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

DataFormat parse_format(const std::string& name) {
  if (name == "auto") return DataFormat::Auto;
  if (name == "libsvm") return DataFormat::LibSVM;
  if (name == "csv") return DataFormat::CSV;
  throw ConfigError("unknown format '" + name + "'");
}

const char* to_string(DataFormat f) {
  switch (f) {
    case DataFormat::Auto: return "auto";
    case DataFormat::LibSVM: return "libsvm";
    case DataFormat::CSV: return "csv";
  }
  return "?";
}

Dataset parse_libsvm(const std::string& text, Index dim) {
  std::vector<int> labels;
  std::vector<std::vector<std::pair<Index, double>>> rows;
  Index max_index = 0;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream toks(line);
    std::string tok;
    toks >> tok;
    int label;
    if (!parse_label(tok, label)) throw ParseError("bad label '" + tok + "'", lineno);
    std::vector<std::pair<Index, double>> row;
    while (toks >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError("expected index:value, got '" + tok + "'", lineno);
      double idx, val;
      if (!parse_double(tok.substr(0, colon), idx) || idx != std::floor(idx) || idx < 1)
        throw ParseError("bad feature index in '" + tok + "'", lineno);
      if (!parse_double(tok.substr(colon + 1), val)) throw ParseError("bad feature value in '" + tok + "'", lineno);
      const Index k = static_cast<Index>(idx);
      for (const auto& e : row)
        if (e.first == k) throw ParseError("duplicate feature index " + std::to_string(k), lineno);
      row.emplace_back(k, val);
      max_index = std::max(max_index, k);
    }
    labels.push_back(label);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaError("no samples in input");
  if (dim > 0 && max_index > dim) throw SchemaError("feature index exceeds declared dimension");
  const Index d = dim > 0 ? dim : max_index;
  if (d == 0) throw SchemaError("no features in input");
  Dataset out;
  out.features = MatrixXd::Zero(static_cast<Index>(rows.size()), d);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (const auto& [k, v] : rows[r]) out.features(static_cast<Index>(r), k - 1) = v;
  out.labels = std::move(labels);
  return out;
}

Dataset parse_csv(const std::string& text, int label_column) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> cells = split(line, ',');
    std::vector<double> vals(cells.size());
    bool numeric = true;
    for (std::size_t c = 0; c < cells.size(); ++c) numeric = numeric && parse_double(cells[c], vals[c]);
    if (first) {
      first = false;
      width = cells.size();
      if (!numeric) continue;  // header row
    }
    if (cells.size() != width)
      throw SchemaError("line " + std::to_string(lineno) + ": expected " + std::to_string(width) + " columns, got " +
                        std::to_string(cells.size()));
    if (!numeric) throw ParseError("non-numeric cell", lineno);
    if (width < 2) throw SchemaError("CSV needs a label column and at least one feature");
    const int lc = label_column < 0 ? static_cast<int>(width) + label_column : label_column;
    if (lc < 0 || lc >= static_cast<int>(width)) throw SchemaError("label column out of range");
    int label;
    if (!parse_label(cells[static_cast<std::size_t>(lc)], label)) throw ParseError("label is not an integer", lineno);
    labels.push_back(label);
    vals.erase(vals.begin() + lc);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw SchemaError("no samples in input");
  Dataset out;
  out.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      out.features(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  out.labels = std::move(labels);
  return out;
}

Dataset load_dataset(const std::string& path, DataFormat format, int label_column) {
  if (format == DataFormat::Auto) {
    const std::string ext = std::filesystem::path(path).extension().string();
    format = ext == ".csv" ? DataFormat::CSV : DataFormat::LibSVM;
  }
  const std::string text = read_file(path);
  return format == DataFormat::CSV ? parse_csv(text, label_column) : parse_libsvm(text);
}

void write_dataset(const std::string& path, const Dataset& data, DataFormat format) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  const bool csv = format == DataFormat::CSV ||
                   (format == DataFormat::Auto && std::filesystem::path(path).extension() == ".csv");
  for (Index i = 0; i < data.size(); ++i) {
    out << data.labels[static_cast<std::size_t>(i)];
    for (Index c = 0; c < data.dim(); ++c) {
      const double v = data.features(i, c);
      if (csv)
        out << ',' << fmt(v);
      else if (v != 0.0 || c == data.dim() - 1)
        out << ' ' << (c + 1) << ':' << fmt(v);
    }
    out << '\n';
  }
}

Dataset synthetic_gaussian(Index n, Index d, int classes, std::uint64_t seed, double separation) {
  if (n < 2 || d < 1 || classes < 2) throw ConfigError("synthetic data needs n >= 2, d >= 1, classes >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  MatrixXd centres(classes, d);
  for (int c = 0; c < classes; ++c) {
    VectorXd dir(d);
    for (Index k = 0; k < d; ++k) dir(k) = gauss(rng);
    centres.row(c) = (separation * dir / std::max(dir.norm(), 1e-12)).transpose();
  }
  Dataset out;
  out.features.resize(n, d);
  out.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % classes);
    out.labels[static_cast<std::size_t>(i)] = c;
    for (Index k = 0; k < d; ++k) out.features(i, k) = centres(c, k) + gauss(rng);
  }
  return out;
}

Dataset subsample(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("subsample fraction must lie in (0, 1]");
  const std::size_t n = static_cast<std::size_t>(data.size());
  const std::size_t keep = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index{0});
  if (keep < n) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
  }
  Dataset out;
  out.features.resize(static_cast<Index>(idx.size()), data.dim());
  out.labels.resize(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.features.row(static_cast<Index>(r)) = data.features.row(idx[r]);
    out.labels[r] = data.labels[static_cast<std::size_t>(idx[r])];
  }
  return out;
}

void RunConfig::validate() const {
  if (dataset.empty()) throw ConfigError("dataset path is required");
  if (k < 0) throw ConfigError("k must be >= 0 (0 selects all neighbours)");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("subsample must lie in (0, 1]");
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (rule == Rule::Diag && !diagonal) throw ConfigError("rule diag requires diagonal = true");
  path_config().validate();
}

PathConfig RunConfig::path_config() const {
  PathConfig pc;
  pc.decay = decay;
  pc.stop_threshold = stop_threshold;
  pc.max_steps = max_steps;
  pc.use_range_screening = range_screening;
  pc.solve.gap_tol = gap_tol;
  pc.solve.max_iter = max_iter;
  pc.solve.screen_every = screen_every;
  pc.solve.bound = bound;
  pc.solve.rule = rule;
  pc.solve.active_set = active_set;
  pc.solve.sdls_budget = sdls_budget;
  return pc;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  double out;
  if (!parse_double(v, out)) throw ConfigError("bad numeric value for " + key + ": '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 2e9) throw ConfigError("bad integer value for " + key + ": '" + v + "'");
  return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean value for " + key + ": '" + v + "'");
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "dataset") cfg.dataset = v;
  else if (key == "format") cfg.format = parse_format(v);
  else if (key == "label_column") cfg.label_column = to_int(key, v);
  else if (key == "k") cfg.k = v == "inf" ? 0 : to_int(key, v);
  else if (key == "gamma") cfg.gamma = to_double(key, v);
  else if (key == "decay") cfg.decay = to_double(key, v);
  else if (key == "stop_threshold") cfg.stop_threshold = to_double(key, v);
  else if (key == "max_steps") cfg.max_steps = to_int(key, v);
  else if (key == "gap_tol") cfg.gap_tol = to_double(key, v);
  else if (key == "max_iter") cfg.max_iter = to_int(key, v);
  else if (key == "screen_every") cfg.screen_every = to_int(key, v);
  else if (key == "bound") cfg.bound = parse_bound(v);
  else if (key == "rule") cfg.rule = parse_rule(v);
  else if (key == "active_set") cfg.active_set = to_bool(key, v);
  else if (key == "diagonal") cfg.diagonal = to_bool(key, v);
  else if (key == "range_screening") cfg.range_screening = to_bool(key, v);
  else if (key == "sdls_budget") cfg.sdls_budget = to_int(key, v);
  else if (key == "subsample") cfg.subsample = to_double(key, v);
  else if (key == "trials") cfg.trials = to_int(key, v);
  else if (key == "seed") {
    const double d = to_double(key, v);
    if (d < 0 || d != std::floor(d)) throw ConfigError("seed must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(d);
  } else if (key == "output_dir") cfg.output_dir = v;
  else throw ConfigError("unknown setting '" + key + "'");
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) { apply_config_text(cfg, read_file(path)); }

std::string dump_config(const RunConfig& c) {
  std::ostringstream o;
  o << "dataset = " << c.dataset << "\nformat = " << to_string(c.format) << "\nlabel_column = " << c.label_column
    << "\nk = " << c.k << "\ngamma = " << c.gamma << "\ndecay = " << c.decay
    << "\nstop_threshold = " << c.stop_threshold << "\nmax_steps = " << c.max_steps << "\ngap_tol = " << c.gap_tol
    << "\nmax_iter = " << c.max_iter << "\nscreen_every = " << c.screen_every << "\nbound = " << to_string(c.bound)
    << "\nrule = " << to_string(c.rule) << "\nactive_set = " << (c.active_set ? "true" : "false")
    << "\ndiagonal = " << (c.diagonal ? "true" : "false")
    << "\nrange_screening = " << (c.range_screening ? "true" : "false") << "\nsdls_budget = " << c.sdls_budget
    << "\nsubsample = " << c.subsample << "\ntrials = " << c.trials << "\nseed = " << c.seed
    << "\noutput_dir = " << c.output_dir << "\n";
  return o.str();
}

const std::vector<std::string>& path_csv_columns() {
  static const std::vector<std::string> cols = {
      "trial",          "lambda",          "iterations",      "gap",           "n_screened_L",
      "n_screened_R",   "n_unknown",       "rate_total",      "rate_screenable", "range_hits",
      "wall_time_solve", "wall_time_screen", "path_rate_total", "wall_time_total", "converged"};
  return cols;
}

namespace {

std::vector<double> step_values(int trial, const PathStep& s) {
  return {static_cast<double>(trial),
          s.lambda,
          static_cast<double>(s.iterations),
          s.gap,
          static_cast<double>(s.n_screened_l),
          static_cast<double>(s.n_screened_r),
          static_cast<double>(s.n_unknown),
          s.rate_total,
          s.rate_screenable,
          static_cast<double>(s.range_hits),
          s.wall_time_solve,
          s.wall_time_screen,
          s.path_rate_total,
          s.wall_time_total,
          s.converged ? 1.0 : 0.0};
}

void write_header(std::ostream& out, const std::vector<std::string>& cols) {
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
}

void write_row(std::ostream& out, const std::vector<double>& vals) {
  for (std::size_t c = 0; c < vals.size(); ++c) out << (c ? "," : "") << std::setprecision(12) << vals[c];
  out << '\n';
}

}  // namespace

RunReport run(const RunConfig& cfg) {
  cfg.validate();
  const Dataset full = load_dataset(cfg.dataset, cfg.format, cfg.label_column);
  full.validate();
  std::filesystem::create_directories(cfg.output_dir);
  RunReport report;
  report.path_csv = (std::filesystem::path(cfg.output_dir) / "path.csv").string();
  report.summary_csv = (std::filesystem::path(cfg.output_dir) / "summary.csv").string();

  std::ofstream path_out(report.path_csv);
  if (!path_out) throw InputError("cannot write '" + report.path_csv + "'");
  write_header(path_out, path_csv_columns());

  const PathConfig pc = cfg.path_config();
  for (int trial = 0; trial < cfg.trials; ++trial) {
    TrialReport tr;
    tr.trial = trial;
    try {
      const Dataset data = subsample(full, cfg.subsample, cfg.seed + static_cast<std::uint64_t>(trial));
      tr.n_samples = static_cast<std::size_t>(data.size());
      const Problem problem(build_triplets(data, cfg.k), LossSpec{cfg.gamma}, cfg.diagonal);
      tr.n_triplets = problem.size();
      tr.path = run_path(problem, pc);
      for (const PathStep& s : tr.path.steps) write_row(path_out, step_values(trial, s));
      path_out.flush();
      if (tr.path.failed) {
        tr.error = "solver did not converge at some lambda";
        report.exit_status = 1;
      }
    } catch (const Error& e) {
      tr.error = e.what();
      report.exit_status = 1;
    }
    report.trials.push_back(std::move(tr));
  }

  // Average over trials per path step index.
  std::ofstream sum_out(report.summary_csv);
  if (!sum_out) throw InputError("cannot write '" + report.summary_csv + "'");
  std::vector<std::string> cols = path_csv_columns();
  cols[0] = "step";
  cols.insert(cols.begin() + 1, "n_trials");
  write_header(sum_out, cols);
  std::size_t longest = 0;
  for (const TrialReport& tr : report.trials) longest = std::max(longest, tr.path.steps.size());
  for (std::size_t s = 0; s < longest; ++s) {
    std::vector<double> acc;
    int count = 0;
    for (const TrialReport& tr : report.trials) {
      if (s >= tr.path.steps.size()) continue;
      const std::vector<double> v = step_values(tr.trial, tr.path.steps[s]);
      if (acc.empty()) acc.assign(v.size(), 0.0);
      for (std::size_t c = 0; c < v.size(); ++c) acc[c] += v[c];
      ++count;
    }
    for (double& a : acc) a /= count;
    acc[0] = static_cast<double>(s);
    acc.insert(acc.begin() + 1, static_cast<double>(count));
    write_row(sum_out, acc);
  }
  return report;
}

}  // namespace tripscreen
