#include "swvi/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "swvi/rng.hpp"

namespace swvi {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) {
    // trim spaces and stray carriage returns
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == delim) cells.push_back("");
  return cells;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

Dataset load_csv(const std::string& path, int label_column,
                 const std::string& positive_label_token, char delimiter, HeaderMode header) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_csv: cannot open '" + path + "'");

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw ValidationError("load_csv: '" + path + "' is empty");

  const auto first_cells = split_line(lines.front(), delimiter);
  const int n_cols = static_cast<int>(first_cells.size());
  if (n_cols < 2) throw ValidationError("load_csv: need at least one feature and a label column");
  int label_idx = label_column < 0 ? n_cols + label_column : label_column;
  if (label_idx < 0 || label_idx >= n_cols)
    throw ValidationError("load_csv: label column " + std::to_string(label_column) +
                          " out of range for " + std::to_string(n_cols) + " columns");

  Dataset ds;
  bool has_header = false;
  if (header == HeaderMode::present) {
    has_header = true;
  } else if (header == HeaderMode::automatic) {
    // a header is assumed when any feature cell of the first row is not numeric
    double v;
    for (int c = 0; c < n_cols && !has_header; ++c)
      if (c != label_idx && !parse_number(first_cells[c], v)) has_header = true;
  }
  if (has_header) {
    for (int c = 0; c < n_cols; ++c)
      if (c != label_idx) ds.feature_names.push_back(first_cells[c]);
  } else {
    for (int c = 0, k = 0; c < n_cols; ++c)
      if (c != label_idx) ds.feature_names.push_back("x" + std::to_string(k++));
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::string> label_tokens;
  std::set<std::string> distinct_labels;
  for (std::size_t r = has_header ? 1 : 0; r < lines.size(); ++r) {
    const auto cells = split_line(lines[r], delimiter);
    bool ok = static_cast<int>(cells.size()) == n_cols;
    std::vector<double> feat;
    feat.reserve(n_cols - 1);
    if (ok) {
      for (int c = 0; c < n_cols && ok; ++c) {
        if (c == label_idx) continue;
        double v;
        ok = parse_number(cells[c], v);
        if (ok) feat.push_back(v);
      }
    }
    if (!ok) {
      ds.rejected_rows.push_back(static_cast<int>(r) + 1);
      continue;
    }
    rows.push_back(std::move(feat));
    label_tokens.push_back(cells[label_idx]);
    distinct_labels.insert(cells[label_idx]);
  }
  if (rows.empty())
    throw ValidationError("load_csv: '" + path + "' contains no data rows");
  if (distinct_labels.size() > 2) {
    std::string toks;
    for (const auto& t : distinct_labels) toks += (toks.empty() ? "" : ", ") + t;
    throw ValidationError("load_csv: label column has more than two distinct tokens: " + toks);
  }

  const int n = static_cast<int>(rows.size());
  const int d = n_cols - 1;
  ds.features.resize(n, d);
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.features(i, j) = rows[i][j];
    ds.labels(i) = label_tokens[i] == positive_label_token ? 1.0 : 0.0;
  }
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ValidationError("split: test_fraction must be in (0, 1)");
  const int n = ds.size();
  const int n_test = static_cast<int>(std::llround(test_fraction * n));
  const int n_train = n - n_test;
  if (n_test < 1 || n_train < 1)
    throw ValidationError("split: fraction " + std::to_string(test_fraction) +
                          " leaves an empty side for n = " + std::to_string(n));

  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  RngStream rng = RngStream(seed).substream(0x51u);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[i], idx[j]);
  }

  auto take = [&](int begin, int count) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.features.resize(count, ds.dim());
    out.labels.resize(count);
    for (int i = 0; i < count; ++i) {
      out.features.row(i) = ds.features.row(idx[begin + i]);
      out.labels(i) = ds.labels(idx[begin + i]);
    }
    return out;
  };
  Dataset train = take(0, n_train);
  Dataset test = take(n_train, n_test);

  // standardize with train statistics (population std)
  Eigen::VectorXd mean = train.features.colwise().mean();
  Eigen::VectorXd sd =
      ((train.features.rowwise() - mean.transpose()).array().square().colwise().mean())
          .sqrt()
          .matrix();
  for (int j = 0; j < ds.dim(); ++j)
    if (sd(j) < 1e-12) {
      sd(j) = 1.0;  // constant column: leave it where it is
      mean(j) = 0.0;
    }
  auto apply = [&](Dataset& part) {
    part.features = (part.features.rowwise() - mean.transpose()).array().rowwise() /
                    sd.transpose().array();
    part.shift = mean;
    part.scale = sd;
  };
  apply(train);
  apply(test);
  return {std::move(train), std::move(test)};
}

Dataset append_bias(const Dataset& ds) {
  Dataset out = ds;
  out.features.conservativeResize(ds.size(), ds.dim() + 1);
  out.features.col(ds.dim()).setOnes();
  out.feature_names.push_back("bias");
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string swvi_config_to_json(const SwviConfig& cfg) {
  nlohmann::json j;
  j["iterations"] = cfg.iterations;
  j["warmup"] = cfg.warmup;
  j["particles"] = cfg.particles;
  j["projections"] = cfg.projections;
  j["p"] = cfg.p;
  j["learning_rate"] = cfg.learning_rate;
  j["optimizer"] = {{"kind", cfg.optimizer.kind == OptimizerKind::adam ? "adam" : "sgd"},
                    {"beta1", cfg.optimizer.beta1},
                    {"beta2", cfg.optimizer.beta2},
                    {"eps_num", cfg.optimizer.eps_num}};
  nlohmann::json k;
  switch (cfg.kernel.kind) {
    case KernelKind::rwmh:
      k = {{"kind", "rwmh"}, {"rwmh_std", cfg.kernel.rwmh_std}};
      break;
    case KernelKind::ula:
      k = {{"kind", "ula"}, {"ula_step", cfg.kernel.ula_step}};
      break;
    case KernelKind::hmc:
      k = {{"kind", "hmc"},
           {"hmc_step", cfg.kernel.hmc_step},
           {"hmc_leapfrogs", cfg.kernel.hmc_leapfrogs}};
      break;
  }
  j["kernel"] = k;
  j["resample_projections"] = cfg.resample_projections;
  j["seed"] = cfg.seed;
  j["stationarity_window"] = cfg.stationarity_window;
  j["stationarity_tol"] = cfg.stationarity_tol;
  return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TracePaths write_trace(const RunTrace& trace, const SwviConfig& config, const std::string& dir) {
  if (dir.empty()) throw ValidationError("write_trace: output directory is empty");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("write_trace: cannot create '" + dir + "': " + ec.message());

  TracePaths paths;
  paths.trace_csv = (std::filesystem::path(dir) / "trace.csv").string();
  paths.timing_csv = (std::filesystem::path(dir) / "timing.csv").string();
  paths.summary_json = (std::filesystem::path(dir) / "summary.json").string();

  std::string csv = "iter,sw_loss,acceptance_rate\n";
  std::string timing = "iter,wall_ms\n";
  for (const auto& r : trace.records) {
    csv += std::to_string(r.t) + "," + format_double(r.sw_loss) + "," +
           format_double(r.acceptance_rate) + "\n";
    timing += std::to_string(r.t) + "," + format_double(r.wall_ms) + "\n";
  }
  write_text_file(paths.trace_csv, csv);
  write_text_file(paths.timing_csv, timing);

  nlohmann::json j;
  j["final_params"] = nlohmann::json::parse(family_to_json(trace.final_params));
  j["stationarity"] = {{"window", trace.stationarity.window},
                       {"tol", trace.stationarity.tol}};
  if (trace.stationarity.burn_in.has_value())
    j["stationarity"]["burn_in"] = *trace.stationarity.burn_in;
  else
    j["stationarity"]["burn_in"] = nullptr;
  j["config"] = nlohmann::json::parse(swvi_config_to_json(config));
  write_text_file(paths.summary_json, j.dump(2) + "\n");
  return paths;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ",";
      out += format_double(m(i, j));
    }
    out += "\n";
  }
  write_text_file(path, out);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line, delimiter);
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      double v;
      if (!parse_number(c, v))
        throw ValidationError(path + ": unparseable cell '" + c + "' at line " +
                              std::to_string(lineno));
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(path + ": ragged row at line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path + ": no rows");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::vector<double> read_csv_column(const std::string& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto names = split_line(line, ',');
  int col = -1;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == column) col = static_cast<int>(i);
  if (col < 0) throw ValidationError(path + ": no column named '" + column + "'");
  std::vector<double> vals;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line, ',');
    double v;
    if (static_cast<int>(cells.size()) <= col || !parse_number(cells[col], v))
      throw ValidationError(path + ": bad row at line " + std::to_string(lineno));
    vals.push_back(v);
  }
  return vals;
}

}  // namespace swvi
