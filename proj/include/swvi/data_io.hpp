#pragma once

#include <string>
#include <utility>
#include <vector>

#include "swvi/engine.hpp"

namespace swvi {

enum class HeaderMode { automatic, present, absent };

struct Dataset {
  Eigen::MatrixXd features;  // N x d
  Eigen::VectorXd labels;    // {0, 1}
  std::vector<std::string> feature_names;
  std::vector<int> rejected_rows;  // 1-based input rows dropped as unparseable
  // per-column standardization applied (empty until standardize())
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;

  int size() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
};

// Comma/char-delimited text, one label column (negative index counts from the
// end), label == positive_label_token maps to 1, any single other token to 0.
// More than two distinct label tokens is an error. Rows with unparseable
// numeric cells are dropped and reported in rejected_rows.
Dataset load_csv(const std::string& path, int label_column = -1,
                 const std::string& positive_label_token = "1", char delimiter = ',',
                 HeaderMode header = HeaderMode::automatic);

// Seeded uniform shuffle; standardization is fit on the train split and
// applied to both sides. Zero-variance columns are left unscaled.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed);

// Appends a constant-1 column (do this after standardization).
Dataset append_bias(const Dataset& ds);

struct TracePaths {
  std::string trace_csv;
  std::string timing_csv;
  std::string summary_json;
};

// trace.csv: iter,sw_loss,acceptance_rate — byte-reproducible for a fixed
// seed. Wall-clock times go to timing.csv, which is not reproducible by
// nature. summary.json: final params snapshot, stationarity index, config.
TracePaths write_trace(const RunTrace& trace, const SwviConfig& config, const std::string& dir);

// 17-significant-digit decimal, round-trips exactly
std::string format_double(double v);

std::string swvi_config_to_json(const SwviConfig& cfg);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Plain numeric matrix CSV (no header), one row per line.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path, char delimiter = ',');

// Column extraction from a headered CSV such as trace.csv.
std::vector<double> read_csv_column(const std::string& path, const std::string& column);

}  // namespace swvi
