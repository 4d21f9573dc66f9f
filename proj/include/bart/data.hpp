#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace bart {

// Row-major so per-observation tree traversal reads contiguous memory.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Outcome { continuous, binary };

struct Dataset {
  Matrix X;  // n x P
  Vector y;  // length n
  std::vector<std::string> col_names;
  int n = 0;
  int P = 0;
};

// Longitudinal grouping of the columns. Group 0 is the current time point
// (baseline predictors included); group k in 1..t-1 is the past time point k.
struct GroupingMeta {
  int response_time = 1;  // t
  std::vector<int> column_group;
  std::string response_name;
  Outcome outcome = Outcome::continuous;

  int current_size() const;
  int past_size(int k) const;             // k in 1..t-1
  std::vector<int> group_sizes() const;   // index 0 = current, then past 1..t-1
  void validate(int P) const;
};

struct ScalingRecord {
  double y_min = 0.0;
  double y_max = 1.0;
  double to_model(double y) const { return (y - y_min) / (y_max - y_min) - 0.5; }
  double to_data(double ym) const { return (ym + 0.5) * (y_max - y_min) + y_min; }
};

// Load a headered CSV plus its grouping meta file. The meta file maps every
// CSV column to `current`, `past(k)` or `response(continuous|binary)`.
std::pair<Dataset, GroupingMeta> load_csv(const std::string& csv_path,
                                          const std::string& meta_path);

// Parse the meta grammar from text (exposed for tests and in-memory use).
// Returns the labels keyed by column name; response entry included.
struct MetaEntry {
  bool is_response = false;
  Outcome outcome = Outcome::continuous;
  int group = 0;  // 0 current, k >= 1 past(k)
};
std::vector<std::pair<std::string, MetaEntry>> parse_meta_text(const std::string& text);

// Map y linearly onto [-0.5, 0.5]; predictors untouched.
ScalingRecord standardize(Dataset& ds);

// Per-column empirical quantile machinery: the cutpoint grid and the
// monotone map onto [0,1] rank space used by the soft gates.
struct ColumnTransform {
  std::vector<double> cut_values;  // candidate cutpoints, strictly inside the range
  std::vector<double> cut_u;       // the same cutpoints in rank space
  std::vector<double> knots;       // unique sorted observed values
  std::vector<double> knots_u;     // mid-rank of each knot

  // Piecewise-linear interpolation of the empirical CDF, clamped outside
  // the observed range.
  double to_u(double x) const;
};

std::vector<ColumnTransform> build_transforms(const Dataset& ds, int cutpoints);

// Rank-space view of the whole matrix (same shape as X).
Matrix to_rank_space(const Matrix& X, const std::vector<ColumnTransform>& transforms);

}  // namespace bart
