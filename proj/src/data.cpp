#include "bart/data.hpp"

#include "bart/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bart {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_cell(const std::string& cell, const std::string& col, std::size_t row) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != cell.size() || cell.empty()) {
    throw std::runtime_error("non-numeric cell in column '" + col + "' at data row " +
                             std::to_string(row + 1) + ": '" + cell + "'");
  }
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int GroupingMeta::current_size() const {
  int c = 0;
  for (int g : column_group)
    if (g == 0) ++c;
  return c;
}

int GroupingMeta::past_size(int k) const {
  int c = 0;
  for (int g : column_group)
    if (g == k) ++c;
  return c;
}

std::vector<int> GroupingMeta::group_sizes() const {
  std::vector<int> sizes(static_cast<std::size_t>(response_time), 0);
  for (int g : column_group) sizes[static_cast<std::size_t>(g)]++;
  return sizes;
}

void GroupingMeta::validate(int P) const {
  if (static_cast<int>(column_group.size()) != P)
    throw std::runtime_error("grouping meta covers " + std::to_string(column_group.size()) +
                             " columns, dataset has " + std::to_string(P));
  if (response_time < 1) throw std::runtime_error("response time must be >= 1");
  int total = 0;
  for (int s : group_sizes()) total += s;
  if (total != P) throw std::runtime_error("group sizes do not sum to P");
  for (int g : column_group)
    if (g < 0 || g >= response_time)
      throw std::runtime_error("column group label outside 0..t-1");
}

std::vector<std::pair<std::string, MetaEntry>> parse_meta_text(const std::string& text) {
  std::vector<std::pair<std::string, MetaEntry>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("meta line " + std::to_string(lineno) + " has no ':' separator");
    std::string name = trim(line.substr(0, colon));
    std::string label = trim(line.substr(colon + 1));
    if (name.empty()) throw std::runtime_error("meta line " + std::to_string(lineno) + " has empty column name");
    MetaEntry e;
    if (label == "current") {
      e.group = 0;
    } else if (label.rfind("past(", 0) == 0 && label.back() == ')') {
      std::string inner = label.substr(5, label.size() - 6);
      int k = 0;
      try {
        k = std::stoi(inner);
      } catch (const std::exception&) {
        k = 0;
      }
      if (k < 1)
        throw std::runtime_error("meta label for '" + name + "': past(k) requires k >= 1, got '" +
                                 inner + "'");
      e.group = k;
    } else if (label == "response(continuous)") {
      e.is_response = true;
      e.outcome = Outcome::continuous;
    } else if (label == "response(binary)") {
      e.is_response = true;
      e.outcome = Outcome::binary;
    } else {
      throw std::runtime_error("meta label for '" + name + "' not recognized: '" + label +
                               "' (expected current | past(k) | response(continuous|binary))");
    }
    out.emplace_back(name, e);
  }
  return out;
}

std::pair<Dataset, GroupingMeta> load_csv(const std::string& csv_path,
                                          const std::string& meta_path) {
  auto entries = parse_meta_text(read_file(meta_path));
  std::map<std::string, MetaEntry> by_name;
  for (auto& [name, e] : entries) {
    if (by_name.count(name)) throw std::runtime_error("duplicate meta entry for column '" + name + "'");
    by_name[name] = e;
  }

  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open file: " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + csv_path);
  auto header = split_csv_line(line);
  if (header.empty()) throw std::runtime_error("CSV header has no columns");

  // Resolve every header against the meta; exactly one response column.
  int response_idx = -1;
  Outcome outcome = Outcome::continuous;
  std::vector<int> groups;
  for (std::size_t j = 0; j < header.size(); ++j) {
    auto it = by_name.find(header[j]);
    if (it == by_name.end())
      throw std::runtime_error("unmapped column '" + header[j] + "' (no meta entry)");
    if (it->second.is_response) {
      if (response_idx >= 0) throw std::runtime_error("more than one response column in meta");
      response_idx = static_cast<int>(j);
      outcome = it->second.outcome;
      groups.push_back(-1);
    } else {
      groups.push_back(it->second.group);
    }
  }
  if (response_idx < 0) throw std::runtime_error("meta declares no response column");
  std::set<std::string> header_set(header.begin(), header.end());
  for (auto& [name, e] : by_name)
    if (!header_set.count(name))
      throw std::runtime_error("meta entry '" + name + "' has no matching CSV column");

  std::vector<std::vector<double>> cols(header.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("row " + std::to_string(row + 1) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    for (std::size_t j = 0; j < cells.size(); ++j)
      cols[j].push_back(parse_cell(cells[j], header[j], row));
    ++row;
  }
  if (row == 0) throw std::runtime_error("CSV has no data rows");

  Dataset ds;
  ds.n = static_cast<int>(row);
  ds.P = static_cast<int>(header.size()) - 1;
  if (ds.P < 1) throw std::runtime_error("dataset has no predictor columns");
  ds.X.resize(ds.n, ds.P);
  ds.y.resize(ds.n);

  GroupingMeta meta;
  meta.outcome = outcome;
  meta.response_name = header[static_cast<std::size_t>(response_idx)];

  int out_j = 0;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<int>(j) == response_idx) {
      for (std::size_t i = 0; i < row; ++i) ds.y(static_cast<Eigen::Index>(i)) = cols[j][i];
      continue;
    }
    ds.col_names.push_back(header[j]);
    meta.column_group.push_back(groups[j]);
    double lo = cols[j][0], hi = cols[j][0];
    for (std::size_t i = 0; i < row; ++i) {
      double v = cols[j][i];
      ds.X(static_cast<Eigen::Index>(i), out_j) = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(lo < hi))
      throw std::runtime_error("constant predictor column '" + header[j] + "' (unsplittable)");
    ++out_j;
  }

  if (outcome == Outcome::binary) {
    for (int i = 0; i < ds.n; ++i) {
      double v = ds.y(i);
      if (v != 0.0 && v != 1.0)
        throw std::runtime_error("non-binary response: value " + std::to_string(v) + " at row " +
                                 std::to_string(i + 1));
    }
  }

  int max_k = 0;
  for (int g : meta.column_group) max_k = std::max(max_k, g);
  meta.response_time = max_k + 1;
  meta.validate(ds.P);
  return {std::move(ds), std::move(meta)};
}

ScalingRecord standardize(Dataset& ds) {
  double lo = ds.y.minCoeff();
  double hi = ds.y.maxCoeff();
  if (!(lo < hi)) throw std::runtime_error("degenerate response (max equals min)");
  ScalingRecord rec{lo, hi};
  for (int i = 0; i < ds.n; ++i) ds.y(i) = rec.to_model(ds.y(i));
  return rec;
}

double ColumnTransform::to_u(double x) const {
  if (x <= knots.front()) return knots_u.front();
  if (x >= knots.back()) return knots_u.back();
  auto it = std::upper_bound(knots.begin(), knots.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - knots.begin());
  std::size_t lo = hi - 1;
  double w = (x - knots[lo]) / (knots[hi] - knots[lo]);
  return (1.0 - w) * knots_u[lo] + w * knots_u[hi];
}

std::vector<ColumnTransform> build_transforms(const Dataset& ds, int cutpoints) {
  if (cutpoints < 1) throw std::invalid_argument("cutpoints must be >= 1");
  std::vector<ColumnTransform> out(static_cast<std::size_t>(ds.P));
  const auto n = static_cast<std::size_t>(ds.n);
  std::vector<double> col(n);
  for (int j = 0; j < ds.P; ++j) {
    for (int i = 0; i < ds.n; ++i) col[static_cast<std::size_t>(i)] = ds.X(i, j);
    std::sort(col.begin(), col.end());

    auto& tr = out[static_cast<std::size_t>(j)];
    // Unique knots with mid-rank u values.
    std::size_t i = 0;
    while (i < n) {
      std::size_t k = i;
      while (k < n && col[k] == col[i]) ++k;
      tr.knots.push_back(col[i]);
      tr.knots_u.push_back((static_cast<double>(i) + 0.5 * static_cast<double>(k - i)) /
                           static_cast<double>(n));
      i = k;
    }
    if (tr.knots.size() < 2)
      throw std::runtime_error("constant predictor column '" + ds.col_names[static_cast<std::size_t>(j)] +
                               "' (unsplittable)");

    const double lo = tr.knots.front(), hi = tr.knots.back();
    if (tr.knots.size() == 2) {
      // Binary column: single cutpoint at the midpoint.
      tr.cut_values.push_back(0.5 * (lo + hi));
    } else {
      std::set<double> grid;
      for (int g = 1; g <= cutpoints; ++g) {
        double p = static_cast<double>(g) / static_cast<double>(cutpoints + 1);
        double v = quantile_sorted({col.data(), col.size()}, p);
        if (v > lo && v < hi) grid.insert(v);
      }
      if (grid.empty()) {
        // Heavily skewed discrete column: fall back to midpoints between knots.
        for (std::size_t k = 0; k + 1 < tr.knots.size(); ++k)
          grid.insert(0.5 * (tr.knots[k] + tr.knots[k + 1]));
      }
      tr.cut_values.assign(grid.begin(), grid.end());
    }
    for (double c : tr.cut_values) tr.cut_u.push_back(tr.to_u(c));
  }
  return out;
}

Matrix to_rank_space(const Matrix& X, const std::vector<ColumnTransform>& transforms) {
  if (static_cast<std::size_t>(X.cols()) != transforms.size())
    throw std::invalid_argument("to_rank_space: column count mismatch");
  Matrix U(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      U(i, j) = transforms[static_cast<std::size_t>(j)].to_u(X(i, j));
  return U;
}

}  // namespace bart
