#include "vifreg/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vifreg/errors.hpp"
#include "vifreg/robust.hpp"

namespace vifreg {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string t = s.substr(b, e - b);
  if (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') ||
                        (t.front() == '\'' && t.back() == '\''))) {
    t = t.substr(1, t.size() - 2);
  }
  return t;
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  bool in_quotes = false;
  for (char ch : line) {
    if (ch == '"') {
      in_quotes = !in_quotes;
      field.push_back(ch);
    } else if (ch == delim && !in_quotes) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  out.push_back(trim(field));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec == std::errc() && ptr == end) return true;
  // from_chars does not accept leading '+' or forms like ".5"; fall back.
  char* endp = nullptr;
  out = std::strtod(s.c_str(), &endp);
  return endp == s.c_str() + s.size() && endp != s.c_str();
}

bool is_constant(const Vector& v) {
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  return hi - lo <= 1e-12 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
}

}  // namespace

IngestReport ingest(const std::string& path, const std::string& response,
                    const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw EmptyData("file is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line, options.delimiter);
  const std::size_t ncol = header.size();

  auto is_missing = [&](const std::string& s) {
    return std::find(options.na_markers.begin(), options.na_markers.end(), s) !=
           options.na_markers.end();
  };

  // Pass 1: read all cells, drop rows with missing values.
  std::vector<std::vector<std::string>> rows;
  int dropped_missing = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line, options.delimiter);
    if (cells.size() != ncol) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(ncol) + " fields, got " +
                       std::to_string(cells.size()));
    }
    if (std::any_of(cells.begin(), cells.end(), is_missing)) {
      ++dropped_missing;
      continue;
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw EmptyData("no usable data rows in " + path);
  const std::size_t n = rows.size();

  int response_col = -1;
  for (std::size_t j = 0; j < ncol; ++j) {
    if (header[j] == response) response_col = static_cast<int>(j);
  }
  if (response_col < 0) {
    throw UnknownResponse("response column '" + response + "' not in header");
  }

  // Pass 2: type inference per column.
  std::vector<bool> numeric(ncol, true);
  for (std::size_t j = 0; j < ncol; ++j) {
    double tmp;
    for (std::size_t i = 0; i < n && numeric[j]; ++i) {
      if (!parse_double(rows[i][j], tmp)) numeric[j] = false;
    }
  }
  if (!numeric[static_cast<std::size_t>(response_col)]) {
    throw ParseError("response column '" + response + "' is not numeric");
  }

  IngestReport rep;
  rep.rows_dropped_missing = dropped_missing;
  if (dropped_missing > 0) {
    rep.notes.push_back("dropped " + std::to_string(dropped_missing) +
                        " row(s) with missing values");
  }

  // Pass 3: build columns; categoricals expand to dummies (first level
  // dropped, levels in sorted order for determinism).
  std::vector<Vector> cols;
  std::vector<std::string> names;
  Vector y(n);
  for (std::size_t j = 0; j < ncol; ++j) {
    if (static_cast<int>(j) == response_col) {
      for (std::size_t i = 0; i < n; ++i) parse_double(rows[i][j], y[i]);
      continue;
    }
    if (numeric[j]) {
      Vector col(n);
      for (std::size_t i = 0; i < n; ++i) parse_double(rows[i][j], col[i]);
      if (is_constant(col)) {
        rep.dropped_constant.push_back(header[j]);
        continue;
      }
      cols.push_back(std::move(col));
      names.push_back(header[j]);
    } else {
      std::set<std::string> levels;
      for (std::size_t i = 0; i < n; ++i) levels.insert(rows[i][j]);
      if (levels.size() < 2) {
        rep.dropped_constant.push_back(header[j]);
        continue;
      }
      bool first = true;
      for (const std::string& lev : levels) {
        if (first) {  // reference level
          first = false;
          continue;
        }
        Vector col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = rows[i][j] == lev ? 1.0 : 0.0;
        cols.push_back(std::move(col));
        names.push_back(header[j] + "=" + lev);
      }
    }
  }
  for (const std::string& nm : rep.dropped_constant) {
    rep.notes.push_back("dropped constant column '" + nm + "'");
  }
  if (cols.empty()) throw EmptyData("no usable covariate columns in " + path);

  rep.data.X.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    rep.data.X.col(static_cast<Eigen::Index>(j)) = cols[j];
  }
  rep.data.y = std::move(y);
  rep.data.names = std::move(names);
  rep.data.response_name = response;
  return rep;
}

StandardizeMode standardize_mode_from_string(const std::string& s) {
  if (s == "classical") return StandardizeMode::classical;
  if (s == "robust") return StandardizeMode::robust;
  throw ConfigError("unknown standardization mode: " + s);
}

namespace {

// Returns {center, scale} or scale=0 when the column has no spread.
std::pair<double, double> column_location_scale(const Vector& v,
                                                StandardizeMode mode) {
  if (mode == StandardizeMode::classical) {
    const double mean = v.mean();
    const double n = static_cast<double>(v.size());
    const double sd = std::sqrt((v.array() - mean).square().sum() /
                                std::max(n - 1.0, 1.0));
    return {mean, sd};
  }
  const double med = median(v);
  double s = 0.0;
  try {
    s = robust_scale(v);
  } catch (const ZeroScale&) {
    s = 0.0;
  }
  return {med, s};
}

}  // namespace

StandardizedData standardize(const Dataset& data, StandardizeMode mode) {
  StandardizedData out;
  out.transform.mode = mode;

  const auto [yc, ys] = column_location_scale(data.y, mode);
  if (ys <= 0.0) throw ZeroScale("standardize: response has no spread");
  out.transform.y_center = yc;
  out.transform.y_scale = ys;

  std::vector<Vector> cols;
  for (int j = 0; j < data.p(); ++j) {
    const auto [c, s] = column_location_scale(data.X.col(j), mode);
    if (s <= 0.0) {
      out.dropped_zero_scale.push_back(data.names.empty()
                                           ? "col" + std::to_string(j)
                                           : data.names[j]);
      continue;
    }
    out.transform.kept.push_back(j);
    out.transform.center.push_back(c);
    out.transform.scale.push_back(s);
    cols.push_back((data.X.col(j).array() - c) / s);
    out.data.names.push_back(data.names.empty() ? "col" + std::to_string(j)
                                                : data.names[j]);
  }
  if (cols.empty()) throw EmptyData("standardize: all columns degenerate");

  out.data.X.resize(data.n(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.data.X.col(static_cast<Eigen::Index>(j)) = cols[j];
  }
  out.data.y = (data.y.array() - yc) / ys;
  out.data.response_name = data.response_name;
  return out;
}

Dataset apply(const Standardizer& tr, const Dataset& raw) {
  Dataset out;
  const auto q = static_cast<Eigen::Index>(tr.kept.size());
  out.X.resize(raw.n(), q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const int src = tr.kept[static_cast<std::size_t>(j)];
    out.X.col(j) = (raw.X.col(src).array() - tr.center[j]) / tr.scale[j];
    out.names.push_back(raw.names.empty() ? "col" + std::to_string(src)
                                          : raw.names[src]);
  }
  out.y = (raw.y.array() - tr.y_center) / tr.y_scale;
  out.response_name = raw.response_name;
  return out;
}

Vector raw_coefficients(const Standardizer& tr, const std::vector<int>& selected,
                        const Vector& beta_std, int p_raw) {
  Vector beta = Vector::Zero(p_raw + 1);
  double intercept_std = beta_std[0];
  for (std::size_t l = 0; l < selected.size(); ++l) {
    const int col_std = selected[l];
    const int col_raw = tr.kept[static_cast<std::size_t>(col_std)];
    const double b = beta_std[static_cast<Eigen::Index>(l) + 1];
    const double slope_raw = b * tr.y_scale / tr.scale[col_std];
    beta[col_raw + 1] = slope_raw;
    intercept_std -= b * tr.center[col_std] / tr.scale[col_std];
  }
  beta[0] = tr.y_center + tr.y_scale * intercept_std;
  return beta;
}

Dataset expand_interactions(const Dataset& data) {
  Dataset out = data;
  const auto n = data.n();
  const int p = data.p();
  std::vector<Vector> added;
  std::vector<std::string> added_names;

  auto duplicates_existing = [&](const Vector& v) {
    auto near_equal = [&](const Vector& a) {
      return (a - v).cwiseAbs().maxCoeff() <=
             1e-12 * (1.0 + v.cwiseAbs().maxCoeff());
    };
    for (int j = 0; j < p; ++j) {
      if (near_equal(data.X.col(j))) return true;
    }
    for (const Vector& a : added) {
      if (near_equal(a)) return true;
    }
    return false;
  };

  for (int a = 0; a < p; ++a) {
    for (int b = a + 1; b < p; ++b) {
      Vector prod = data.X.col(a).cwiseProduct(data.X.col(b));
      if (is_constant(prod) || duplicates_existing(prod)) continue;
      added.push_back(std::move(prod));
      added_names.push_back(data.names[a] + ":" + data.names[b]);
    }
  }

  out.X.conservativeResize(n, p + static_cast<Eigen::Index>(added.size()));
  for (std::size_t j = 0; j < added.size(); ++j) {
    out.X.col(p + static_cast<Eigen::Index>(j)) = added[j];
    out.names.push_back(added_names[j]);
  }
  return out;
}

}  // namespace vifreg
