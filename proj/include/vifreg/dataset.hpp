#pragma once

#include <string>
#include <vector>

#include "vifreg/types.hpp"

namespace vifreg {

struct IngestOptions {
  char delimiter = ',';
  std::vector<std::string> na_markers = {"", "NA", "NaN", "nan", "?"};
};

struct IngestReport {
  Dataset data;
  int rows_dropped_missing = 0;
  std::vector<std::string> dropped_constant;  // column names removed
  std::vector<std::string> notes;             // human-readable warnings
};

// Loads a delimited text file with a header row. Columns whose non-missing
// values all parse as numbers are numeric; the rest are treated as
// categorical and expanded into one 0/1 dummy per level beyond the first
// (levels in sorted order). Rows containing a missing value are dropped and
// counted; constant columns are dropped with a warning.
IngestReport ingest(const std::string& path, const std::string& response,
                    const IngestOptions& options = {});

enum class StandardizeMode { classical, robust };

StandardizeMode standardize_mode_from_string(const std::string& s);

// Recorded affine transform so predictions can be mapped back to the raw
// response scale. `kept` maps standardized column position -> input column.
struct Standardizer {
  StandardizeMode mode = StandardizeMode::classical;
  std::vector<int> kept;
  std::vector<double> center;
  std::vector<double> scale;
  double y_center = 0.0;
  double y_scale = 1.0;
};

struct StandardizedData {
  Dataset data;
  Standardizer transform;
  std::vector<std::string> dropped_zero_scale;
};

// classical: (x - mean) / sd (sample sd, n-1 denominator);
// robust:    (x - median) / MAD, with the mean-absolute-deviation fallback
//            for columns whose MAD is zero (e.g. unbalanced dummies).
// Columns with no spread at all are dropped with a warning. The response is
// transformed the same way and the transform recorded.
StandardizedData standardize(const Dataset& data, StandardizeMode mode);

// Applies a recorded transform to new rows of the same raw layout (used for
// held-out folds so train and test share the same coordinates).
Dataset apply(const Standardizer& tr, const Dataset& raw);

inline double back_transform_prediction(const Standardizer& tr, double yhat) {
  return tr.y_center + tr.y_scale * yhat;
}

// Maps a standardized-scale fit (intercept first, then coefficients of the
// `selected` standardized columns) to raw-scale coefficients over the
// original p_raw columns: intercept first, zeros for unselected columns.
Vector raw_coefficients(const Standardizer& tr, const std::vector<int>& selected,
                        const Vector& beta_std, int p_raw);

// Appends all pairwise products of distinct first-order columns (names
// "a:b"), dropping products that are constant or duplicate an existing
// column. Operates on the raw scale; standardize afterwards.
Dataset expand_interactions(const Dataset& data);

}  // namespace vifreg
