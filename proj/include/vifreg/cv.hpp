#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vifreg/dataset.hpp"
#include "vifreg/selection.hpp"
#include "vifreg/types.hpp"

namespace vifreg {

struct CvSpec {
  enum class Metric { MAPE, MSE };
  int folds = 10;
  std::uint64_t seed = 1;
  Metric metric = Metric::MAPE;
};

// Deterministic fold labels in [0, folds): a seeded permutation dealt
// round-robin, so fold sizes differ by at most one. Depends only on
// (n, folds, seed) — methods compared on the same split by construction.
std::vector<int> fold_assignment(int n, int folds, std::uint64_t seed);

struct CvReport {
  Method method = Method::robust;
  std::vector<double> fold_metric;  // raw response scale, one per fold
  double mean_metric = 0.0;
  double median_metric = 0.0;
  // Fit on the full data for reporting: selected names, coefficients,
  // t-values (standardized scale).
  SelectionResult full_fit;
  std::vector<std::string> selected_names;
  double wall_seconds = 0.0;
};

// Per fold: standardize the training part, run the selector, refit, predict
// the held-out part and score on the raw response scale (MAPE = median
// absolute prediction error).
CvReport cross_validate(const Dataset& raw, Method method, const CvSpec& cv,
                        const SelectionOptions& opt, StandardizeMode mode);

struct StabilityReport {
  int n_orders = 0;
  std::map<int, int> size_histogram;        // model size -> count
  std::map<std::string, int> selection_frequency;  // column name -> count
};

// Re-runs selection under seeded random column orders and tallies how often
// each column is picked and how large the models are.
StabilityReport order_stability(const Dataset& raw, Method method, int n_orders,
                                std::uint64_t seed, const SelectionOptions& opt,
                                StandardizeMode mode);

}  // namespace vifreg
