#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vifreg/rng.hpp"
#include "vifreg/selection.hpp"
#include "vifreg/types.hpp"

namespace vifreg {

enum class Contamination { none, response_only, leverage_only, both };

Contamination contamination_from_string(const std::string& s);
std::string to_string(Contamination c);

// Synthetic-study configuration. The p columns decompose into k equicorrelated
// targets, k noise covariates correlated with them, and p - 2k independent
// noise covariates; y is the sum of the targets plus sigma * noise, with
// sigma chosen to hit the requested theoretical R^2.
struct SimulationSpec {
  int n = 1000;
  int p = 100;
  int k = 5;
  double theta = 0.85;       // target intercorrelation
  double r2 = 0.80;          // theoretical coefficient of determination
  Contamination contamination = Contamination::none;
  double rate = 0.05;        // contamination rate
  bool exact_count = false;  // fixed floor(rate*n) rows instead of Bernoulli
  int replications = 200;
  std::uint64_t seed = 1;
};

// Reads key=value lines ('#' comments); unknown keys raise ConfigError.
SimulationSpec parse_sim_config(const std::string& path);

// Throws ConfigError when a field is out of range (e.g. p < 3k).
void validate(const SimulationSpec& spec);

// sigma such that R^2 = Var(signal) / (Var(signal) + sigma^2) with
// Var(signal) = k + k(k-1)theta.
double derive_sigma(int k, double theta, double r2);

// Theoretical per-target t value implied by (n, k, theta, sigma); reported
// for cross-checking the study design.
double implied_t(int n, int k, double theta, double sigma);

// One synthetic draw: clean train and test halves plus everything needed to
// contaminate the train half afterwards.
struct GeneratedData {
  Dataset train;
  Dataset test;                    // always clean
  std::vector<int> true_idx;       // target positions after permutation
  std::vector<int> permutation;    // output column j is internal column perm[j]
  Matrix targets;                  // n x k clean train targets
  Matrix enoise;                   // n x k innovations of the correlated noise
  Vector eps;                      // train noise (pre-scaling by sigma)
  Vector test_signal;              // sum of test targets per row
  double sigma = 1.0;
  double lambda = 3.18;            // corr(target, its noise twin) = 0.3
  double theta = 0.0;              // target intercorrelation used to draw
  int k = 0;
};

GeneratedData generate(const SimulationSpec& spec, Rng& rng);

// Applies the contamination scheme to a Bernoulli(rate) subset of train rows
// (or an exact count when requested) and returns the new train set:
//   response: the noise of the affected rows shifts to mean 30;
//   leverage: their targets are redrawn with variance 5 (same correlation),
//             the correlated noise and y are rebuilt from the new targets so
//             the leverage rows still follow the model.
Dataset contaminate(const GeneratedData& g, Contamination scheme, double rate,
                    bool exact_count, Rng& rng);

enum class Category { Correct, Extra, Missing1, Missing2, Missing3, Other };
std::string to_string(Category c);

// Compares a selected index set against the true target set.
Category classify(std::vector<int> selected, std::vector<int> true_set);

// Marginal false discovery rate estimate: EV / (EV + ES + eta).
double mfdr(double avg_false, double avg_true, double eta = 10.0);

// Mean squared prediction error of raw-scale coefficients (intercept first,
// zeros for unselected columns) on the test half.
double oos_mse(const Dataset& test, const Vector& beta_raw);

struct MethodSummary {
  Method method = Method::robust;
  std::array<double, 6> category_pct{};  // indexed by Category
  double avg_false = 0.0;
  double avg_true = 0.0;
  double mfdr = 0.0;
  double median_mse = 0.0;
  double mean_seconds = 0.0;
  std::vector<double> mse;  // one per replication
};

struct ExperimentResult {
  SimulationSpec spec;
  double sigma = 0.0;
  double theoretical_t = 0.0;
  double true_beta_median_mse = 0.0;  // oracle floor on the same test sets
  std::vector<MethodSummary> methods;
};

// Runs the replicated study for each method over independently seeded
// replications and aggregates the category table, mFDR and MSE distribution.
ExperimentResult run_experiment(const SimulationSpec& spec,
                                const std::vector<Method>& methods,
                                const SelectionOptions& base);

}  // namespace vifreg
