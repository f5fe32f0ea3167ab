#include "vifreg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vifreg/dataset.hpp"
#include "vifreg/errors.hpp"

namespace vifreg {

Contamination contamination_from_string(const std::string& s) {
  if (s == "none") return Contamination::none;
  if (s == "response" || s == "response_only") return Contamination::response_only;
  if (s == "leverage" || s == "leverage_only") return Contamination::leverage_only;
  if (s == "both") return Contamination::both;
  throw ConfigError("unknown contamination scheme: " + s);
}

std::string to_string(Contamination c) {
  switch (c) {
    case Contamination::none: return "none";
    case Contamination::response_only: return "response";
    case Contamination::leverage_only: return "leverage";
    case Contamination::both: return "both";
  }
  return "?";
}

std::string to_string(Category c) {
  switch (c) {
    case Category::Correct: return "Correct";
    case Category::Extra: return "Extra";
    case Category::Missing1: return "Missing1";
    case Category::Missing2: return "Missing2";
    case Category::Missing3: return "Missing3";
    case Category::Other: return "Other";
  }
  return "?";
}

SimulationSpec parse_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  SimulationSpec spec;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string key, value;
    {
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        // Blank or comment-only line.
        bool blank = std::all_of(line.begin(), line.end(), [](unsigned char ch) {
          return std::isspace(ch);
        });
        if (blank) continue;
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": expected key=value");
      }
      auto strip = [](std::string s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
          s.erase(s.begin());
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
          s.pop_back();
        return s;
      };
      key = strip(line.substr(0, eq));
      value = strip(line.substr(eq + 1));
    }
    try {
      if (key == "n") spec.n = std::stoi(value);
      else if (key == "p") spec.p = std::stoi(value);
      else if (key == "k") spec.k = std::stoi(value);
      else if (key == "theta") spec.theta = std::stod(value);
      else if (key == "r2") spec.r2 = std::stod(value);
      else if (key == "contamination") spec.contamination = contamination_from_string(value);
      else if (key == "rate") spec.rate = std::stod(value);
      else if (key == "exact_count") spec.exact_count = value == "1" || value == "true";
      else if (key == "replications") spec.replications = std::stoi(value);
      else if (key == "seed") spec.seed = std::stoull(value);
      else throw ConfigError("config line " + std::to_string(line_no) +
                             ": unknown key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": bad value for '" + key + "'");
    }
  }
  validate(spec);
  return spec;
}

void validate(const SimulationSpec& spec) {
  if (spec.n < 10) throw ConfigError("simulation: n must be >= 10");
  if (spec.k < 1) throw ConfigError("simulation: k must be >= 1");
  if (spec.p < 3 * spec.k) throw ConfigError("simulation: need p >= 3k");
  if (spec.theta < 0.0 || spec.theta >= 1.0) throw ConfigError("simulation: theta must be in [0,1)");
  if (spec.r2 <= 0.0 || spec.r2 >= 1.0) throw ConfigError("simulation: r2 must be in (0,1)");
  if (spec.rate < 0.0 || spec.rate >= 0.5) throw ConfigError("simulation: rate must be in [0,0.5)");
  if (spec.replications < 1) throw ConfigError("simulation: replications must be >= 1");
}

double derive_sigma(int k, double theta, double r2) {
  const double var_signal = k + static_cast<double>(k) * (k - 1) * theta;
  return std::sqrt(var_signal * (1.0 - r2) / r2);
}

double implied_t(int n, int k, double theta, double sigma) {
  // Partial variance of one target given the other k-1 targets, times n,
  // over the noise variance: the squared t value of a target slope in the
  // true model fit.
  const double v = k >= 2 ? (1.0 - theta) * (1.0 + (k - 1) * theta) /
                                (1.0 + (k - 2) * theta)
                          : 1.0;
  return std::sqrt(static_cast<double>(n) * v) / sigma;
}

namespace {

// Equicorrelated standard normals via a shared factor.
void draw_targets(Rng& rng, double theta, int k, double* out) {
  const double a = std::sqrt(theta);
  const double b = std::sqrt(1.0 - theta);
  const double g = rng.normal();
  for (int j = 0; j < k; ++j) out[j] = a * g + b * rng.normal();
}

}  // namespace

GeneratedData generate(const SimulationSpec& spec, Rng& rng) {
  validate(spec);
  const int n = spec.n, p = spec.p, k = spec.k;

  GeneratedData g;
  g.sigma = derive_sigma(k, spec.theta, spec.r2);
  g.theta = spec.theta;
  g.k = k;

  // Internal (pre-permutation) layout: targets | correlated noise | rest.
  Matrix train_internal(n, p), test_internal(n, p);
  g.targets.resize(n, k);
  g.enoise.resize(n, k);
  g.eps.resize(n);
  g.test_signal = Vector::Zero(n);
  Vector y_train(n), y_test(n);

  std::vector<double> t_row(static_cast<std::size_t>(k));
  for (int half = 0; half < 2; ++half) {
    Matrix& M = half == 0 ? train_internal : test_internal;
    for (int i = 0; i < n; ++i) {
      draw_targets(rng, spec.theta, k, t_row.data());
      double signal = 0.0;
      for (int j = 0; j < k; ++j) {
        const double e = rng.normal();
        M(i, j) = t_row[static_cast<std::size_t>(j)];
        M(i, k + j) = t_row[static_cast<std::size_t>(j)] + g.lambda * e;
        signal += t_row[static_cast<std::size_t>(j)];
        if (half == 0) {
          g.targets(i, j) = t_row[static_cast<std::size_t>(j)];
          g.enoise(i, j) = e;
        }
      }
      for (int j = 2 * k; j < p; ++j) M(i, j) = rng.normal();
      const double eps = rng.normal();
      if (half == 0) {
        g.eps[i] = eps;
        y_train[i] = signal + g.sigma * eps;
      } else {
        g.test_signal[i] = signal;
        y_test[i] = signal + g.sigma * eps;
      }
    }
  }

  g.permutation = rng.permutation(p);
  g.train.X.resize(n, p);
  g.test.X.resize(n, p);
  for (int j = 0; j < p; ++j) {
    const int src = g.permutation[static_cast<std::size_t>(j)];
    g.train.X.col(j) = train_internal.col(src);
    g.test.X.col(j) = test_internal.col(src);
    if (src < k) g.true_idx.push_back(j);
    const std::string nm = src < k           ? "target" + std::to_string(src + 1)
                           : src < 2 * k     ? "cnoise" + std::to_string(src - k + 1)
                                             : "noise" + std::to_string(src - 2 * k + 1);
    g.train.names.push_back(nm);
    g.test.names.push_back(nm);
  }
  g.train.y = y_train;
  g.test.y = y_test;
  g.train.response_name = g.test.response_name = "y";
  return g;
}

Dataset contaminate(const GeneratedData& g, Contamination scheme, double rate,
                    bool exact_count, Rng& rng) {
  Dataset out = g.train;
  if (scheme == Contamination::none || rate <= 0.0) return out;

  const int n = g.train.n();
  const int k = g.k;
  std::vector<int> rows;
  if (exact_count) {
    const int count = static_cast<int>(std::llround(rate * n));
    rows = rng.sample_without_replacement(n, count);
    std::sort(rows.begin(), rows.end());
  } else {
    for (int i = 0; i < n; ++i) {
      if (rng.uniform01() < rate) rows.push_back(i);
    }
  }

  const bool hit_response = scheme == Contamination::response_only ||
                            scheme == Contamination::both;
  const bool hit_leverage = scheme == Contamination::leverage_only ||
                            scheme == Contamination::both;

  // Output positions of the internal target / correlated-noise columns.
  std::vector<int> target_pos(static_cast<std::size_t>(k), -1);
  std::vector<int> cnoise_pos(static_cast<std::size_t>(k), -1);
  for (int j = 0; j < g.train.p(); ++j) {
    const int src = g.permutation[static_cast<std::size_t>(j)];
    if (src < k) target_pos[static_cast<std::size_t>(src)] = j;
    else if (src < 2 * k) cnoise_pos[static_cast<std::size_t>(src - k)] = j;
  }

  std::vector<double> t_row(static_cast<std::size_t>(k));
  const double leverage_sd = std::sqrt(5.0);
  for (int i : rows) {
    double signal = 0.0;
    if (hit_leverage) {
      // Redraw the row's targets with variance 5 (same correlation) and
      // rebuild everything that depends on them; these are good leverage
      // points, so y follows the model at the new covariates.
      draw_targets(rng, g.theta, k, t_row.data());
      for (int j = 0; j < k; ++j) signal += t_row[static_cast<std::size_t>(j)];
    } else {
      for (int j = 0; j < k; ++j) signal += g.targets(i, j);
    }
    double eps = g.eps[i];
    if (hit_response) eps += 30.0;
    if (hit_leverage) {
      for (int j = 0; j < k; ++j) {
        const double t = leverage_sd * t_row[static_cast<std::size_t>(j)];
        out.X(i, target_pos[static_cast<std::size_t>(j)]) = t;
        out.X(i, cnoise_pos[static_cast<std::size_t>(j)]) =
            t + g.lambda * g.enoise(i, j);
      }
      signal *= leverage_sd;
      out.y[i] = signal + g.sigma * eps;
    } else {
      out.y[i] = signal + g.sigma * eps;
    }
  }
  return out;
}

Category classify(std::vector<int> selected, std::vector<int> true_set) {
  std::sort(selected.begin(), selected.end());
  std::sort(true_set.begin(), true_set.end());
  if (selected == true_set) return Category::Correct;
  if (selected.size() > true_set.size() &&
      std::includes(selected.begin(), selected.end(), true_set.begin(),
                    true_set.end())) {
    return Category::Extra;
  }
  if (selected.size() < true_set.size() &&
      std::includes(true_set.begin(), true_set.end(), selected.begin(),
                    selected.end())) {
    const std::size_t missing = true_set.size() - selected.size();
    if (missing == 1) return Category::Missing1;
    if (missing == 2) return Category::Missing2;
    if (missing == 3) return Category::Missing3;
  }
  return Category::Other;
}

double mfdr(double avg_false, double avg_true, double eta) {
  if (eta <= 0.0) throw ConfigError("mfdr: eta must be positive");
  const double denom = avg_false + avg_true + eta;
  return denom > 0.0 ? avg_false / denom : 0.0;
}

double oos_mse(const Dataset& test, const Vector& beta_raw) {
  if (beta_raw.size() != test.p() + 1) {
    throw DimensionMismatch("oos_mse: coefficient length must be p+1");
  }
  const Vector pred = (test.X * beta_raw.tail(test.p())).array() + beta_raw[0];
  return (test.y - pred).squaredNorm() / static_cast<double>(test.n());
}

ExperimentResult run_experiment(const SimulationSpec& spec,
                                const std::vector<Method>& methods,
                                const SelectionOptions& base) {
  validate(spec);
  ExperimentResult result;
  result.spec = spec;
  result.sigma = derive_sigma(spec.k, spec.theta, spec.r2);
  result.theoretical_t = implied_t(spec.n, spec.k, spec.theta, result.sigma);

  result.methods.resize(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    result.methods[m].method = methods[m];
  }
  std::vector<std::array<int, 6>> counts(methods.size(), std::array<int, 6>{});
  std::vector<double> sum_false(methods.size(), 0.0);
  std::vector<double> sum_true(methods.size(), 0.0);
  std::vector<double> sum_time(methods.size(), 0.0);
  std::vector<double> oracle_mse;

  for (int rep = 0; rep < spec.replications; ++rep) {
    const std::uint64_t rep_seed = derive_seed(spec.seed, static_cast<std::uint64_t>(rep));
    Rng gen_rng(derive_seed(rep_seed, 0));
    GeneratedData g = generate(spec, gen_rng);
    Rng contam_rng(derive_seed(rep_seed, 1));
    Dataset train = contaminate(g, spec.contamination, spec.rate,
                                spec.exact_count, contam_rng);

    // The oracle floor: true coefficients (all ones on targets) on the test set.
    Vector beta_true = Vector::Zero(g.test.p() + 1);
    for (int j : g.true_idx) beta_true[j + 1] = 1.0;
    oracle_mse.push_back(oos_mse(g.test, beta_true));

    StandardizedData std_train = standardize(train, StandardizeMode::classical);

    for (std::size_t m = 0; m < methods.size(); ++m) {
      SelectionOptions opt = base;
      opt.method = methods[m];
      opt.seed = derive_seed(rep_seed, 2 + static_cast<std::uint64_t>(m));
      const SelectionResult sel = run_selection(std_train.data.X,
                                                std_train.data.y, opt);

      // Map selected standardized columns back to raw positions.
      std::vector<int> selected_raw;
      for (int s : sel.selected) {
        selected_raw.push_back(std_train.transform.kept[static_cast<std::size_t>(s)]);
      }
      const Category cat = classify(selected_raw, g.true_idx);
      counts[m][static_cast<std::size_t>(cat)] += 1;

      int false_sel = 0;
      for (int s : selected_raw) {
        if (std::find(g.true_idx.begin(), g.true_idx.end(), s) == g.true_idx.end())
          ++false_sel;
      }
      sum_false[m] += false_sel;
      sum_true[m] += static_cast<double>(selected_raw.size() - false_sel);
      sum_time[m] += sel.wall_seconds;

      const Vector beta_raw = raw_coefficients(std_train.transform, sel.selected,
                                               sel.beta, train.p());
      result.methods[m].mse.push_back(oos_mse(g.test, beta_raw));
    }
  }

  auto median_of = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lo + hi);
  };

  const double reps = spec.replications;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodSummary& s = result.methods[m];
    for (std::size_t c = 0; c < 6; ++c) {
      s.category_pct[c] = 100.0 * counts[m][c] / reps;
    }
    s.avg_false = sum_false[m] / reps;
    s.avg_true = sum_true[m] / reps;
    s.mfdr = mfdr(s.avg_false, s.avg_true);
    s.median_mse = median_of(s.mse);
    s.mean_seconds = sum_time[m] / reps;
  }
  result.true_beta_median_mse = median_of(oracle_mse);
  return result;
}

}  // namespace vifreg
