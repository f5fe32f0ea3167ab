// vifreg: streamwise variable selection with a robust or classical VIF
// statistic, plus a synthetic replication study, k-fold cross-validation and
// an ordering-stability diagnostic.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vifreg/cv.hpp"
#include "vifreg/dataset.hpp"
#include "vifreg/errors.hpp"
#include "vifreg/report.hpp"
#include "vifreg/selection.hpp"
#include "vifreg/simulate.hpp"

namespace {

using namespace vifreg;

struct CommonArgs {
  std::string data_path;
  std::string response;
  std::string method = "robust";
  bool interactions = false;
  std::uint64_t seed = 1;
  int subsample_m = 200;
  double w0 = 0.50;
  double dw = 0.05;
  double c_tukey = 4.685;
  double c_huber = 1.345;
  std::string standardize_mode = "classical";
  std::string output;
  std::string delimiter = ",";
  std::string trace_path;
};

void add_selection_flags(CLI::App* cmd, CommonArgs& a, bool needs_data) {
  if (needs_data) {
    cmd->add_option("--data", a.data_path, "input delimited text file")
        ->required();
    cmd->add_option("--response", a.response, "response column name")
        ->required();
    cmd->add_flag("--interactions", a.interactions,
                  "append pairwise interaction columns");
    cmd->add_option("--standardize", a.standardize_mode,
                    "standardization: classical (mean/sd) or robust (median/MAD)")
        ->check(CLI::IsMember({"classical", "robust"}));
    cmd->add_option("--delimiter", a.delimiter,
                    "field delimiter: ',', ';', or 'tab'");
  }
  cmd->add_option("--method", a.method, "selector: robust or classical")
      ->check(CLI::IsMember({"robust", "classical"}));
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("--subsample-m", a.subsample_m,
                  "subsample size for the collinearity factor");
  cmd->add_option("--w0", a.w0, "initial testing wealth");
  cmd->add_option("--dw", a.dw, "wealth payout per selection");
  cmd->add_option("--c-tukey", a.c_tukey, "biweight cutoff");
  cmd->add_option("--c-huber", a.c_huber, "Huber cutoff");
  cmd->add_option("--output", a.output, "report file (default: stdout)");
}

SelectionOptions to_options(const CommonArgs& a) {
  SelectionOptions opt;
  opt.method = a.method == "classical" ? Method::classical : Method::robust;
  opt.subsample_m = a.subsample_m;
  opt.seed = a.seed;
  opt.initial_wealth = a.w0;
  opt.payout = a.dw;
  opt.robustness.c_tukey = a.c_tukey;
  opt.robustness.c_huber = a.c_huber;
  return opt;
}

char parse_delimiter(const std::string& s) {
  if (s == "tab" || s == "\\t") return '\t';
  if (s.size() == 1) return s[0];
  throw ConfigError("bad delimiter: '" + s + "'");
}

// Load, optionally expand interactions, standardize; reports dropped rows and
// columns on stderr so the main report stays clean.
StandardizedData prepare(const CommonArgs& a) {
  IngestOptions io;
  io.delimiter = parse_delimiter(a.delimiter);
  IngestReport ing = ingest(a.data_path, a.response, io);
  for (const std::string& note : ing.notes) std::cerr << "note: " << note << "\n";
  Dataset d = std::move(ing.data);
  if (a.interactions) {
    const int before = d.p();
    d = expand_interactions(d);
    std::cerr << "note: interaction expansion " << before << " -> " << d.p()
              << " columns\n";
  }
  StandardizedData st = standardize(d, standardize_mode_from_string(a.standardize_mode));
  for (const std::string& nm : st.dropped_zero_scale) {
    std::cerr << "note: dropped zero-scale column '" << nm << "'\n";
  }
  return st;
}

int cmd_select(const CommonArgs& a) {
  StandardizedData st = prepare(a);
  const SelectionOptions opt = to_options(a);
  const SelectionResult res = run_selection(st.data.X, st.data.y, opt);
  emit(a.output, render_selection_report(res, st.data.names, a.method));
  if (!a.trace_path.empty()) write_trace_csv(a.trace_path, res.trace, st.data.names);
  return 0;
}

int cmd_cv(const CommonArgs& a, int folds, const std::string& metric) {
  IngestOptions io;
  io.delimiter = parse_delimiter(a.delimiter);
  IngestReport ing = ingest(a.data_path, a.response, io);
  for (const std::string& note : ing.notes) std::cerr << "note: " << note << "\n";
  Dataset d = std::move(ing.data);
  if (a.interactions) d = expand_interactions(d);

  CvSpec cv;
  cv.folds = folds;
  cv.seed = a.seed;
  cv.metric = metric == "mse" ? CvSpec::Metric::MSE : CvSpec::Metric::MAPE;
  const CvReport rep = cross_validate(
      d, a.method == "classical" ? Method::classical : Method::robust, cv,
      to_options(a), standardize_mode_from_string(a.standardize_mode));
  emit(a.output, render_cv_report(rep, metric));
  return 0;
}

int cmd_stability(const CommonArgs& a, int orders) {
  IngestOptions io;
  io.delimiter = parse_delimiter(a.delimiter);
  IngestReport ing = ingest(a.data_path, a.response, io);
  for (const std::string& note : ing.notes) std::cerr << "note: " << note << "\n";
  Dataset d = std::move(ing.data);
  if (a.interactions) d = expand_interactions(d);
  const StabilityReport rep = order_stability(
      d, a.method == "classical" ? Method::classical : Method::robust, orders,
      a.seed, to_options(a), standardize_mode_from_string(a.standardize_mode));
  emit(a.output, render_stability_report(rep, a.method));
  return 0;
}

int cmd_simulate(const CommonArgs& a, const std::string& config_path,
                 SimulationSpec spec, const std::string& methods_arg) {
  if (!config_path.empty()) {
    // The config file fully defines the experiment; direct flags are ignored.
    spec = parse_sim_config(config_path);
  } else {
    spec.seed = a.seed;
  }
  std::vector<Method> methods;
  if (methods_arg == "robust") {
    methods = {Method::robust};
  } else if (methods_arg == "classical") {
    methods = {Method::classical};
  } else {
    methods = {Method::robust, Method::classical};
  }
  const ExperimentResult res = run_experiment(spec, methods, to_options(a));
  emit(a.output, render_experiment_report(res));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streamwise regression with a robust VIF statistic"};
  app.require_subcommand(1);

  CommonArgs a;

  auto* sel = app.add_subcommand("select", "run one streamwise selection pass");
  add_selection_flags(sel, a, true);
  sel->add_option("--trace", a.trace_path, "write per-candidate trace CSV");

  int folds = 10;
  std::string metric = "mape";
  auto* cv = app.add_subcommand("cv", "k-fold cross-validated evaluation");
  add_selection_flags(cv, a, true);
  cv->add_option("--folds", folds, "number of folds")->check(CLI::Range(2, 1000));
  cv->add_option("--metric", metric, "prediction metric")
      ->check(CLI::IsMember({"mape", "mse"}));

  int orders = 100;
  auto* stab = app.add_subcommand("stability", "selection under random column orders");
  add_selection_flags(stab, a, true);
  stab->add_option("--orders", orders, "number of random orders");

  std::string config_path;
  std::string methods_arg = "both";
  SimulationSpec spec;
  auto* sim = app.add_subcommand("simulate", "replicated synthetic study");
  add_selection_flags(sim, a, false);
  sim->add_option("--config", config_path, "key=value experiment config file");
  sim->add_option("--n", spec.n, "training rows");
  sim->add_option("--p", spec.p, "number of candidate covariates");
  sim->add_option("--k", spec.k, "number of target covariates");
  sim->add_option("--theta", spec.theta, "target intercorrelation");
  sim->add_option("--r2", spec.r2, "theoretical R^2");
  std::string contam = "none";
  sim->add_option("--contamination", contam,
                  "none, response, leverage, or both")
      ->check(CLI::IsMember({"none", "response", "leverage", "both"}));
  sim->add_option("--rate", spec.rate, "contamination rate");
  sim->add_option("--replications", spec.replications, "number of replications");
  sim->add_flag("--exact-count", spec.exact_count,
                "contaminate exactly round(rate*n) rows instead of Bernoulli");
  sim->add_option("--methods", methods_arg, "robust, classical, or both")
      ->check(CLI::IsMember({"robust", "classical", "both"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (sel->parsed()) return cmd_select(a);
    if (cv->parsed()) return cmd_cv(a, folds, metric);
    if (stab->parsed()) return cmd_stability(a, orders);
    if (sim->parsed()) {
      spec.contamination = contamination_from_string(contam);
      return cmd_simulate(a, config_path, spec, methods_arg);
    }
  } catch (const vifreg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
