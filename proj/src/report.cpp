#include "vifreg/report.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "vifreg/errors.hpp"

namespace vifreg {

namespace {

using nlohmann::json;

std::string method_name(Method m) {
  return m == Method::robust ? "robust" : "classical";
}

std::string fixed(double v, int prec) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

std::string json_block(const json& j) {
  return "```json\n" + j.dump(2) + "\n```\n";
}

json selection_json(const SelectionResult& r,
                    const std::vector<std::string>& names,
                    const std::string& method_label) {
  json sel = json::array();
  for (std::size_t l = 0; l < r.selected.size(); ++l) {
    const int idx = r.selected[l];
    sel.push_back({
        {"index", idx},
        {"name", idx < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(idx)]
                                                      : "col" + std::to_string(idx)},
        {"coefficient", r.beta[static_cast<Eigen::Index>(l) + 1]},
        {"t_value", r.t_values[static_cast<Eigen::Index>(l) + 1]},
    });
  }
  int degenerate = 0;
  for (const auto& c : r.trace) degenerate += c.degenerate ? 1 : 0;
  return json{{"method", method_label},
              {"intercept", r.beta[0]},
              {"selected", sel},
              {"n_candidates", r.trace.size()},
              {"n_selected", r.selected.size()},
              {"n_degenerate", degenerate},
              {"sigma", r.sigma},
              {"final_wealth", r.trace.empty() ? 0.0 : r.trace.back().wealth_after},
              {"wall_seconds", r.wall_seconds}};
}

void selection_table(std::ostringstream& os, const SelectionResult& r,
                     const std::vector<std::string>& names,
                     const std::string& method_label) {
  os << "Streamwise selection (" << method_label << ")\n";
  os << "  candidates scanned : " << r.trace.size() << "\n";
  os << "  selected           : " << r.selected.size() << "\n";
  os << "  residual scale     : " << fixed(r.sigma, 6) << "\n";
  os << "  wall time [s]      : " << fixed(r.wall_seconds, 3) << "\n\n";
  os << "  " << std::left;
  os << "variable                         coefficient      t-value\n";
  os << "  ---------------------------------------------------------\n";
  auto row = [&os](const std::string& nm, double coef, double t) {
    std::ostringstream line;
    line << "  " << nm;
    while (line.str().size() < 33) line << ' ';
    line << fixed(coef, 6);
    while (line.str().size() < 50) line << ' ';
    line << fixed(t, 2);
    os << line.str() << "\n";
  };
  row("(intercept)", r.beta[0], r.t_values[0]);
  for (std::size_t l = 0; l < r.selected.size(); ++l) {
    const int idx = r.selected[l];
    const std::string nm = idx < static_cast<int>(names.size())
                               ? names[static_cast<std::size_t>(idx)]
                               : "col" + std::to_string(idx);
    row(nm, r.beta[static_cast<Eigen::Index>(l) + 1],
        r.t_values[static_cast<Eigen::Index>(l) + 1]);
  }
}

}  // namespace

std::string render_selection_report(const SelectionResult& r,
                                    const std::vector<std::string>& names,
                                    const std::string& method_label) {
  std::ostringstream os;
  selection_table(os, r, names, method_label);
  os << "\n" << json_block(selection_json(r, names, method_label));
  return os.str();
}

std::string render_cv_report(const CvReport& rep, const std::string& metric_label) {
  std::ostringstream os;
  os << "Cross-validation (" << method_name(rep.method) << ", "
     << rep.fold_metric.size() << " folds, metric " << metric_label << ")\n";
  os << "  per-fold " << metric_label << " :";
  for (double v : rep.fold_metric) os << " " << fixed(v, 4);
  os << "\n";
  os << "  mean   : " << fixed(rep.mean_metric, 6) << "\n";
  os << "  median : " << fixed(rep.median_metric, 6) << "\n\n";
  // Rebuild a sparse name table matching the full-fit column indices.
  std::vector<std::string> names;
  for (std::size_t l = 0; l < rep.full_fit.selected.size(); ++l) {
    const auto idx = static_cast<std::size_t>(rep.full_fit.selected[l]);
    if (names.size() <= idx) names.resize(idx + 1);
    if (l < rep.selected_names.size()) names[idx] = rep.selected_names[l];
  }
  os << "Full-data fit:\n";
  selection_table(os, rep.full_fit, names, method_name(rep.method));
  json j{{"method", method_name(rep.method)},
         {"metric", metric_label},
         {"fold_values", rep.fold_metric},
         {"mean", rep.mean_metric},
         {"median", rep.median_metric},
         {"selected", rep.selected_names},
         {"full_fit", selection_json(rep.full_fit, names, method_name(rep.method))},
         {"wall_seconds", rep.wall_seconds}};
  os << "\n" << json_block(j);
  return os.str();
}

std::string render_experiment_report(const ExperimentResult& r) {
  std::ostringstream os;
  os << "Synthetic study: n=" << r.spec.n << " p=" << r.spec.p
     << " k=" << r.spec.k << " theta=" << fixed(r.spec.theta, 2)
     << " R2=" << fixed(r.spec.r2, 2)
     << " contamination=" << to_string(r.spec.contamination)
     << " rate=" << fixed(r.spec.rate, 2)
     << " replications=" << r.spec.replications << "\n";
  os << "  sigma=" << fixed(r.sigma, 4)
     << "  implied target t=" << fixed(r.theoretical_t, 2)
     << "  oracle median MSE=" << fixed(r.true_beta_median_mse, 4) << "\n\n";
  os << "  method      %Correct  %Extra  %Miss1  %Miss2  %Miss3  %Other  "
        "mFDR%%  medMSE    time[s]\n";
  os << "  --------------------------------------------------------------"
        "---------------------\n";
  json rows = json::array();
  for (const MethodSummary& s : r.methods) {
    std::ostringstream line;
    line << "  " << method_name(s.method);
    while (line.str().size() < 14) line << ' ';
    for (double c : s.category_pct) {
      std::string cell = fixed(c, 1);
      while (cell.size() < 8) cell = " " + cell;
      line << cell;
    }
    std::string mf = fixed(100.0 * s.mfdr, 1);
    while (mf.size() < 7) mf = " " + mf;
    line << mf;
    std::string mm = fixed(s.median_mse, 3);
    while (mm.size() < 9) mm = " " + mm;
    line << mm;
    std::string tm = fixed(s.mean_seconds, 4);
    while (tm.size() < 10) tm = " " + tm;
    line << tm;
    os << line.str() << "\n";
    rows.push_back({{"method", method_name(s.method)},
                    {"pct_correct", s.category_pct[0]},
                    {"pct_extra", s.category_pct[1]},
                    {"pct_missing1", s.category_pct[2]},
                    {"pct_missing2", s.category_pct[3]},
                    {"pct_missing3", s.category_pct[4]},
                    {"pct_other", s.category_pct[5]},
                    {"avg_false", s.avg_false},
                    {"avg_true", s.avg_true},
                    {"mfdr", s.mfdr},
                    {"median_mse", s.median_mse},
                    {"mean_seconds", s.mean_seconds}});
  }
  os << "\n";
  json j{{"spec",
          {{"n", r.spec.n},
           {"p", r.spec.p},
           {"k", r.spec.k},
           {"theta", r.spec.theta},
           {"r2", r.spec.r2},
           {"contamination", to_string(r.spec.contamination)},
           {"rate", r.spec.rate},
           {"replications", r.spec.replications},
           {"seed", r.spec.seed}}},
         {"sigma", r.sigma},
         {"implied_t", r.theoretical_t},
         {"oracle_median_mse", r.true_beta_median_mse},
         {"methods", rows}};
  os << json_block(j);
  return os.str();
}

std::string render_stability_report(const StabilityReport& rep,
                                    const std::string& method_label) {
  std::ostringstream os;
  os << "Ordering stability (" << method_label << ", " << rep.n_orders
     << " random orders)\n";
  os << "  model size histogram:\n";
  for (const auto& [size, count] : rep.size_histogram) {
    os << "    size " << size << " : " << count << "\n";
  }
  os << "  selection frequency (selected at least once):\n";
  for (const auto& [name, count] : rep.selection_frequency) {
    if (count > 0) os << "    " << name << " : " << count << "\n";
  }
  json freq = json::object();
  for (const auto& [name, count] : rep.selection_frequency) freq[name] = count;
  json hist = json::object();
  for (const auto& [size, count] : rep.size_histogram) {
    hist[std::to_string(size)] = count;
  }
  json j{{"method", method_label},
         {"n_orders", rep.n_orders},
         {"size_histogram", hist},
         {"selection_frequency", freq}};
  os << "\n" << json_block(j);
  return os.str();
}

void write_trace_csv(const std::string& path,
                     const std::vector<CandidateResult>& trace,
                     const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open trace file for writing: " + path);
  out << "j,name,gamma_w,sigma_hat,rho_w,t_w,p_value,alpha_j,accepted,"
         "wealth_after,degenerate\n";
  out.precision(12);
  for (const CandidateResult& c : trace) {
    const std::string nm = c.index < static_cast<int>(names.size())
                               ? names[static_cast<std::size_t>(c.index)]
                               : "col" + std::to_string(c.index);
    out << c.index << ',' << nm << ',' << c.gamma_w << ',' << c.sigma_hat << ','
        << c.rho_w << ',' << c.t_w << ',' << c.p_value << ',' << c.alpha_j
        << ',' << (c.accepted ? 1 : 0) << ',' << c.wealth_after << ','
        << (c.degenerate ? 1 : 0) << '\n';
  }
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file for writing: " + path);
  out << content;
}

}  // namespace vifreg
