#pragma once

#include <string>
#include <vector>

#include "vifreg/cv.hpp"
#include "vifreg/selection.hpp"
#include "vifreg/simulate.hpp"

namespace vifreg {

// Every render_* function returns a human-readable block followed by a
// fenced machine-readable JSON block, so one report file serves both people
// and scripts.

std::string render_selection_report(const SelectionResult& result,
                                    const std::vector<std::string>& names,
                                    const std::string& method_label);

std::string render_cv_report(const CvReport& report, const std::string& metric_label);

std::string render_experiment_report(const ExperimentResult& result);

std::string render_stability_report(const StabilityReport& report,
                                    const std::string& method_label);

// One row per scanned candidate with the statistic, p-value, level, decision
// and wealth after the step.
void write_trace_csv(const std::string& path,
                     const std::vector<CandidateResult>& trace,
                     const std::vector<std::string>& names);

// Writes to the path, or to stdout when path is empty.
void emit(const std::string& path, const std::string& content);

}  // namespace vifreg
