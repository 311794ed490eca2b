#pragma once

#include <string>
#include <vector>

#include "carving/chain.hpp"
#include "carving/multi.hpp"
#include "carving/sim.hpp"

namespace carving {

// InferenceReport JSON, schema "carving-report/v1". Variable ids are 1-based
// in all serialized output; infinities are the strings "inf"/"-inf".
std::string report_to_json(const InferenceReport& rep, const MulticarveConfig& cfg);

// Flat CSV: variable,aggregated_p,reject,ci_lower,ci_upper,selected_count.
std::string report_to_csv(const InferenceReport& rep);

// Long-format metrics CSV:
// design,family,B,f,gamma_mode,view,metric,value,mc_se,runs.
std::string metrics_to_csv(const MetricsTable& table);
std::string metrics_to_json(const MetricsTable& table);

// Run archive (one JSON object per line) for `simulate --replay`.
std::string records_to_jsonl(const std::vector<std::vector<RunMethodResult>>& records);
std::vector<std::vector<RunMethodResult>> records_from_jsonl(const std::string& text);

// Chain dump: plain CSV of whitened samples plus a diagnostics JSON record.
void dump_chain(const std::string& path_prefix, const Matrix& samples,
                const ChainDiagnostics& diag);

}  // namespace carving
