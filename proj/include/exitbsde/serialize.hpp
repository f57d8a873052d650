#pragma once

#include "exitbsde/problems.hpp"
#include "exitbsde/loss.hpp"
#include "exitbsde/rates.hpp"
#include "exitbsde/simulate.hpp"
#include "exitbsde/train.hpp"

#include <json.hpp>

#include <string>

namespace exitbsde {

using nlohmann::json;

/// Stable shortest-exact decimal for CSV cells ("%.17g" trimmed via
/// round-trip probing); identical input bits give identical text.
std::string format_double(double x);

// Candidate functions <-> versioned JSON ("candidate/v1"); polynomial and net
// round-trip, exact/perturbed resolve against the owning problem at load time.
json candidate_to_json(const CandidateFunction& u);
CandidatePtr candidate_from_json(const json& doc);

json loss_report_to_json(const LossReport& rep);
json rate_table_to_json(const RateTable& table, const std::string& quantity);
std::string rate_table_to_csv(const RateTable& table);
json exit_table_to_json(const ExitTable& table);
json validation_to_json(const ValidationReport& rep);
json wald_to_json(const WaldReport& rep);
json plateau_to_json(const PlateauTable& table);
std::string plateau_to_csv(const PlateauTable& table);
std::string history_to_csv(const std::vector<HistoryRow>& rows);
std::string per_path_to_csv(const std::vector<PerPathRecord>& recs);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace exitbsde
