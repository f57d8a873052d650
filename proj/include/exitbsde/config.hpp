#pragma once

#include "exitbsde/serialize.hpp"

namespace exitbsde {

/// Strict, versioned configuration documents. Unknown keys are errors.
json load_config(const std::string& path);

/// Throws ConfigError naming the first unknown key in `obj`.
void require_keys(const json& obj, const std::vector<std::string>& allowed,
                  const std::string& context);

Domain domain_from_json(const json& doc);
json domain_to_json(const Domain& domain);

/// {"name": "P1".."P4"} or {"manufactured": {...}} with polynomial
/// coefficient tables.
ProblemPtr problem_from_json(const json& doc);

/// Candidate description: exact | zero | polynomial | net | perturbed | file.
CandidatePtr candidate_from_config(const json& doc, const ProblemPtr& problem);

PathWeight weight_from_json(const json& doc);
json weight_to_json(const PathWeight& w);

}  // namespace exitbsde
