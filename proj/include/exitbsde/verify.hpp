#pragma once

#include "exitbsde/serialize.hpp"

#include <iosfwd>

namespace exitbsde {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceReport {
  std::vector<CriterionResult> results;
  bool all_pass = true;
};

/// Runs the full acceptance suite, printing one pass/fail line per criterion
/// to `live` as results arrive.
AcceptanceReport run_acceptance(int threads, std::ostream& live);

json acceptance_to_json(const AcceptanceReport& rep);

}  // namespace exitbsde
