#pragma once

#include <string>
#include <vector>

#include "bdfoa/report.hpp"

namespace bdfoa {

/// Exit codes: 0 = success, 1 = error, 2 = negative analysis verdict
/// (no certificate, no critical direction, equivalence refuted).
struct RunResult {
  int exit_code = 0;
  ReportDocument report;
};

/// Library entry point behind the `bdfoa` executable. `args` excludes the
/// program name.
RunResult run(const std::vector<std::string>& args);

/// main()-style wrapper: parses argv, prints the report (or --json file),
/// returns the exit code.
int run_cli(int argc, char** argv);

/// The certify pipeline: snap the point onto the stationary set, find
/// admissible directions, search critical directions (a 21-point scan when
/// no direction is given), check CQs, and certify.
struct CertifyOutcome {
  bool certified = false;
  bool critical_direction_found = false;
  KktCertificate certificate;
  std::string reason;       // set when not certified
  EvalPoint analyzed_point; // after snapping
  DirectionCone admissible;
};

CertifyOutcome certify_pipeline(const BilevelProblem& prob, const EvalPoint& point,
                                const std::vector<Vec>& user_directions, bool assume_cq,
                                const GridSpec& grid = {});

/// Reproduction pipelines for the built-in case studies; writes data files
/// under `out_dir` and returns the assembled report body.
Json reproduce(const std::string& name, const std::string& out_dir);

}  // namespace bdfoa
