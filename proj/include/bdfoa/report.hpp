#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bdfoa/kkt.hpp"
#include "bdfoa/lower.hpp"
#include "bdfoa/regularity.hpp"
#include "bdfoa/verify.hpp"

namespace bdfoa {

using Json = nlohmann::json;

// JSON views of the analysis records (external interfaces).
Json to_json(const Vec& v);
Json to_json(const PolyConeRep& c);
Json to_json(const ConeUnion& u);
Json to_json(const EvalPoint& p);
Json to_json(const CqEvidence& ev);
Json to_json(const KktCertificate& cert);
Json to_json(const ConditionReport& r);
Json to_json(const LocalizationReport& r);
Json to_json(const DirectionCone& c);
Json to_json(const InfCompactnessEvidence& ev);
Json to_json(const InnerSemicontEmpirical& r);
Json to_json(const SolutionSample& s);
Json to_json(const StationarySample& s);
Json to_json(const LocalizationTrack& t);
Json to_json(const EquivalenceReport& r);
Json to_json(const FoaFailureReport& r);
Json to_json(const LocalMinReport& r);

/// Top-level machine-readable document for one CLI invocation.
struct ReportDocument {
  std::vector<std::string> command;
  std::string version = "0.1.0";
  Json body = Json::object();
  Json summary = Json::object();
};

Json to_json(const ReportDocument& doc);
ReportDocument report_from_json(const Json& j);

/// Deterministic serialization: sorted keys, every float printed with
/// "%.12g", two-space indentation, trailing newline.
std::string dump_stable(const Json& j);

void emit_json(const Json& j, const std::string& path);

/// CSV with a header row; numbers printed with "%.12g".
void emit_csv(const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& rows, const std::string& path);

}  // namespace bdfoa
