#include "bdfoa/report.hpp"

#include <cmath>
#include <fstream>

namespace bdfoa {

Json to_json(const Vec& v) {
  Json arr = Json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

namespace {

Json rows_json(const std::vector<Vec>& rows) {
  Json arr = Json::array();
  for (const Vec& r : rows) arr.push_back(to_json(r));
  return arr;
}

}  // namespace

Json to_json(const PolyConeRep& c) {
  Json j;
  j["dim"] = c.dim;
  if (c.empty_marker) j["empty"] = true;
  j["generators"] = rows_json(c.generators);
  j["halfspaces"] = rows_json(c.halfspaces);
  j["equalities"] = rows_json(c.equalities);
  return j;
}

Json to_json(const ConeUnion& u) {
  Json pieces = Json::array();
  for (const auto& p : u.pieces) pieces.push_back(to_json(p));
  return Json{{"pieces", pieces}};
}

Json to_json(const EvalPoint& p) {
  return Json{{"x", to_json(p.x)}, {"y", to_json(p.y)}};
}

Json to_json(const CqEvidence& ev) {
  Json j;
  j["kind"] = cq_name(ev.kind);
  j["verdict"] = ev.verdict;
  j["pieces_examined"] = ev.pieces_examined;
  if (ev.violating) {
    j["violating_multiplier"] = to_json(*ev.violating);
    j["violation_residual"] = ev.violation_residual;
  }
  if (ev.direction) j["direction"] = to_json(*ev.direction);
  if (!ev.note.empty()) j["note"] = ev.note;
  return j;
}

Json to_json(const KktCertificate& cert) {
  Json j;
  j["point"] = to_json(cert.point);
  j["direction"] = Json{{"u", to_json(cert.u)}, {"v", to_json(cert.v)}};
  j["mu"] = to_json(cert.mu);
  j["nu"] = to_json(cert.nu);
  j["beta"] = to_json(cert.beta);
  j["active_set"] = cert.active_set;
  j["residuals"] = Json{{"stationarity", cert.stationarity_residual},
                        {"complementarity_G", cert.comp_residual_G},
                        {"complementarity_dG", cert.comp_residual_dG}};
  j["piece"] = cert.piece_index;
  j["passing_pieces"] = cert.passing_pieces;
  j["cq"] = to_json(cert.cq);
  j["tolerances"] = Json{{"stationarity", 1e-6}, {"active_set", 1e-9}};
  return j;
}

Json to_json(const ConditionReport& r) {
  Json j;
  j["verdict"] = verdict_name(r.verdict);
  j["value"] = r.value;
  if (r.worst_direction) j["worst_direction"] = to_json(*r.worst_direction);
  if (r.pointwise_only) j["pointwise_only"] = true;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

Json to_json(const LocalizationReport& r) {
  Json j;
  j["interior_nonsingular"] = to_json(r.interior_nonsingular);
  j["strong_monotonicity"] = to_json(r.strong_monotonicity);
  j["sosc"] = to_json(r.sosc);
  j["mixed_second_order"] = to_json(r.mixed_second_order);
  j["certified"] = r.certified();
  return j;
}

Json to_json(const DirectionCone& c) {
  Json j;
  j["normals"] = rows_json(c.normals);
  j["competitors"] = rows_json(c.competitors);
  j["full_space"] = c.full_space;
  j["empty"] = c.empty;
  if (c.witness_direction) {
    j["witness_direction"] = to_json(*c.witness_direction);
    j["witness_slack"] = c.witness_slack;
  }
  return j;
}

Json to_json(const InfCompactnessEvidence& ev) {
  Json j;
  j["holds"] = ev.holds;
  j["alpha"] = ev.alpha;
  j["min_margin"] = ev.min_margin;
  j["worst_x"] = to_json(ev.worst_x);
  j["note"] = ev.note;
  return j;
}

Json to_json(const InnerSemicontEmpirical& r) {
  Json j;
  j["holds"] = r.holds;
  j["final_distance"] = r.final_distance;
  j["max_distance"] = r.max_distance;
  Json trace = Json::array();
  for (const auto& [t, d] : r.trace) trace.push_back(Json{{"t", t}, {"dist", d}});
  j["trace"] = trace;
  return j;
}

Json to_json(const SolutionSample& s) {
  Json j;
  j["x"] = to_json(s.x);
  j["minimizers"] = rows_json(s.minimizers);
  j["value"] = s.value;
  j["boundary_flag"] = s.boundary_flag;
  j["method"] = s.method;
  return j;
}

Json to_json(const StationarySample& s) {
  Json j;
  j["x"] = to_json(s.x);
  Json pts = Json::array();
  for (const auto& p : s.stationary_points)
    pts.push_back(Json{{"y", to_json(p.y)}, {"residual", p.residual}});
  j["stationary_points"] = pts;
  if (s.ball_center) {
    j["ball_center"] = to_json(*s.ball_center);
    j["ball_radius"] = s.ball_radius;
  }
  return j;
}

Json to_json(const LocalizationTrack& t) {
  Json j;
  j["single_valued"] = t.single_valued;
  j["track_lost"] = t.track_lost;
  j["lipschitz_estimate"] = t.lipschitz_estimate;
  Json entries = Json::array();
  for (const auto& e : t.entries) {
    Json je;
    je["t"] = e.t;
    je["x"] = to_json(e.x);
    je["points"] = rows_json(e.points);
    entries.push_back(je);
  }
  j["entries"] = entries;
  return j;
}

Json to_json(const EquivalenceReport& r) {
  Json j;
  j["point"] = to_json(r.point);
  j["direction"] = to_json(r.u);
  j["eps_x"] = r.eps_x;
  j["eps_y"] = r.eps_y;
  j["delta"] = r.delta;
  j["samples"] = r.sample_count;
  j["verdict"] = r.verdict;
  if (r.worst_x) {
    j["worst_x"] = to_json(*r.worst_x);
    j["detail"] = r.detail;
  }
  j["worst_hausdorff"] = r.worst_hausdorff;
  return j;
}

Json to_json(const FoaFailureReport& r) {
  Json j;
  j["point"] = to_json(r.point);
  j["radius"] = r.radius;
  j["failure_found"] = r.failure_found;
  if (r.witness) {
    j["witness"] = to_json(*r.witness);
    j["margin"] = r.margin;
    j["witness_residual"] = r.witness_residual;
  }
  j["branch_fold"] = r.branch_fold;
  return j;
}

Json to_json(const LocalMinReport& r) {
  Json j;
  j["verdict"] = r.verdict;
  j["samples"] = r.samples;
  j["worst_violation"] = r.worst_violation;
  if (r.worst_point) j["worst_point"] = to_json(*r.worst_point);
  return j;
}

Json to_json(const ReportDocument& doc) {
  Json j;
  j["command"] = doc.command;
  j["version"] = doc.version;
  j["report"] = doc.body;
  j["summary"] = doc.summary;
  return j;
}

ReportDocument report_from_json(const Json& j) {
  ReportDocument doc;
  doc.command = j.at("command").get<std::vector<std::string>>();
  doc.version = j.at("version").get<std::string>();
  doc.body = j.at("report");
  doc.summary = j.at("summary");
  return doc;
}

// ---------------------------------------------------------------------------
// Stable dumping
// ---------------------------------------------------------------------------

namespace {

void dump_rec(const Json& j, std::string& out, int indent) {
  const std::string pad(2 * indent, ' ');
  const std::string pad_in(2 * (indent + 1), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // keys are sorted
        if (!first) out += ",\n";
        first = false;
        out += pad_in + Json(it.key()).dump() + ": ";
        dump_rec(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        dump_rec(item, out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v))
        out += format_g12(v);
      else
        out += v > 0 ? "\"inf\"" : (v < 0 ? "\"-inf\"" : "\"nan\"");
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string dump_stable(const Json& j) {
  std::string out;
  dump_rec(j, out, 0);
  out += "\n";
  return out;
}

void emit_json(const Json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << dump_stable(j);
}

void emit_csv(const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_g12(row[i]);
    out << "\n";
  }
}

}  // namespace bdfoa
