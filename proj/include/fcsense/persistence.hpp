// Copyright 2026 The fcsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FCSENSE__PERSISTENCE_HPP_
#define FCSENSE__PERSISTENCE_HPP_

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fcsense/calibration.hpp"
#include "fcsense/error.hpp"
#include "fcsense/estimation.hpp"
#include "fcsense/grasp_sim.hpp"

namespace fcsense
{

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// File plumbing

inline std::string read_text_file(const std::filesystem::path & path)
{
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw Error(ErrorKind::FileNotFound, path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  }
  out << text;
  out.flush();
  if (!out) {
    throw Error(ErrorKind::Io, "write failed for " + path.string());
  }
}

inline Json parse_json(const std::string & text, const std::string & what)
{
  try {
    return Json::parse(text);
  } catch (const Json::exception & e) {
    throw Error(ErrorKind::MalformedDocument, what + ": " + e.what());
  }
}

namespace detail
{

inline double finite_number(const Json & j, const char * key)
{
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw Error(ErrorKind::MalformedDocument, std::string("missing numeric field '") + key + "'");
  }
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::MalformedDocument, std::string("non-finite value in '") + key + "'");
  }
  return v;
}

inline std::optional<double> optional_number(const Json & j, const char * key)
{
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::nullopt;
  }
  return finite_number(j, key);
}

inline Json optional_to_json(const std::optional<double> & v)
{
  return v ? Json(*v) : Json(nullptr);
}

inline void check_schema(const Json & doc, const std::string & what)
{
  if (!doc.is_object() || !doc.contains("schema_version") || !doc.at("schema_version").is_number_integer()) {
    throw Error(ErrorKind::MalformedDocument, what + ": missing schema_version");
  }
  const int version = doc.at("schema_version").get<int>();
  if (version != kSchemaVersion) {
    throw Error(
      ErrorKind::VersionMismatch,
      what + ": schema_version " + std::to_string(version) + ", expected " +
      std::to_string(kSchemaVersion));
  }
}

/// Runs `fn`, mapping JSON access failures to malformed-document errors.
template<typename Fn>
auto guarded(const std::string & what, Fn && fn)
{
  try {
    return fn();
  } catch (const Json::exception & e) {
    throw Error(ErrorKind::MalformedDocument, what + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Calibration profiles

inline Json profile_to_json(const CalibrationProfile & p)
{
  Json channels = Json::array();
  for (const auto & c : p.channels) {
    channels.push_back({
        {"channel_id", c.channel_id}, {"slope", c.slope}, {"intercept", c.intercept},
        {"r_squared", c.r_squared}});
  }
  return {
    {"schema_version", kSchemaVersion},
    {"valid_interval", {p.valid_interval.lo, p.valid_interval.hi}},
    {"n_deforming_fingers", p.n_deforming_fingers},
    {"created_at", p.created_at},
    {"r2_threshold_used", p.r2_threshold_used},
    {"channels", channels},
  };
}

inline CalibrationProfile profile_from_json(const Json & doc)
{
  detail::check_schema(doc, "profile");
  return detail::guarded("profile", [&] {
      CalibrationProfile p;
      const auto & iv = doc.at("valid_interval");
      p.valid_interval = {iv.at(0).get<double>(), iv.at(1).get<double>()};
      if (!(std::isfinite(p.valid_interval.lo) && std::isfinite(p.valid_interval.hi) &&
        p.valid_interval.lo < p.valid_interval.hi))
      {
        throw Error(ErrorKind::MalformedDocument, "profile: bad valid_interval");
      }
      p.n_deforming_fingers = doc.at("n_deforming_fingers").get<int>();
      p.created_at = doc.at("created_at").get<std::int64_t>();
      p.r2_threshold_used = detail::finite_number(doc, "r2_threshold_used");
      for (const auto & c : doc.at("channels")) {
        ChannelFit f;
        f.channel_id = c.at("channel_id").get<int>();
        f.slope = detail::finite_number(c, "slope");
        f.intercept = detail::finite_number(c, "intercept");
        f.r_squared = detail::finite_number(c, "r_squared");
        p.channels.push_back(f);
      }
      return p;
    });
}

inline void save_profile(const CalibrationProfile & profile, const std::filesystem::path & path)
{
  write_text_file(path, profile_to_json(profile).dump(2) + "\n");
}

inline CalibrationProfile load_profile(const std::filesystem::path & path)
{
  return profile_from_json(parse_json(read_text_file(path), path.string()));
}

// ---------------------------------------------------------------------------
// Sorting reports

inline Json row_to_json(const ReportRow & r)
{
  return {
    {"id", r.id},
    {"name", r.name},
    {"shape", std::string(to_string(r.shape_class))},
    {"outcome", std::string(to_string(r.outcome))},
    {"true_diameter", r.true_diameter},
    {"estimated_diameter", detail::optional_to_json(r.estimated_diameter)},
    {"true_strain", r.true_strain},
    {"estimated_strain", detail::optional_to_json(r.estimated_strain)},
    {"classification", std::string(to_string(r.classification))},
    {"truth_class", std::string(to_string(r.truth_class))},
    {"anomalies", r.anomalies.names()},
  };
}

inline ReportRow row_from_json(const Json & j)
{
  ReportRow r;
  r.id = j.at("id").get<int>();
  r.name = j.at("name").get<std::string>();
  r.shape_class = shape_from_string(j.at("shape").get<std::string>());
  r.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  r.true_diameter = detail::finite_number(j, "true_diameter");
  r.estimated_diameter = detail::optional_number(j, "estimated_diameter");
  r.true_strain = detail::finite_number(j, "true_strain");
  r.estimated_strain = detail::optional_number(j, "estimated_strain");
  r.classification = classification_from_string(j.at("classification").get<std::string>());
  r.truth_class = classification_from_string(j.at("truth_class").get<std::string>());
  const auto names = j.at("anomalies").get<std::vector<std::string>>();
  r.anomalies = AnomalySet::from_names(names);
  return r;
}

inline Json aggregates_to_json(const ReportAggregates & a)
{
  return {
    {"n_objects", a.n_objects},
    {"n_graspable", a.n_graspable},
    {"n_slipped", a.n_slipped},
    {"n_force_not_reached", a.n_force_not_reached},
    {"n_unrecognizable", a.n_unrecognizable},
    {"n_rigid_prismatic", a.n_rigid_prismatic},
    {"rigid_within_diameter_tolerance", a.rigid_within_diameter_tolerance},
    {"mean_abs_diameter_error", a.mean_abs_diameter_error},
    {"n_strain_measurable", a.n_strain_measurable},
    {"strain_within_tolerance", a.strain_within_tolerance},
    {"mean_abs_strain_error", a.mean_abs_strain_error},
    {"n_correct", a.n_correct},
    {"classification_success_rate", a.classification_success_rate},
  };
}

inline ReportAggregates aggregates_from_json(const Json & j)
{
  ReportAggregates a;
  a.n_objects = j.at("n_objects").get<int>();
  a.n_graspable = j.at("n_graspable").get<int>();
  a.n_slipped = j.at("n_slipped").get<int>();
  a.n_force_not_reached = j.at("n_force_not_reached").get<int>();
  a.n_unrecognizable = j.at("n_unrecognizable").get<int>();
  a.n_rigid_prismatic = j.at("n_rigid_prismatic").get<int>();
  a.rigid_within_diameter_tolerance = detail::finite_number(j, "rigid_within_diameter_tolerance");
  a.mean_abs_diameter_error = detail::finite_number(j, "mean_abs_diameter_error");
  a.n_strain_measurable = j.at("n_strain_measurable").get<int>();
  a.strain_within_tolerance = detail::finite_number(j, "strain_within_tolerance");
  a.mean_abs_strain_error = detail::finite_number(j, "mean_abs_strain_error");
  a.n_correct = j.at("n_correct").get<int>();
  a.classification_success_rate = detail::finite_number(j, "classification_success_rate");
  return a;
}

inline Json report_to_json(const SortingReport & report)
{
  Json rows = Json::array();
  for (const auto & r : report.rows) {rows.push_back(row_to_json(r));}
  return {
    {"schema_version", kSchemaVersion},
    {"diameter_tolerance_mm", kDiameterTolerance},
    {"strain_tolerance", kStrainTolerance},
    {"rows", rows},
    {"aggregates", aggregates_to_json(report.aggregates)},
  };
}

inline SortingReport report_from_json(const Json & doc)
{
  detail::check_schema(doc, "report");
  return detail::guarded("report", [&] {
      SortingReport report;
      for (const auto & r : doc.at("rows")) {report.rows.push_back(row_from_json(r));}
      report.aggregates = aggregates_from_json(doc.at("aggregates"));
      if (!(compute_aggregates(report.rows) == report.aggregates)) {
        throw Error(ErrorKind::MalformedDocument, "report: aggregates do not match rows");
      }
      return report;
    });
}

namespace detail
{

inline std::string csv_number(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string csv_optional(const std::optional<double> & v)
{
  return v ? csv_number(*v) : std::string();
}

inline std::string csv_field(const std::string & s)
{
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') {out += '"';}
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline constexpr const char * kReportCsvHeader =
  "id,name,shape,outcome,true_diameter_mm,estimated_diameter_mm,diameter_error_mm,"
  "true_strain,estimated_strain,strain_error,classification,truth_class,anomalies";

/// One header line plus one line per object.
inline std::string report_to_csv(const SortingReport & report)
{
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (const auto & r : report.rows) {
    std::string anomalies;
    for (const auto & n : r.anomalies.names()) {
      anomalies += (anomalies.empty() ? "" : ";") + n;
    }
    std::optional<double> diam_err;
    if (r.estimated_diameter) {diam_err = *r.estimated_diameter - r.true_diameter;}
    std::optional<double> strain_err;
    if (r.estimated_strain) {strain_err = *r.estimated_strain - r.true_strain;}
    out += std::to_string(r.id) + "," + detail::csv_field(r.name) + "," +
      std::string(to_string(r.shape_class)) + "," + std::string(to_string(r.outcome)) + "," +
      detail::csv_number(r.true_diameter) + "," + detail::csv_optional(r.estimated_diameter) + "," +
      detail::csv_optional(diam_err) + "," + detail::csv_number(r.true_strain) + "," +
      detail::csv_optional(r.estimated_strain) + "," + detail::csv_optional(strain_err) + "," +
      std::string(to_string(r.classification)) + "," + std::string(to_string(r.truth_class)) +
      "," + anomalies + "\n";
  }
  return out;
}

enum class ReportFormat { Structured, Tabular };

inline void write_report(const SortingReport & report, const std::filesystem::path & path, ReportFormat format)
{
  if (format == ReportFormat::Structured) {
    write_text_file(path, report_to_json(report).dump(2) + "\n");
  } else {
    write_text_file(path, report_to_csv(report));
  }
}

inline SortingReport read_report(const std::filesystem::path & path)
{
  return report_from_json(parse_json(read_text_file(path), path.string()));
}

// ---------------------------------------------------------------------------
// Episode logs (newline-delimited JSON, one episode per line)

inline Json object_to_json(const ObjectSpec & o)
{
  return {
    {"id", o.id}, {"name", o.name}, {"true_diameter", o.true_diameter},
    {"stiffness", o.stiffness}, {"true_strain_at_force", o.true_strain_at_force},
    {"shape", std::string(to_string(o.shape_class))}, {"graspable", o.graspable},
    {"wide_section_diameter", o.wide_section_diameter},
  };
}

inline ObjectSpec object_from_json(const Json & j)
{
  ObjectSpec o;
  o.id = j.at("id").get<int>();
  o.name = j.at("name").get<std::string>();
  o.true_diameter = detail::finite_number(j, "true_diameter");
  o.stiffness = detail::finite_number(j, "stiffness");
  o.true_strain_at_force = detail::finite_number(j, "true_strain_at_force");
  o.shape_class = shape_from_string(j.at("shape").get<std::string>());
  o.graspable = j.at("graspable").get<bool>();
  o.wide_section_diameter = detail::finite_number(j, "wide_section_diameter");
  return o;
}

inline Json episode_to_json(const GraspEpisode & ep)
{
  Json steady = Json::array();
  for (const auto & s : ep.observation.steady) {steady.push_back({s.voltage, s.stddev});}
  Json times = Json::array();
  if (!ep.traces.empty()) {
    for (const auto & r : ep.traces.front()) {times.push_back(r.timestamp_ms);}
  }
  Json traces = Json::array();
  for (const auto & tr : ep.traces) {
    Json v = Json::array();
    for (const auto & r : tr) {v.push_back(r.voltage);}
    traces.push_back(std::move(v));
  }
  return {
    {"schema_version", kSchemaVersion},
    {"object", object_to_json(ep.object)},
    {"outcome", std::string(to_string(ep.outcome))},
    {"seed", ep.seed},
    {"gap_at_contact", ep.gap_at_contact},
    {"gap_at_steady", ep.gap_at_steady},
    {"midpoint_displacement", ep.midpoint_displacement},
    {"object_compression", ep.object_compression},
    {"true_compressed_diameter", ep.true_compressed_diameter},
    {"pair_displacements", ep.pair_displacements},
    {"achieved_force", ep.achieved_force},
    {"object_force", ep.object_force},
    {"observation", {
        {"gap_at_contact", ep.observation.gap_at_contact},
        {"gap_at_steady", ep.observation.gap_at_steady},
        {"steady", steady}}},
    {"trace_timestamps_ms", times},
    {"traces", traces},
  };
}

inline GraspEpisode episode_from_json(const Json & j)
{
  detail::check_schema(j, "episode");
  return detail::guarded("episode", [&] {
      GraspEpisode ep;
      ep.object = object_from_json(j.at("object"));
      ep.outcome = outcome_from_string(j.at("outcome").get<std::string>());
      ep.seed = j.at("seed").get<std::uint64_t>();
      ep.gap_at_contact = detail::finite_number(j, "gap_at_contact");
      ep.gap_at_steady = detail::finite_number(j, "gap_at_steady");
      ep.midpoint_displacement = detail::finite_number(j, "midpoint_displacement");
      ep.object_compression = detail::finite_number(j, "object_compression");
      ep.true_compressed_diameter = detail::finite_number(j, "true_compressed_diameter");
      ep.pair_displacements = j.at("pair_displacements").get<std::vector<double>>();
      ep.achieved_force = detail::finite_number(j, "achieved_force");
      ep.object_force = detail::finite_number(j, "object_force");
      const auto & obs = j.at("observation");
      ep.observation.gap_at_contact = detail::finite_number(obs, "gap_at_contact");
      ep.observation.gap_at_steady = detail::finite_number(obs, "gap_at_steady");
      for (const auto & s : obs.at("steady")) {
        const double v = s.at(0).get<double>();
        const double sd = s.at(1).get<double>();
        if (!std::isfinite(v) || !std::isfinite(sd)) {
          throw Error(ErrorKind::MalformedDocument, "episode: non-finite steady value");
        }
        ep.observation.steady.push_back({v, sd});
      }
      const auto times = j.at("trace_timestamps_ms").get<std::vector<double>>();
      int ch = 0;
      for (const auto & tr : j.at("traces")) {
        const auto volts = tr.get<std::vector<double>>();
        if (volts.size() != times.size()) {
          throw Error(ErrorKind::MalformedDocument, "episode: trace length mismatch");
        }
        std::vector<SensorReading> readings;
        for (std::size_t i = 0; i < volts.size(); ++i) {
          readings.push_back({times[i], ch, volts[i]});
        }
        ep.traces.push_back(std::move(readings));
        ++ch;
      }
      return ep;
    });
}

inline void append_episode_log(const GraspEpisode & episode, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot open " + path.string() + " for appending");
  }
  out << episode_to_json(episode).dump() << '\n';
  out.flush();
  if (!out) {
    throw Error(ErrorKind::Io, "append failed for " + path.string());
  }
}

struct EpisodeLog
{
  std::vector<GraspEpisode> episodes;
  /// A trailing line that did not parse (an interrupted write) was dropped.
  bool dropped_partial_tail = false;
};

/// Reads every complete record. Only the final line may be damaged; damage
/// anywhere else is a malformed-document error.
inline EpisodeLog read_episode_log(const std::filesystem::path & path)
{
  const std::string text = read_text_file(path);
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string::npos ? text.size() : nl;
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  EpisodeLog log;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) {continue;}
    try {
      log.episodes.push_back(episode_from_json(parse_json(lines[i], "episode log")));
    } catch (const Error &) {
      if (i + 1 != lines.size()) {
        throw;
      }
      log.dropped_partial_tail = true;
    }
  }
  return log;
}

}  // namespace fcsense

#endif  // FCSENSE__PERSISTENCE_HPP_
