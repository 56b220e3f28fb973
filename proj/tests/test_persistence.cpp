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

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <random>
#include <string>

#include <unistd.h>

#include "fcsense/config.hpp"
#include "fcsense/persistence.hpp"

using namespace fcsense;
namespace fs = std::filesystem;

namespace
{

struct TempDir
{
  fs::path path;

  TempDir()
  {
    static int counter = 0;
    path = fs::temp_directory_path() /
      ("fcsense_persist_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {fs::remove_all(path);}
};

CalibrationProfile random_profile(std::mt19937_64 & g)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CalibrationProfile p;
  for (int c = 0; c < 8; ++c) {
    if (g() % 4 == 0) {continue;}
    p.channels.push_back({c, -0.3 * u(g) - 1e-3, 3.0 + 2.0 * u(g), 0.95 + 0.05 * u(g)});
  }
  p.valid_interval = {4.0 + u(g), 29.0 + 2.0 * u(g)};
  p.n_deforming_fingers = 1 + static_cast<int>(g() % 2);
  p.created_at = static_cast<std::int64_t>(g() >> 1);
  p.r2_threshold_used = 0.9 + 0.05 * u(g);
  return p;
}

ErrorKind kind_of(const std::function<void()> & fn)
{
  try {
    fn();
  } catch (const Error & e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Domain;
}

SortingReport small_report()
{
  ExperimentSetup setup;
  setup.sensors = make_sensor_bank(SensorChannelModel{}, 8, 7, 0.2, 0.1);
  const auto profile = calibrate(simulate_plate_calibration(setup.sensors, PlateProtocol{}, setup.simulator, 1));
  const auto objects = generate_object_set(8, ObjectComposition{}, setup.gripper.force_setpoint);
  return run_sorting_experiment(objects, setup, profile, 8).report;
}

std::size_t count_lines(const std::string & text)
{
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("profile round-trips exactly")
{
  TempDir dir;
  std::mt19937_64 g(137);
  for (int i = 0; i < 50; ++i) {
    const auto p = random_profile(g);
    save_profile(p, dir.path / "p.json");
    REQUIRE(load_profile(dir.path / "p.json") == p);
  }
}

TEST_CASE("profile load errors are distinct")
{
  TempDir dir;
  const auto path = dir.path / "p.json";
  CHECK(kind_of([&] {load_profile(dir.path / "missing.json");}) == ErrorKind::FileNotFound);

  std::mt19937_64 g(139);
  save_profile(random_profile(g), path);
  const std::string text = read_text_file(path);
  write_text_file(path, text.substr(0, text.size() / 2));
  CHECK(kind_of([&] {load_profile(path);}) == ErrorKind::MalformedDocument);

  auto doc = parse_json(text, "p");
  doc["schema_version"] = kSchemaVersion + 1;
  write_text_file(path, doc.dump());
  CHECK(kind_of([&] {load_profile(path);}) == ErrorKind::VersionMismatch);

  doc = parse_json(text, "p");
  doc.erase("channels");
  write_text_file(path, doc.dump());
  CHECK(kind_of([&] {load_profile(path);}) == ErrorKind::MalformedDocument);
}

TEST_CASE("non-finite numbers are rejected on load")
{
  std::mt19937_64 g(149);
  auto p = random_profile(g);
  p.channels.push_back({7, -0.1, 5.0, 0.99});
  const std::string good = profile_to_json(p).dump();
  auto doc = parse_json(good, "p");
  doc["channels"][0]["slope"] = nullptr;
  CHECK(kind_of([&] {profile_from_json(doc);}) == ErrorKind::MalformedDocument);
  // 1e999 parses to infinity.
  auto text = profile_to_json(p).dump();
  const auto at = text.find("\"intercept\":") + 12;
  const auto end = text.find_first_of(",}", at);
  text.replace(at, end - at, "1e999");
  CHECK(kind_of([&] {profile_from_json(parse_json(text, "p"));}) == ErrorKind::MalformedDocument);
}

TEST_CASE("empty report gives a header-only CSV")
{
  const SortingReport empty;
  const auto csv = report_to_csv(empty);
  CHECK(csv == std::string(kReportCsvHeader) + "\n");
}

TEST_CASE("42-row report gives a 43-line CSV and re-reads from JSON")
{
  TempDir dir;
  const auto report = small_report();
  REQUIRE(report.rows.size() == 42);
  write_report(report, dir.path / "r.csv", ReportFormat::Tabular);
  CHECK(count_lines(read_text_file(dir.path / "r.csv")) == 43);
  write_report(report, dir.path / "r.json", ReportFormat::Structured);
  const auto back = read_report(dir.path / "r.json");
  CHECK(back.rows == report.rows);
  CHECK(back.aggregates == report.aggregates);
  CHECK(compute_aggregates(back.rows) == back.aggregates);
}

TEST_CASE("a report whose aggregates disagree with its rows is rejected")
{
  auto doc = report_to_json(small_report());
  doc["aggregates"]["n_correct"] = doc["aggregates"]["n_correct"].get<int>() + 1;
  CHECK(kind_of([&] {report_from_json(doc);}) == ErrorKind::MalformedDocument);
}

TEST_CASE("CSV marks unmeasurable values as empty fields")
{
  SortingReport r;
  ReportRow row;
  row.id = 3;
  row.name = "a,b";
  row.true_diameter = 50.0;
  row.anomalies.insert(Anomaly::BelowValidRange);
  row.anomalies.insert(Anomaly::PairDisagreement);
  r.rows.push_back(row);
  const auto csv = report_to_csv(r);
  const auto line = csv.substr(csv.find('\n') + 1);
  CHECK(line.rfind("3,\"a,b\",prismatic,slipped,50.000000,,,0.000000,,,unrecognizable,rigid,", 0) == 0);
  CHECK(line.find("below-valid-range;pair-disagreement") != std::string::npos);
}

TEST_CASE("episode log: appends keep order and survive a torn tail")
{
  TempDir dir;
  const auto path = dir.path / "ep.ndjson";
  const auto bank = make_sensor_bank(SensorChannelModel{}, 8, 7, 0.2, 0.1);
  const auto objects = generate_object_set(12, ObjectComposition{}, 8.0);
  const auto a = run_grasp(GripperConfig{}, objects[0], bank, SimulatorConfig{}, 1);
  const auto b = run_grasp(GripperConfig{}, objects[1], bank, SimulatorConfig{}, 2);
  append_episode_log(a, path);
  append_episode_log(b, path);
  auto log = read_episode_log(path);
  REQUIRE(log.episodes.size() == 2);
  CHECK_FALSE(log.dropped_partial_tail);
  CHECK(log.episodes[0].object == a.object);
  CHECK(log.episodes[1].object == b.object);
  CHECK(log.episodes[0].observation == a.observation);
  CHECK(log.episodes[1].traces == b.traces);

  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    const auto partial = episode_to_json(a).dump();
    out << partial.substr(0, partial.size() / 3);
  }
  log = read_episode_log(path);
  CHECK(log.episodes.size() == 2);
  CHECK(log.dropped_partial_tail);
}

TEST_CASE("episode log: damage before the tail is an error")
{
  TempDir dir;
  const auto path = dir.path / "ep.ndjson";
  const auto bank = make_sensor_bank(SensorChannelModel{}, 8, 7, 0.2, 0.1);
  const auto objects = generate_object_set(12, ObjectComposition{}, 8.0);
  write_text_file(path, "{\"schema_version\": 1\n");
  append_episode_log(run_grasp(GripperConfig{}, objects[0], bank, SimulatorConfig{}, 1), path);
  CHECK(kind_of([&] {read_episode_log(path);}) == ErrorKind::MalformedDocument);
}

TEST_CASE("a logged episode re-estimates identically")
{
  TempDir dir;
  const auto path = dir.path / "ep.ndjson";
  ExperimentSetup setup;
  setup.sensors = make_sensor_bank(SensorChannelModel{}, 8, 7, 0.2, 0.1);
  const auto profile = calibrate(simulate_plate_calibration(setup.sensors, PlateProtocol{}, setup.simulator, 1));
  const auto objects = generate_object_set(13, ObjectComposition{}, 8.0);
  const auto result = run_sorting_experiment(objects, setup, profile, 13);
  for (const auto & ep : result.episodes) {append_episode_log(ep, path);}
  const auto log = read_episode_log(path);
  REQUIRE(log.episodes.size() == result.episodes.size());
  for (std::size_t i = 0; i < log.episodes.size(); ++i) {
    const auto & ep = log.episodes[i];
    if (ep.outcome == GraspOutcome::Slipped) {
      CHECK_FALSE(result.estimates[i].has_value());
      continue;
    }
    REQUIRE(estimate_grasp(profile, ep.observation, setup.estimation) == *result.estimates[i]);
  }
}

TEST_CASE("config: defaults round-trip and partial files override")
{
  const PipelineConfig defaults;
  const auto back = config_from_json(config_to_json(defaults));
  CHECK(back.sensors == defaults.sensors);
  CHECK(back.gripper == defaults.gripper);
  CHECK(back.simulator == defaults.simulator);
  CHECK(back.estimation == defaults.estimation);
  CHECK(back.objects == defaults.objects);
  CHECK(back.plates == defaults.plates);
  CHECK(back.characterize == defaults.characterize);

  const auto partial = config_from_json(parse_json(
      R"({"sensor": {"noise_sigma_linear": 0.0}, "geometry": {"n_active_fingers": 1},
          "boundary": {"strain_threshold": 0.2}, "composition": {"slender": 0}})", "cfg"));
  CHECK(partial.sensors.base.noise_sigma_linear == 0.0);
  CHECK(partial.gripper.n_active_fingers == 1);
  CHECK(partial.estimation.n_active_fingers == 1);
  CHECK(partial.estimation.boundary.strain_threshold == 0.2);
  CHECK(partial.objects.slender == 0);
  CHECK(partial.objects.rigid_prismatic == 26);
}

TEST_CASE("config: bad documents are rejected")
{
  CHECK(kind_of([&] {config_from_json(parse_json("[1, 2]", "cfg"));}) == ErrorKind::MalformedDocument);
  CHECK(kind_of([&] {config_from_json(parse_json(R"({"sensor": 3})", "cfg"));}) == ErrorKind::MalformedDocument);
  CHECK(kind_of([&] {config_from_json(parse_json(R"({"sensor": {"slope": "x"}})", "cfg"));}) ==
    ErrorKind::MalformedDocument);
  CHECK(kind_of([&] {config_from_json(parse_json(R"({"sensor": {"slope": 0.1}})", "cfg"));}) ==
    ErrorKind::Domain);
  CHECK(kind_of([&] {config_from_json(parse_json(R"({"boundary": {"strain_threshold": 1.5}})", "cfg"));}) ==
    ErrorKind::Domain);
  CHECK(kind_of([&] {load_config("/nonexistent/cfg.json");}) == ErrorKind::FileNotFound);
}
