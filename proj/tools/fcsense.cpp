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

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fcsense/commands.hpp"

int main(int argc, char ** argv)
{
  using fcsense::cli::CommandInvocation;

  CLI::App app{"fcsense: soft-finger calibration, estimation and sorting"};
  app.require_subcommand(1);

  CommandInvocation inv;
  std::string config;
  std::string out;
  std::string profile;

  auto common = [&](CLI::App * sub, const char * out_help) {
      sub->add_option("--config", config, "pipeline config (JSON)");
      sub->add_option("--seed", inv.seed, "random seed")->capture_default_str();
      sub->add_option("--out", out, out_help);
    };

  auto * calibrate = app.add_subcommand("calibrate", "plate calibration, writes a profile");
  common(calibrate, "profile path (default profile.json)");

  std::string episode_log;
  std::string telemetry_log;
  int objects = -1;
  auto * sort = app.add_subcommand("sort", "sorting experiment, writes reports");
  common(sort, "report path; both formats replace the extension (default report)");
  sort->add_option("--profile", profile, "calibration profile")->required();
  sort->add_option("--format", inv.format, "structured, tabular or both")
  ->check(CLI::IsMember({"structured", "tabular", "both"}))->capture_default_str();
  sort->add_option("--objects", objects, "use only the first N generated objects");
  sort->add_option("--episode-log", episode_log, "write episodes as NDJSON");
  sort->add_option("--telemetry-log", telemetry_log, "write hand traces as a frame byte log");

  std::string input;
  std::string episodes;
  auto * replay = app.add_subcommand("replay", "estimate grasps from a recorded byte log");
  common(replay, "filtered-signal CSV");
  replay->add_option("log", input, "byte log or device path")->required();
  replay->add_option("--profile", profile, "calibration profile")->required();
  replay->add_option("--episodes", episodes, "NDJSON episode log with gripper gaps");

  auto * characterize = app.add_subcommand("characterize", "displacement sweep as CSV");
  common(characterize, "sweep CSV (default characterize.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fcsense::cli::kExitUsage;
  }

  inv.subcommand = app.get_subcommands().front()->get_name();
  if (!config.empty()) {inv.config = config;}
  if (!out.empty()) {inv.out = out;}
  if (!profile.empty()) {inv.profile = profile;}
  if (objects >= 0 || sort->count("--objects") > 0) {inv.objects = objects;}
  if (!episode_log.empty()) {inv.episode_log = episode_log;}
  if (!telemetry_log.empty()) {inv.telemetry_log = telemetry_log;}
  if (!input.empty()) {inv.input = input;}
  if (!episodes.empty()) {inv.episodes = episodes;}
  return fcsense::cli::dispatch(inv, std::cout, std::cerr);
}
