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

#ifndef FCSENSE__COMMANDS_HPP_
#define FCSENSE__COMMANDS_HPP_

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fcsense/calibration.hpp"
#include "fcsense/config.hpp"
#include "fcsense/error.hpp"
#include "fcsense/grasp_sim.hpp"
#include "fcsense/persistence.hpp"
#include "fcsense/replay.hpp"
#include "fcsense/sensor_model.hpp"
#include "fcsense/telemetry.hpp"

namespace fcsense::cli
{

enum ExitCode : int
{
  kExitOk = 0,
  kExitUsage = 2,
  kExitCalibrationFailed = 3,
  kExitIo = 4,
  kExitDomain = 5,
};

inline constexpr std::uint64_t kDefaultSeed = 20260101;

inline int exit_code_for(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::CalibrationFailed:
    case ErrorKind::InsufficientSpan:
    case ErrorKind::DegenerateChannel:
      return kExitCalibrationFailed;
    case ErrorKind::FileNotFound:
    case ErrorKind::Io:
    case ErrorKind::MalformedDocument:
    case ErrorKind::VersionMismatch:
      return kExitIo;
    default:
      return kExitDomain;
  }
}

/// Parsed command line shared by all subcommands.
struct CommandInvocation
{
  std::string subcommand;
  std::optional<std::filesystem::path> config;
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> profile;
  /// structured, tabular or both
  std::string format = "both";
  std::optional<int> objects;
  /// sort: NDJSON episode log and raw frame log to write.
  std::optional<std::filesystem::path> episode_log;
  std::optional<std::filesystem::path> telemetry_log;
  /// replay: recorded byte log, and an optional episode log with gripper gaps.
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> episodes;
};

namespace detail
{

inline PipelineConfig load_or_default(const CommandInvocation & inv)
{
  return inv.config ? load_config(*inv.config) : PipelineConfig{};
}

inline std::vector<std::uint8_t> read_binary_file(const std::filesystem::path & path)
{
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw Error(ErrorKind::FileNotFound, "no such file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes(
    (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw Error(ErrorKind::Io, "read failed: " + path.string());
  }
  return bytes;
}

inline void write_binary_file(const std::filesystem::path & path, const std::vector<std::uint8_t> & bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorKind::Io, "write failed: " + path.string());
  }
}

inline std::string fixed(double v, int digits = 4)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

template<typename Fn>
int run_guarded(std::ostream & err, Fn && fn)
{
  try {
    return fn();
  } catch (const Error & e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception & e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// calibrate

inline CalibrationProfile calibrate_from_config(const PipelineConfig & config, std::uint64_t seed)
{
  const auto bank = config.sensor_bank();
  const auto samples = simulate_plate_calibration(bank, config.plates, config.simulator, seed);
  CalibrationOptions opts = config.calibration;
  opts.n_deforming_fingers = config.plates.n_deforming_fingers;
  return calibrate(samples, opts);
}

inline int cmd_calibrate(const CommandInvocation & inv, std::ostream & out, std::ostream & err)
{
  return detail::run_guarded(err, [&]() -> int {
      const auto config = detail::load_or_default(inv);
      const auto profile = calibrate_from_config(config, inv.seed);
      const auto path = inv.out.value_or("profile.json");
      save_profile(profile, path);
      out << "channel  slope_v_per_mm  intercept_v  r2\n";
      for (const auto & c : profile.channels) {
        out << c.channel_id << "  " << detail::fixed(c.slope, 6) << "  "
            << detail::fixed(c.intercept, 6) << "  " << detail::fixed(c.r_squared, 6) << "\n";
      }
      out << "accepted " << profile.channels.size() << "/" << config.sensors.channel_count
          << " channels; profile written to " << path.string() << "\n";
      return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// sort

inline std::vector<ObjectSpec> objects_for(const PipelineConfig & config, const CommandInvocation & inv)
{
  auto objects = generate_object_set(inv.seed, config.objects, config.gripper.force_setpoint);
  if (inv.objects) {
    if (*inv.objects < 0 || static_cast<std::size_t>(*inv.objects) > objects.size()) {
      throw Error(
        ErrorKind::Domain, "--objects must be in [0, " + std::to_string(objects.size()) + "]");
    }
    objects.resize(static_cast<std::size_t>(*inv.objects));
  }
  return objects;
}

inline void print_aggregates(const ReportAggregates & a, std::ostream & out)
{
  out << "objects " << a.n_objects << ", graspable " << a.n_graspable << ", slipped "
      << a.n_slipped << ", force not reached " << a.n_force_not_reached << ", unrecognizable "
      << a.n_unrecognizable << "\n";
  out << "rigid within +/-6 mm: " << detail::fixed(a.rigid_within_diameter_tolerance) << " (n="
      << a.n_rigid_prismatic << ")\n";
  out << "mean abs diameter error mm: " << detail::fixed(a.mean_abs_diameter_error) << "\n";
  out << "strain within +/-0.1: " << detail::fixed(a.strain_within_tolerance) << " (n="
      << a.n_strain_measurable << ")\n";
  out << "mean abs strain error: " << detail::fixed(a.mean_abs_strain_error) << "\n";
  out << "classification success: " << detail::fixed(a.classification_success_rate) << " ("
      << a.n_correct << "/" << a.n_graspable << ")\n";
}

inline int cmd_sort(const CommandInvocation & inv, std::ostream & out, std::ostream & err)
{
  return detail::run_guarded(err, [&]() -> int {
      if (inv.format != "both" && inv.format != "structured" && inv.format != "tabular") {
        err << "error: --format must be structured, tabular or both\n";
        return kExitUsage;
      }
      if (!inv.profile) {
        throw Error(ErrorKind::FileNotFound, "sort needs --profile");
      }
      const auto profile = load_profile(*inv.profile);
      const auto config = detail::load_or_default(inv);
      const auto objects = objects_for(config, inv);
      const auto result = run_sorting_experiment(objects, config.experiment_setup(), profile, inv.seed);

      const std::filesystem::path base = inv.out.value_or("report");
      std::vector<std::filesystem::path> written;
      if (inv.format == "both") {
        auto json_path = base;
        auto csv_path = base;
        json_path.replace_extension(".json");
        csv_path.replace_extension(".csv");
        write_report(result.report, json_path, ReportFormat::Structured);
        write_report(result.report, csv_path, ReportFormat::Tabular);
        written = {json_path, csv_path};
      } else {
        write_report(
          result.report, base,
          inv.format == "structured" ? ReportFormat::Structured : ReportFormat::Tabular);
        written = {base};
      }
      if (inv.episode_log) {
        std::filesystem::remove(*inv.episode_log);
        for (const auto & ep : result.episodes) {append_episode_log(ep, *inv.episode_log);}
        written.push_back(*inv.episode_log);
      }
      if (inv.telemetry_log) {
        detail::write_binary_file(*inv.telemetry_log, episodes_to_telemetry(result.episodes));
        written.push_back(*inv.telemetry_log);
      }

      print_aggregates(result.report.aggregates, out);
      for (const auto & p : written) {out << "wrote " << p.string() << "\n";}
      return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// replay

inline int cmd_replay(const CommandInvocation & inv, std::ostream & out, std::ostream & err)
{
  return detail::run_guarded(err, [&]() -> int {
      if (!inv.input) {
        err << "error: replay needs a byte log\n";
        return kExitUsage;
      }
      if (!inv.profile) {
        throw Error(ErrorKind::FileNotFound, "replay needs --profile");
      }
      const auto profile = load_profile(*inv.profile);
      const auto config = detail::load_or_default(inv);
      const auto bytes = detail::read_binary_file(*inv.input);

      std::vector<GraspObservation> gaps;
      if (inv.episodes) {
        for (const auto & ep : read_episode_log(*inv.episodes).episodes) {
          if (ep.outcome != GraspOutcome::Slipped) {gaps.push_back(ep.observation);}
        }
      }
      const auto result = replay_stream(
        bytes, profile, config.estimation, config.simulator.hold_samples,
        config.characterize.filter_window, gaps);

      std::ostringstream filtered_csv;
      filtered_csv << "grasp,timestamp_ms";
      for (std::size_t c = 0; c < kFrameChannels; ++c) {filtered_csv << ",filtered_v_" << c;}
      for (std::size_t c = 0; c < kFrameChannels; ++c) {filtered_csv << ",derivative_v_per_s_" << c;}
      filtered_csv << "\n";

      for (std::size_t i = 0; i < result.grasps.size(); ++i) {
        const auto & g = result.grasps[i];
        out << "grasp " << i << ": frames " << g.frame_count << ", midpoint mm "
            << detail::fixed(g.aggregate.midpoint_displacement, 3) << ", force N "
            << detail::fixed(g.force, 3);
        if (g.estimate) {
          const auto & e = *g.estimate;
          out << ", diameter mm " << detail::fixed(e.estimated_diameter, 3) << ", strain "
              << (e.estimated_strain ? detail::fixed(*e.estimated_strain, 4) : std::string("n/a"))
              << ", class " << to_string(e.classification);
        }
        const auto names = (g.estimate ? g.estimate->anomalies : g.aggregate.anomalies).names();
        if (!names.empty()) {
          out << ", anomalies";
          for (const auto & n : names) {out << " " << n;}
        }
        out << "\n";
        for (const auto & s : g.filtered) {
          filtered_csv << i << "," << detail::fixed(s.timestamp_ms, 3);
          for (double v : s.filtered) {filtered_csv << "," << detail::fixed(v, 6);}
          for (double v : s.derivative) {filtered_csv << "," << detail::fixed(v, 6);}
          filtered_csv << "\n";
        }
      }
      if (inv.out) {
        write_text_file(*inv.out, filtered_csv.str());
      }
      const auto & st = result.stats;
      out << "frames " << st.frames << ", grasps " << result.grasps.size() << ", corrupt frames "
          << st.corrupt_frames << ", skipped bytes " << st.skipped_bytes << ", missing frames "
          << st.missing_frames << " in " << st.gaps.size() << " gaps, out of order "
          << st.out_of_order << "\n";
      return kExitOk;
    });
}

// ---------------------------------------------------------------------------
// characterize

struct CharacterizeRow
{
  int channel = 0;
  double displacement = 0.0;
  double raw = 0.0;
  double model = 0.0;
  double filtered = 0.0;
  /// V/mm
  double derivative = 0.0;
  double fit = 0.0;
  bool in_linear_stage = false;
};

struct CharacterizeResult
{
  std::vector<CharacterizeRow> rows;
  /// Fit of the raw stage-two rows, and of the noise-free rows, per channel.
  std::vector<LinearFit> fits;
  std::vector<LinearFit> model_fits;
};

inline constexpr const char * kCharacterizeCsvHeader =
  "channel,displacement_mm,raw_v,model_v,filtered_v,derivative_v_per_mm,fit_v,linear_stage";

/// Sweeps every channel of the bank from 0 to d_max.
inline CharacterizeResult characterize_sweep(const PipelineConfig & config, std::uint64_t seed)
{
  const auto bank = config.sensor_bank();
  const double step = config.characterize.step;
  CharacterizeResult result;
  for (std::size_t ch = 0; ch < bank.size(); ++ch) {
    const auto & m = bank[ch];
    const auto n = static_cast<std::size_t>(std::floor(m.d_max / step + 1e-9)) + 1;
    Rng rng(derive_seed(seed, {0xc4a2, ch}));
    std::vector<TimedSample<1>> sweep;
    std::vector<CharacterizeRow> rows;
    std::vector<Point2> linear;
    std::vector<Point2> linear_model;
    for (std::size_t k = 0; k < n; ++k) {
      CharacterizeRow r;
      r.channel = static_cast<int>(ch);
      r.displacement = std::min(static_cast<double>(k) * step, m.d_max);
      r.model = voltage_at(m, r.displacement);
      r.raw = config.simulator.sensor_noise ? voltage_at(m, r.displacement, rng) : r.model;
      r.in_linear_stage = stage_at(m, r.displacement) == SensorStage::Linear;
      if (r.in_linear_stage) {
        linear.push_back({r.displacement, r.raw});
        linear_model.push_back({r.displacement, r.model});
      }
      // One millimetre per second, so d/dt in V/s reads as V/mm.
      sweep.push_back({r.displacement * 1000.0, {r.raw}});
      rows.push_back(r);
    }
    const auto filtered = filter_and_differentiate<1>(sweep, config.characterize.filter_window);
    const LinearFit fit = fit_linear(linear);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      rows[k].filtered = filtered[k].filtered[0];
      rows[k].derivative = filtered[k].derivative[0];
      rows[k].fit = fit.intercept + fit.slope * rows[k].displacement;
    }
    result.fits.push_back(fit);
    result.model_fits.push_back(fit_linear(linear_model));
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  return result;
}

inline std::string characterize_to_csv(const CharacterizeResult & result)
{
  std::string csv = std::string(kCharacterizeCsvHeader) + "\n";
  char buf[256];
  for (const auto & r : result.rows) {
    std::snprintf(
      buf, sizeof(buf), "%d,%.3f,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n", r.channel, r.displacement,
      r.raw, r.model, r.filtered, r.derivative, r.fit, r.in_linear_stage ? 1 : 0);
    csv += buf;
  }
  return csv;
}

inline int cmd_characterize(const CommandInvocation & inv, std::ostream & out, std::ostream & err)
{
  return detail::run_guarded(err, [&]() -> int {
      const auto config = detail::load_or_default(inv);
      const auto result = characterize_sweep(config, inv.seed);
      const auto path = inv.out.value_or("characterize.csv");
      write_text_file(path, characterize_to_csv(result));
      out << "channel  slope_v_per_mm  intercept_v  r2\n";
      for (std::size_t c = 0; c < result.fits.size(); ++c) {
        const auto & f = result.fits[c];
        out << c << "  " << detail::fixed(f.slope, 6) << "  " << detail::fixed(f.intercept, 6)
            << "  " << detail::fixed(f.r_squared, 6) << "\n";
      }
      out << "sweep written to " << path.string() << "\n";
      return kExitOk;
    });
}

inline int dispatch(const CommandInvocation & inv, std::ostream & out, std::ostream & err)
{
  if (inv.subcommand == "calibrate") {return cmd_calibrate(inv, out, err);}
  if (inv.subcommand == "sort") {return cmd_sort(inv, out, err);}
  if (inv.subcommand == "replay") {return cmd_replay(inv, out, err);}
  if (inv.subcommand == "characterize") {return cmd_characterize(inv, out, err);}
  err << "error: unknown subcommand '" << inv.subcommand << "'\n";
  return kExitUsage;
}

}  // namespace fcsense::cli

#endif  // FCSENSE__COMMANDS_HPP_
