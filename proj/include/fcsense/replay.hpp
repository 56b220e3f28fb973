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

#ifndef FCSENSE__REPLAY_HPP_
#define FCSENSE__REPLAY_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fcsense/calibration.hpp"
#include "fcsense/estimation.hpp"
#include "fcsense/grasp_sim.hpp"
#include "fcsense/telemetry.hpp"

namespace fcsense
{

/// Idle time between grasps written by `episodes_to_telemetry`, and the
/// threshold `segment_grasps` uses to split a stream back into grasps.
inline constexpr std::uint32_t kInterGraspIdleMs = 1000;
inline constexpr double kGraspSplitMs = 500.0;

/// Serializes the voltage traces of grasped episodes as a frame stream.
/// Slipped episodes carry no traces and are skipped.
inline std::vector<std::uint8_t> episodes_to_telemetry(std::span<const GraspEpisode> episodes)
{
  std::vector<std::uint8_t> bytes;
  std::uint16_t seq = 0;
  std::uint32_t time_base = 0;
  for (const auto & ep : episodes) {
    if (ep.traces.empty()) {continue;}
    if (ep.traces.size() != kFrameChannels) {
      throw Error(ErrorKind::Domain, "telemetry frames carry exactly 8 channels");
    }
    const std::size_t n = ep.traces.front().size();
    std::uint32_t last = time_base;
    for (std::size_t i = 0; i < n; ++i) {
      TelemetryFrame f;
      f.sequence = seq++;
      f.timestamp_ms = time_base + static_cast<std::uint32_t>(std::lround(ep.traces.front()[i].timestamp_ms));
      for (std::size_t c = 0; c < kFrameChannels; ++c) {
        f.channels[c] = to_adc_count(ep.traces[c].at(i).voltage, kFrameAdcBits);
      }
      const auto enc = encode_frame(f);
      bytes.insert(bytes.end(), enc.begin(), enc.end());
      last = f.timestamp_ms;
    }
    time_base = last + kInterGraspIdleMs;
  }
  return bytes;
}

/// Splits frames wherever the timestamp jumps by more than `split_ms` or runs
/// backwards.
inline std::vector<std::span<const TelemetryFrame>> segment_grasps(
  std::span<const TelemetryFrame> frames, double split_ms = kGraspSplitMs)
{
  std::vector<std::span<const TelemetryFrame>> out;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= frames.size(); ++i) {
    const bool boundary = i == frames.size() ||
      frames[i].timestamp_ms <= frames[i - 1].timestamp_ms ||
      static_cast<double>(frames[i].timestamp_ms - frames[i - 1].timestamp_ms) > split_ms;
    if (boundary && i > start) {
      out.push_back(frames.subspan(start, i - start));
      start = i;
    }
  }
  return out;
}

/// Hold-window statistics over the last `hold_samples` frames.
inline std::vector<ChannelSteadyState> steady_from_frames(
  std::span<const TelemetryFrame> segment, std::size_t hold_samples)
{
  const std::size_t take = std::min(hold_samples, segment.size());
  std::vector<ChannelSteadyState> out;
  std::vector<double> window;
  for (std::size_t c = 0; c < kFrameChannels; ++c) {
    window.clear();
    for (std::size_t i = segment.size() - take; i < segment.size(); ++i) {
      window.push_back(segment[i].voltage(c));
    }
    out.push_back(steady_state_of(window));
  }
  return out;
}

struct ReplayedGrasp
{
  std::size_t frame_count = 0;
  std::vector<ChannelSteadyState> steady;
  PairAggregate aggregate;
  double force = 0.0;
  /// Present only when the gripper gaps for this grasp are known.
  std::optional<GraspEstimate> estimate;
  std::vector<FilteredSample<kFrameChannels>> filtered;
};

struct ReplayResult
{
  StreamStats stats;
  std::vector<ReplayedGrasp> grasps;
};

/// Parses a recorded byte log and estimates every grasp in it. `gaps`, when
/// given, supplies gripper feedback for the n-th grasp.
inline ReplayResult replay_stream(
  std::span<const std::uint8_t> bytes, const CalibrationProfile & profile,
  const EstimationConfig & config, std::size_t hold_samples, std::size_t filter_window,
  std::span<const GraspObservation> gaps = {})
{
  ReplayResult result;
  const auto frames = resync_stream(bytes, &result.stats);
  for (const auto segment : segment_grasps(frames)) {
    ReplayedGrasp g;
    g.frame_count = segment.size();
    g.steady = steady_from_frames(segment, hold_samples);
    g.aggregate = aggregate_pairs(profile, g.steady, config.pair_map, config.aggregation);
    const double mid = std::clamp(
      g.aggregate.midpoint_displacement, config.force_curve.min_displacement(),
      config.force_curve.max_displacement());
    g.force = estimate_force(config.force_curve, mid);
    const std::size_t idx = result.grasps.size();
    if (idx < gaps.size()) {
      GraspObservation obs = gaps[idx];
      obs.steady = g.steady;
      g.estimate = estimate_grasp(profile, obs, config);
    }
    const auto samples = frames_to_samples(segment);
    g.filtered = filter_and_differentiate<kFrameChannels>(samples, filter_window);
    result.grasps.push_back(std::move(g));
  }
  return result;
}

}  // namespace fcsense

#endif  // FCSENSE__REPLAY_HPP_
