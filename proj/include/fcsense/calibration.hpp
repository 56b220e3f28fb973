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

#ifndef FCSENSE__CALIBRATION_HPP_
#define FCSENSE__CALIBRATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fcsense/error.hpp"

namespace fcsense
{

struct Point2
{
  double x = 0.0;
  double y = 0.0;

  auto operator<=>(const Point2 &) const = default;
};

struct LinearFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline double sum_squared_error(std::span<const Point2> points, double slope, double intercept)
{
  double sse = 0.0;
  for (const auto & p : points) {
    const double r = p.y - (intercept + slope * p.x);
    sse += r * r;
  }
  return sse;
}

/// Ordinary least squares y = intercept + slope * x.
///
/// r_squared = 1 - SS_res / SS_tot, taken as 1 for a perfectly flat, perfectly
/// fitted series (SS_tot = SS_res = 0).
inline LinearFit fit_linear(std::span<const Point2> points)
{
  if (points.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "linear fit needs at least 2 points");
  }
  const bool flat_x = std::all_of(
    points.begin(), points.end(), [&](const Point2 & p) {return p.x == points.front().x;});
  if (flat_x) {
    throw Error(ErrorKind::DegenerateAbscissa, "all abscissae identical");
  }

  const double n = static_cast<double>(points.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto & p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;

  double sxx = 0.0;
  double sxy = 0.0;
  double ss_tot = 0.0;
  for (const auto & p : points) {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    ss_tot += dy * dy;
  }

  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = sum_squared_error(points, fit.slope, fit.intercept);
  if (ss_tot == 0.0) {
    fit.r_squared = ss_res == 0.0 ? 1.0 : 0.0;
  } else {
    fit.r_squared = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  }
  return fit;
}

struct CalibrationSample
{
  double plate_width = 0.0;
  double commanded_gap = 0.0;
  double implied_displacement = 0.0;
  /// Mean voltage per channel; the index is the channel id.
  std::vector<double> channel_voltages;
  int repetitions = 1;
};

/// Builds a sample from a plate grasp. The overtravel (plate width minus the
/// commanded gap) is shared equally by the deforming fingers.
inline CalibrationSample make_calibration_sample(
  double plate_width, double commanded_gap, int n_deforming_fingers,
  std::vector<double> channel_voltages, int repetitions = 1)
{
  if (!(plate_width > commanded_gap && commanded_gap >= 0.0)) {
    throw Error(ErrorKind::Domain, "require plate_width > commanded_gap >= 0");
  }
  if (n_deforming_fingers < 1 || repetitions < 1) {
    throw Error(ErrorKind::Domain, "finger count and repetitions must be >= 1");
  }
  CalibrationSample s;
  s.plate_width = plate_width;
  s.commanded_gap = commanded_gap;
  s.implied_displacement = (plate_width - commanded_gap) / n_deforming_fingers;
  s.channel_voltages = std::move(channel_voltages);
  s.repetitions = repetitions;
  return s;
}

struct ChannelFit
{
  int channel_id = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;

  bool operator==(const ChannelFit &) const = default;
};

struct ValidInterval
{
  double lo = 5.0;
  double hi = 30.0;

  bool contains(double d) const {return d >= lo && d <= hi;}
  double width() const {return hi - lo;}
  bool operator==(const ValidInterval &) const = default;
};

struct CalibrationProfile
{
  /// Accepted channels, ordered by channel id.
  std::vector<ChannelFit> channels;
  ValidInterval valid_interval;
  int n_deforming_fingers = 2;
  std::int64_t created_at = 0;
  double r2_threshold_used = 0.95;

  const ChannelFit * find(int channel_id) const
  {
    auto it = std::find_if(
      channels.begin(), channels.end(),
      [&](const ChannelFit & f) {return f.channel_id == channel_id;});
    return it == channels.end() ? nullptr : &*it;
  }

  const ChannelFit & channel(int channel_id) const
  {
    if (const auto * f = find(channel_id)) {
      return *f;
    }
    throw Error(ErrorKind::MissingChannel, "channel " + std::to_string(channel_id) + " not in profile");
  }

  bool operator==(const CalibrationProfile &) const = default;
};

/// Rescales each channel so the sample at the smallest displacement reads 1
/// and the one at the largest reads 0. Used for cross-channel comparison only.
inline std::vector<CalibrationSample> normalize_channels(std::span<const CalibrationSample> samples)
{
  if (samples.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "normalization needs at least 2 samples");
  }
  const auto by_disp = [](const CalibrationSample & a, const CalibrationSample & b) {
      return a.implied_displacement < b.implied_displacement;
    };
  const auto & first = *std::min_element(samples.begin(), samples.end(), by_disp);
  const auto & last = *std::max_element(samples.begin(), samples.end(), by_disp);
  const std::size_t n_channels = first.channel_voltages.size();

  std::vector<CalibrationSample> out(samples.begin(), samples.end());
  for (std::size_t c = 0; c < n_channels; ++c) {
    const double top = first.channel_voltages.at(c);
    const double bottom = last.channel_voltages.at(c);
    if (top == bottom) {
      throw Error(ErrorKind::DegenerateChannel, "channel " + std::to_string(c) + " is constant");
    }
    for (auto & s : out) {
      auto & v = s.channel_voltages.at(c);
      v = (v - bottom) / (top - bottom);
    }
  }
  return out;
}

struct CalibrationOptions
{
  double r2_threshold = 0.95;
  ValidInterval valid_interval{};
  int n_deforming_fingers = 2;
  std::int64_t created_at = 0;
  /// Minimum spread of implied displacements inside the valid interval.
  double min_span = 10.0;
};

/// Fits every channel on (implied displacement, voltage) using the samples
/// that fall inside the valid interval. Channels with r^2 below the threshold
/// or a non-negative slope are dropped.
inline CalibrationProfile calibrate(
  std::span<const CalibrationSample> samples, const CalibrationOptions & options = {})
{
  std::vector<const CalibrationSample *> used;
  std::set<double> distinct;
  for (const auto & s : samples) {
    if (options.valid_interval.contains(s.implied_displacement)) {
      used.push_back(&s);
      distinct.insert(s.implied_displacement);
    }
  }
  if (distinct.size() < 3) {
    throw Error(
      ErrorKind::InsufficientSpan,
      "need >= 3 distinct displacements inside the valid interval, got " +
      std::to_string(distinct.size()));
  }
  if (*distinct.rbegin() - *distinct.begin() < options.min_span) {
    throw Error(ErrorKind::InsufficientSpan, "displacements span less than the required range");
  }

  const std::size_t n_channels = used.front()->channel_voltages.size();
  for (const auto * s : used) {
    if (s->channel_voltages.size() != n_channels) {
      throw Error(ErrorKind::Domain, "samples disagree on channel count");
    }
  }

  CalibrationProfile profile;
  profile.valid_interval = options.valid_interval;
  profile.n_deforming_fingers = options.n_deforming_fingers;
  profile.created_at = options.created_at;
  profile.r2_threshold_used = options.r2_threshold;

  std::ostringstream rejected;
  std::vector<Point2> points;
  for (std::size_t c = 0; c < n_channels; ++c) {
    points.clear();
    for (const auto * s : used) {
      points.push_back({s->implied_displacement, s->channel_voltages[c]});
    }
    // Fixed summation order makes the fit independent of sample order.
    std::sort(points.begin(), points.end());
    const LinearFit fit = fit_linear(points);
    const bool accepted = fit.r_squared >= options.r2_threshold && fit.slope < 0.0;
    if (accepted) {
      profile.channels.push_back({static_cast<int>(c), fit.slope, fit.intercept, fit.r_squared});
    } else {
      rejected << " ch" << c << " r2=" << fit.r_squared << " slope=" << fit.slope << ";";
    }
  }
  if (profile.channels.empty()) {
    throw Error(ErrorKind::CalibrationFailed, "no channel accepted:" + rejected.str());
  }
  return profile;
}

enum class RangeStatus { InRange, BelowRange, AboveRange };

inline const char * to_string(RangeStatus s)
{
  switch (s) {
    case RangeStatus::InRange: return "in-range";
    case RangeStatus::BelowRange: return "below-range";
    case RangeStatus::AboveRange: return "above-range";
  }
  return "?";
}

struct DisplacementReading
{
  double displacement = 0.0;
  RangeStatus status = RangeStatus::InRange;
};

/// Inverts the calibrated line. Out-of-interval results are still returned,
/// tagged with their status.
inline DisplacementReading voltage_to_displacement(
  const CalibrationProfile & profile, int channel_id, double voltage)
{
  const ChannelFit & fit = profile.channel(channel_id);
  DisplacementReading r;
  r.displacement = (voltage - fit.intercept) / fit.slope;
  if (r.displacement < profile.valid_interval.lo) {
    r.status = RangeStatus::BelowRange;
  } else if (r.displacement > profile.valid_interval.hi) {
    r.status = RangeStatus::AboveRange;
  }
  return r;
}

struct ChannelDrift
{
  int channel_id = 0;
  double slope_ratio = 1.0;
  double intercept_delta = 0.0;
};

/// Per-channel change from profile `a` to profile `b`.
inline std::vector<ChannelDrift> profile_drift(const CalibrationProfile & a, const CalibrationProfile & b)
{
  if (a.channels.size() != b.channels.size()) {
    throw Error(ErrorKind::IncomparableProfiles, "profiles cover different channel sets");
  }
  std::vector<ChannelDrift> out;
  for (const auto & fa : a.channels) {
    const auto * fb = b.find(fa.channel_id);
    if (fb == nullptr) {
      throw Error(
        ErrorKind::IncomparableProfiles,
        "channel " + std::to_string(fa.channel_id) + " missing from second profile");
    }
    out.push_back({fa.channel_id, fb->slope / fa.slope, fb->intercept - fa.intercept});
  }
  return out;
}

}  // namespace fcsense

#endif  // FCSENSE__CALIBRATION_HPP_
