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

#ifndef FCSENSE__SENSOR_MODEL_HPP_
#define FCSENSE__SENSOR_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fcsense/error.hpp"
#include "fcsense/random.hpp"

namespace fcsense
{

inline constexpr double kSupplyVoltage = 5.0;

/// Behavioural forward model of one fiber-cavity channel: finger midpoint
/// displacement (mm) in, photoresistor voltage (V) out.
///
/// The response has three stages. Below `d_lo` the reading carries no trend
/// and sits at `v_rest`; between `d_lo` and `d_hi` it falls linearly with
/// `slope`; past `d_hi` it holds the value reached at `d_hi`. Stages one and
/// three use the larger `noise_sigma_unstable`.
struct SensorChannelModel
{
  int channel_id = 0;
  double v_rest = 4.5;
  double d_lo = 5.0;
  double d_hi = 30.0;
  double d_max = 35.0;
  double slope = -0.12;
  double noise_sigma_linear = 0.14;
  double noise_sigma_unstable = 0.32;
  double ambient_offset = 0.0;
  int adc_bits = 10;
  std::uint64_t rng_seed = 1;

  void validate() const
  {
    auto fail = [this](const std::string & msg) {
        throw Error(ErrorKind::Domain, "sensor channel " + std::to_string(channel_id) + ": " + msg);
      };
    if (!(v_rest >= 0.0 && v_rest <= kSupplyVoltage)) {fail("v_rest outside [0, 5] V");}
    if (!(d_lo > 0.0 && d_lo < d_hi && d_hi <= d_max)) {fail("require 0 < d_lo < d_hi <= d_max");}
    if (!(slope < 0.0)) {fail("slope must be negative");}
    if (!(noise_sigma_linear >= 0.0 && noise_sigma_unstable > noise_sigma_linear)) {
      fail("require noise_sigma_unstable > noise_sigma_linear >= 0");
    }
    if (!std::isfinite(ambient_offset)) {fail("ambient_offset must be finite");}
    if (adc_bits < 1 || adc_bits > 16) {fail("adc_bits must be in [1, 16]");}
  }

  bool operator==(const SensorChannelModel &) const = default;
};

enum class SensorStage { Unstable, Linear, Saturated };

inline SensorStage stage_at(const SensorChannelModel & model, double displacement)
{
  if (displacement < model.d_lo) {return SensorStage::Unstable;}
  if (displacement <= model.d_hi) {return SensorStage::Linear;}
  return SensorStage::Saturated;
}

inline int adc_max_count(int adc_bits) {return (1 << adc_bits) - 1;}

/// Voltage represented by one ADC count.
inline double adc_step(int adc_bits) {return kSupplyVoltage / adc_max_count(adc_bits);}

inline std::uint16_t to_adc_count(double voltage, int adc_bits)
{
  const double v = std::clamp(voltage, 0.0, kSupplyVoltage);
  return static_cast<std::uint16_t>(std::lround(v / kSupplyVoltage * adc_max_count(adc_bits)));
}

inline double from_adc_count(std::uint16_t count, int adc_bits)
{
  return count * kSupplyVoltage / adc_max_count(adc_bits);
}

/// Clamp to the supply range and snap to the nearest ADC level.
inline double quantize(double voltage, int adc_bits)
{
  return from_adc_count(to_adc_count(voltage, adc_bits), adc_bits);
}

namespace detail
{

inline void check_displacement(const SensorChannelModel & model, double displacement)
{
  if (!(displacement >= 0.0 && displacement <= model.d_max)) {
    throw Error(
      ErrorKind::Domain, "displacement " + std::to_string(displacement) + " mm outside [0, " +
      std::to_string(model.d_max) + "]");
  }
}

inline double deterministic_voltage(const SensorChannelModel & model, double displacement)
{
  const double d = std::clamp(displacement, model.d_lo, model.d_hi);
  if (displacement < model.d_lo) {
    return model.v_rest + model.ambient_offset;
  }
  return model.v_rest + model.slope * (d - model.d_lo) + model.ambient_offset;
}

}  // namespace detail

/// Noise-free reading.
inline double voltage_at(const SensorChannelModel & model, double displacement)
{
  detail::check_displacement(model, displacement);
  return quantize(detail::deterministic_voltage(model, displacement), model.adc_bits);
}

/// Noisy reading; draws one Gaussian sample from `rng`.
inline double voltage_at(const SensorChannelModel & model, double displacement, Rng & rng)
{
  detail::check_displacement(model, displacement);
  const double sigma = stage_at(model, displacement) == SensorStage::Linear ?
    model.noise_sigma_linear : model.noise_sigma_unstable;
  double v = detail::deterministic_voltage(model, displacement);
  if (sigma > 0.0) {
    v += std::normal_distribution<double>(0.0, sigma)(rng);
  }
  return quantize(v, model.adc_bits);
}

struct SensorReading
{
  double timestamp_ms = 0.0;
  int channel_id = 0;
  double voltage = 0.0;

  bool operator==(const SensorReading &) const = default;
};

struct PathPoint
{
  double time_ms = 0.0;
  double displacement_mm = 0.0;
};

/// Linear interpolation of a displacement path; clamps outside its time span.
inline double interpolate_path(std::span<const PathPoint> path, double t_ms)
{
  if (t_ms <= path.front().time_ms) {return path.front().displacement_mm;}
  if (t_ms >= path.back().time_ms) {return path.back().displacement_mm;}
  auto hi = std::upper_bound(
    path.begin(), path.end(), t_ms,
    [](double t, const PathPoint & p) {return t < p.time_ms;});
  auto lo = hi - 1;
  const double u = (t_ms - lo->time_ms) / (hi->time_ms - lo->time_ms);
  return lo->displacement_mm + u * (hi->displacement_mm - lo->displacement_mm);
}

/// Samples the channel at `rate_hz` over the time span of `path`. Noise is
/// drawn from a generator seeded with `model.rng_seed`, so a given
/// (model, path, rate) always yields the same trace.
inline std::vector<SensorReading> sample_trace(
  const SensorChannelModel & model, std::span<const PathPoint> path, double rate_hz,
  bool noise = true)
{
  if (path.empty()) {
    throw Error(ErrorKind::Domain, "empty displacement path");
  }
  if (!(rate_hz > 0.0)) {
    throw Error(ErrorKind::Domain, "sample rate must be positive");
  }
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (!(path[i].time_ms > path[i - 1].time_ms)) {
      throw Error(ErrorKind::Domain, "path timestamps must be strictly increasing");
    }
  }

  Rng rng(model.rng_seed);
  const double period_ms = 1000.0 / rate_hz;
  const double t0 = path.front().time_ms;
  const double span_ms = path.back().time_ms - t0;
  const auto n = static_cast<std::size_t>(std::floor(span_ms / period_ms + 1e-9)) + 1;

  std::vector<SensorReading> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * period_ms;
    const double d = interpolate_path(path, t);
    const double v = noise ? voltage_at(model, d, rng) : voltage_at(model, d);
    out.push_back({t, model.channel_id, v});
  }
  return out;
}

/// Copy of `model` with the slope scaled by a factor in
/// [1 - gain_spread, 1 + gain_spread] and v_rest shifted within
/// +/- offset_spread, both drawn uniformly from `seed`.
inline SensorChannelModel with_fabrication_variation(
  const SensorChannelModel & model, std::uint64_t seed, double gain_spread, double offset_spread)
{
  if (!(gain_spread >= 0.0 && offset_spread >= 0.0)) {
    throw Error(ErrorKind::Domain, "fabrication spreads must be non-negative");
  }
  SensorChannelModel out = model;
  if (gain_spread == 0.0 && offset_spread == 0.0) {
    return out;
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double gain = 1.0 + gain_spread * unit(rng);
  const double offset = offset_spread * unit(rng);
  out.slope = model.slope * std::max(gain, 1e-6);
  out.v_rest = std::clamp(model.v_rest + offset, 0.0, kSupplyVoltage);
  return out;
}

}  // namespace fcsense

#endif  // FCSENSE__SENSOR_MODEL_HPP_
