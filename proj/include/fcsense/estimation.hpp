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

#ifndef FCSENSE__ESTIMATION_HPP_
#define FCSENSE__ESTIMATION_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcsense/calibration.hpp"
#include "fcsense/error.hpp"

namespace fcsense
{

/// Finger contact force as a function of midpoint displacement, for a single
/// finger. `finger_multiplicity` scales it for fingers acting in parallel.
struct ForceCurve
{
  std::vector<Point2> samples{{0.0, 0.0}, {5.0, 1.0}, {30.0, 6.0}};
  int finger_multiplicity = 2;

  void validate() const
  {
    if (samples.size() < 2) {
      throw Error(ErrorKind::Domain, "force curve needs at least 2 samples");
    }
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (!(samples[i].x > samples[i - 1].x)) {
        throw Error(ErrorKind::Domain, "force curve displacements must be strictly increasing");
      }
      if (samples[i].y < samples[i - 1].y) {
        throw Error(ErrorKind::Domain, "force curve forces must be non-decreasing");
      }
    }
    if (finger_multiplicity < 1) {
      throw Error(ErrorKind::Domain, "finger multiplicity must be >= 1");
    }
  }

  double min_displacement() const {return samples.front().x;}
  double max_displacement() const {return samples.back().x;}
  double max_force() const {return samples.back().y * finger_multiplicity;}

  bool operator==(const ForceCurve &) const = default;
};

/// Piecewise-linear force at `displacement`, times the finger multiplicity.
inline double estimate_force(const ForceCurve & curve, double displacement)
{
  if (!(displacement >= curve.min_displacement() && displacement <= curve.max_displacement())) {
    throw Error(
      ErrorKind::Extrapolation,
      "displacement " + std::to_string(displacement) + " mm outside force curve");
  }
  auto hi = std::lower_bound(
    curve.samples.begin(), curve.samples.end(), displacement,
    [](const Point2 & p, double d) {return p.x < d;});
  double f;
  if (hi->x == displacement) {
    f = hi->y;
  } else {
    auto lo = hi - 1;
    f = lo->y + (displacement - lo->x) / (hi->x - lo->x) * (hi->y - lo->y);
  }
  return f * curve.finger_multiplicity;
}

// ---------------------------------------------------------------------------

enum class Anomaly : std::uint8_t
{
  BelowValidRange = 1u << 0,
  AboveValidRange = 1u << 1,
  PairDisagreement = 1u << 2,
  ContactShadowing = 1u << 3,
};

inline constexpr std::array<Anomaly, 4> kAllAnomalies{
  Anomaly::BelowValidRange, Anomaly::AboveValidRange, Anomaly::PairDisagreement,
  Anomaly::ContactShadowing};

inline std::string_view to_string(Anomaly a)
{
  switch (a) {
    case Anomaly::BelowValidRange: return "below-valid-range";
    case Anomaly::AboveValidRange: return "above-valid-range";
    case Anomaly::PairDisagreement: return "pair-disagreement";
    case Anomaly::ContactShadowing: return "contact-shadowing";
  }
  return "?";
}

class AnomalySet
{
public:
  AnomalySet() = default;

  void insert(Anomaly a) {bits_ |= static_cast<std::uint8_t>(a);}
  bool contains(Anomaly a) const {return (bits_ & static_cast<std::uint8_t>(a)) != 0;}
  bool empty() const {return bits_ == 0;}
  std::uint8_t bits() const {return bits_;}

  std::vector<std::string> names() const
  {
    std::vector<std::string> out;
    for (auto a : kAllAnomalies) {
      if (contains(a)) {out.emplace_back(to_string(a));}
    }
    return out;
  }

  /// Inverse of `names()`; unknown names are a malformed-document error.
  static AnomalySet from_names(std::span<const std::string> names)
  {
    AnomalySet s;
    for (const auto & n : names) {
      auto it = std::find_if(
        kAllAnomalies.begin(), kAllAnomalies.end(), [&](Anomaly a) {return to_string(a) == n;});
      if (it == kAllAnomalies.end()) {
        throw Error(ErrorKind::MalformedDocument, "unknown anomaly '" + n + "'");
      }
      s.insert(*it);
    }
    return s;
  }

  bool operator==(const AnomalySet &) const = default;

private:
  std::uint8_t bits_ = 0;
};

// ---------------------------------------------------------------------------

/// Which channels form sensing pairs, and which pairs are the intermediate
/// ones used for estimation. Default layout: channels (0,1) (2,3) (4,5) (6,7),
/// intermediate pairs 1 and 2.
struct PairMap
{
  std::vector<std::array<int, 2>> pairs{{0, 1}, {2, 3}, {4, 5}, {6, 7}};
  std::vector<std::size_t> intermediate{1, 2};

  bool operator==(const PairMap &) const = default;
};

/// Steady-state statistics of one channel over the hold window.
struct ChannelSteadyState
{
  double voltage = 0.0;
  double stddev = 0.0;

  bool operator==(const ChannelSteadyState &) const = default;
};

inline ChannelSteadyState steady_state_of(std::span<const double> voltages)
{
  if (voltages.empty()) {
    throw Error(ErrorKind::InsufficientData, "empty hold window");
  }
  double mean = 0.0;
  for (double v : voltages) {mean += v;}
  mean /= static_cast<double>(voltages.size());
  double var = 0.0;
  for (double v : voltages) {var += (v - mean) * (v - mean);}
  const double n = static_cast<double>(voltages.size());
  return {mean, voltages.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0};
}

struct AggregationOptions
{
  /// Pair values further apart than this raise pair-disagreement (mm).
  double pair_tolerance = 4.0;
  /// Hold-window std-dev above which a channel is treated as outside the
  /// linear stage (V). Zero disables the check.
  double instability_sigma = 0.22;

  bool operator==(const AggregationOptions &) const = default;
};

struct PairContact
{
  double displacement = 0.0;
  RangeStatus status = RangeStatus::InRange;
};

struct PairAggregate
{
  /// One entry per intermediate pair, in `PairMap::intermediate` order.
  std::vector<PairContact> pairs;
  double midpoint_displacement = 0.0;
  AnomalySet anomalies;
};

/// Channel status from the calibrated displacement, overridden by the
/// hold-window spread: a reading as noisy as the unstable stages cannot be
/// placed on the calibrated line, so it is assigned to the nearer end.
inline DisplacementReading channel_displacement(
  const CalibrationProfile & profile, int channel_id, const ChannelSteadyState & steady,
  const AggregationOptions & options)
{
  DisplacementReading r = voltage_to_displacement(profile, channel_id, steady.voltage);
  if (options.instability_sigma > 0.0 && steady.stddev > options.instability_sigma) {
    const auto & iv = profile.valid_interval;
    r.status = r.displacement < 0.5 * (iv.lo + iv.hi) ? RangeStatus::BelowRange :
      RangeStatus::AboveRange;
  }
  return r;
}

inline PairAggregate aggregate_pairs(
  const CalibrationProfile & profile, std::span<const ChannelSteadyState> steady,
  const PairMap & pair_map, const AggregationOptions & options = {})
{
  if (pair_map.intermediate.size() < 2) {
    throw Error(ErrorKind::Domain, "pair map must name two intermediate pairs");
  }
  PairAggregate out;
  for (std::size_t idx : pair_map.intermediate) {
    if (idx >= pair_map.pairs.size()) {
      throw Error(ErrorKind::Domain, "intermediate pair index out of range");
    }
    PairContact pc;
    bool below = false;
    bool above = false;
    for (int ch : pair_map.pairs[idx]) {
      if (ch < 0 || static_cast<std::size_t>(ch) >= steady.size()) {
        throw Error(ErrorKind::MissingChannel, "no reading for channel " + std::to_string(ch));
      }
      const auto r = channel_displacement(profile, ch, steady[static_cast<std::size_t>(ch)], options);
      pc.displacement += 0.5 * r.displacement;
      below = below || r.status == RangeStatus::BelowRange;
      above = above || r.status == RangeStatus::AboveRange;
    }
    if (below) {
      pc.status = RangeStatus::BelowRange;
      out.anomalies.insert(Anomaly::BelowValidRange);
    } else if (above) {
      pc.status = RangeStatus::AboveRange;
    }
    if (above) {
      out.anomalies.insert(Anomaly::AboveValidRange);
    }
    out.pairs.push_back(pc);
  }

  double lo = out.pairs.front().displacement;
  double hi = lo;
  double sum = 0.0;
  for (const auto & p : out.pairs) {
    lo = std::min(lo, p.displacement);
    hi = std::max(hi, p.displacement);
    sum += p.displacement;
  }
  out.midpoint_displacement = sum / static_cast<double>(out.pairs.size());
  if (hi - lo > options.pair_tolerance) {
    out.anomalies.insert(Anomaly::PairDisagreement);
  }
  return out;
}

/// Convenience overload for bare steady voltages (no spread information).
inline PairAggregate aggregate_pairs(
  const CalibrationProfile & profile, std::span<const double> voltages,
  const PairMap & pair_map, const AggregationOptions & options = {})
{
  std::vector<ChannelSteadyState> steady;
  steady.reserve(voltages.size());
  for (double v : voltages) {steady.push_back({v, 0.0});}
  return aggregate_pairs(profile, steady, pair_map, options);
}

/// One pair touching the object while another never leaves the unstable
/// stage: the wide section of the object is holding the gripper open.
inline bool detect_contact_shadowing(std::span<const PairContact> pairs)
{
  if (pairs.size() < 2) {
    return false;
  }
  const bool any_contact = std::any_of(
    pairs.begin(), pairs.end(),
    [](const PairContact & p) {return p.status != RangeStatus::BelowRange;});
  const bool any_below = std::any_of(
    pairs.begin(), pairs.end(),
    [](const PairContact & p) {return p.status == RangeStatus::BelowRange;});
  return any_contact && any_below;
}

// ---------------------------------------------------------------------------

/// Sectional diameter under grasp: gripper gap plus the deflection of every
/// active finger.
inline double estimate_diameter(
  double midpoint_displacement, double gap_at_steady_state, int n_active_fingers = 2)
{
  if (midpoint_displacement < 0.0 || gap_at_steady_state < 0.0 || n_active_fingers < 1) {
    throw Error(ErrorKind::Domain, "diameter inputs must be non-negative");
  }
  return gap_at_steady_state + n_active_fingers * midpoint_displacement;
}

/// (contact width - width under load) / contact width, clamped to [0, 1).
/// Empty when the displacement never entered the valid interval.
inline std::optional<double> estimate_strain(
  double gap_at_contact, double estimated_diameter, bool displacement_below_range = false)
{
  if (!(gap_at_contact > 0.0)) {
    throw Error(ErrorKind::Domain, "gap at contact must be positive");
  }
  if (displacement_below_range) {
    return std::nullopt;
  }
  const double strain = (gap_at_contact - estimated_diameter) / gap_at_contact;
  return std::clamp(strain, 0.0, std::nextafter(1.0, 0.0));
}

struct SortingBoundary
{
  double strain_threshold = 0.10;

  void validate() const
  {
    if (!(strain_threshold > 0.0 && strain_threshold < 1.0)) {
      throw Error(ErrorKind::Domain, "strain threshold must lie in (0, 1)");
    }
  }

  bool operator==(const SortingBoundary &) const = default;
};

enum class Classification { Soft, Rigid, Unrecognizable };

inline std::string_view to_string(Classification c)
{
  switch (c) {
    case Classification::Soft: return "soft";
    case Classification::Rigid: return "rigid";
    case Classification::Unrecognizable: return "unrecognizable";
  }
  return "?";
}

inline Classification classification_from_string(std::string_view s)
{
  if (s == "soft") {return Classification::Soft;}
  if (s == "rigid") {return Classification::Rigid;}
  if (s == "unrecognizable") {return Classification::Unrecognizable;}
  throw Error(ErrorKind::MalformedDocument, "unknown classification '" + std::string(s) + "'");
}

inline Classification classify(std::optional<double> strain, const SortingBoundary & boundary)
{
  if (!strain) {
    return Classification::Unrecognizable;
  }
  return *strain >= boundary.strain_threshold ? Classification::Soft : Classification::Rigid;
}

// ---------------------------------------------------------------------------

/// What the gripper and sensors report for one grasp.
struct GraspObservation
{
  double gap_at_contact = 0.0;
  double gap_at_steady = 0.0;
  /// Hold-window statistics; the index is the channel id.
  std::vector<ChannelSteadyState> steady;

  bool operator==(const GraspObservation &) const = default;
};

struct EstimationConfig
{
  PairMap pair_map{};
  AggregationOptions aggregation{};
  int n_active_fingers = 2;
  ForceCurve force_curve{};
  SortingBoundary boundary{};

  bool operator==(const EstimationConfig &) const = default;
};

struct GraspEstimate
{
  std::vector<double> pair_displacements;
  double midpoint_displacement = 0.0;
  double estimated_diameter = 0.0;
  std::optional<double> estimated_strain;
  double estimated_force = 0.0;
  Classification classification = Classification::Unrecognizable;
  AnomalySet anomalies;

  bool operator==(const GraspEstimate &) const = default;
};

/// Full estimation chain for one grasp: pair aggregation, anomaly checks,
/// diameter, strain, force and soft/rigid decision.
inline GraspEstimate estimate_grasp(
  const CalibrationProfile & profile, const GraspObservation & obs, const EstimationConfig & config)
{
  const PairAggregate agg = aggregate_pairs(profile, obs.steady, config.pair_map, config.aggregation);

  GraspEstimate est;
  est.anomalies = agg.anomalies;
  if (detect_contact_shadowing(agg.pairs)) {
    est.anomalies.insert(Anomaly::ContactShadowing);
  }
  for (const auto & p : agg.pairs) {
    est.pair_displacements.push_back(p.displacement);
  }
  est.midpoint_displacement = agg.midpoint_displacement;

  const double mid = std::max(0.0, agg.midpoint_displacement);
  est.estimated_diameter = estimate_diameter(
    mid, std::max(0.0, obs.gap_at_steady), config.n_active_fingers);
  est.estimated_strain = estimate_strain(
    obs.gap_at_contact, est.estimated_diameter,
    est.anomalies.contains(Anomaly::BelowValidRange));
  est.estimated_force = estimate_force(
    config.force_curve,
    std::clamp(mid, config.force_curve.min_displacement(), config.force_curve.max_displacement()));
  est.classification = classify(est.estimated_strain, config.boundary);
  return est;
}

}  // namespace fcsense

#endif  // FCSENSE__ESTIMATION_HPP_
