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

#ifndef FCSENSE__GRASP_SIM_HPP_
#define FCSENSE__GRASP_SIM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcsense/calibration.hpp"
#include "fcsense/error.hpp"
#include "fcsense/estimation.hpp"
#include "fcsense/random.hpp"
#include "fcsense/sensor_model.hpp"

namespace fcsense
{

enum class ShapeClass { Prismatic, Sphere, Slender, Irregular };

inline std::string_view to_string(ShapeClass s)
{
  switch (s) {
    case ShapeClass::Prismatic: return "prismatic";
    case ShapeClass::Sphere: return "sphere";
    case ShapeClass::Slender: return "slender";
    case ShapeClass::Irregular: return "irregular";
  }
  return "?";
}

inline ShapeClass shape_from_string(std::string_view s)
{
  if (s == "prismatic") {return ShapeClass::Prismatic;}
  if (s == "sphere") {return ShapeClass::Sphere;}
  if (s == "slender") {return ShapeClass::Slender;}
  if (s == "irregular") {return ShapeClass::Irregular;}
  throw Error(ErrorKind::MalformedDocument, "unknown shape class '" + std::string(s) + "'");
}

/// Ground truth of one test object. Objects are linear springs across the
/// grasp axis.
struct ObjectSpec
{
  int id = 0;
  std::string name;
  /// Uncompressed width of the section the intermediate pairs measure (mm).
  double true_diameter = 50.0;
  /// N/mm; very large means rigid.
  double stiffness = 1000.0;
  /// Strain at the gripper force setpoint, capped at 1 (fully crushed).
  double true_strain_at_force = 0.0;
  ShapeClass shape_class = ShapeClass::Prismatic;
  bool graspable = true;
  /// Irregular objects only: width of the wider section that the first
  /// intermediate pair lands on (mm).
  double wide_section_diameter = 0.0;

  bool operator==(const ObjectSpec &) const = default;
};

struct GripperConfig
{
  double max_gap = 160.0;
  double closing_speed = 50.0;
  double force_setpoint = 8.0;
  ForceCurve force_curve{};
  int n_active_fingers = 2;

  void validate() const
  {
    force_curve.validate();
    if (!(max_gap > 0.0 && closing_speed > 0.0)) {
      throw Error(ErrorKind::Domain, "gripper max_gap and closing_speed must be positive");
    }
    if (!(force_setpoint > 0.0 && force_setpoint <= force_curve.max_force())) {
      throw Error(ErrorKind::Domain, "force setpoint outside the finger force curve range");
    }
    if (n_active_fingers < 1) {
      throw Error(ErrorKind::Domain, "n_active_fingers must be >= 1");
    }
  }

  bool operator==(const GripperConfig &) const = default;
};

inline double true_strain_at_force(double force, double stiffness, double diameter)
{
  return std::min(force / (stiffness * diameter), 1.0);
}

/// Perturbations and timing of the simulated hardware.
struct SimulatorConfig
{
  double sample_rate_hz = 100.0;
  std::size_t hold_samples = 150;
  double approach_margin = 5.0;
  /// Fractional displacement loss of the second intermediate pair on spheres.
  double sphere_skew = 0.30;
  /// Per-episode, per-channel ambient light change since calibration (V).
  double ambient_drift_sigma = 0.05;
  /// Gripper width feedback noise (mm).
  double width_noise_sigma = 0.3;
  /// Deviation of the grasped section from the nominal object width (mm).
  double section_sigma = 2.0;
  bool sensor_noise = true;
  PairMap pair_map{};

  bool operator==(const SimulatorConfig &) const = default;
};

// ---------------------------------------------------------------------------
// Statics

struct Equilibrium
{
  double displacement = 0.0;
  double compression = 0.0;
  double finger_force = 0.0;
  double object_force = 0.0;
};

inline constexpr double kSolverTolerance = 1e-9;

/// Smallest displacement whose total finger force reaches `force`; returns the
/// upper bisection bracket so the force is never below the target.
inline double displacement_for_force(const ForceCurve & curve, double force, double tol = kSolverTolerance)
{
  double lo = curve.min_displacement();
  double hi = curve.max_displacement();
  if (estimate_force(curve, lo) >= force) {return lo;}
  if (estimate_force(curve, hi) < force) {
    throw Error(ErrorKind::Domain, "force beyond finger force curve");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (estimate_force(curve, mid) >= force ? hi : lo) = mid;
  }
  return hi;
}

/// Series spring balance for a closure overtravel `overtravel`:
///   n * d + F(d) / k = overtravel,  object compression c = F(d) / k.
/// Solved by bisection on d; the lower bracket is returned so the implied
/// overtravel never exceeds the commanded one.
inline Equilibrium solve_equilibrium(
  const ForceCurve & curve, double stiffness, int n_active_fingers, double overtravel,
  double tol = kSolverTolerance)
{
  const auto excess = [&](double d) {
      return n_active_fingers * d + estimate_force(curve, d) / stiffness - overtravel;
    };
  double lo = curve.min_displacement();
  double hi = curve.max_displacement();
  double d;
  if (excess(lo) >= 0.0) {
    d = lo;
  } else if (excess(hi) <= 0.0) {
    d = hi;
  } else {
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) <= 0.0 ? lo : hi) = mid;
    }
    d = lo;
  }
  Equilibrium eq;
  eq.displacement = d;
  eq.finger_force = estimate_force(curve, d);
  eq.compression = eq.finger_force / stiffness;
  eq.object_force = stiffness * eq.compression;
  return eq;
}

// ---------------------------------------------------------------------------
// Episodes

enum class GraspOutcome { Held, ForceNotReached, Slipped };

inline std::string_view to_string(GraspOutcome o)
{
  switch (o) {
    case GraspOutcome::Held: return "held";
    case GraspOutcome::ForceNotReached: return "force-not-reached";
    case GraspOutcome::Slipped: return "slipped";
  }
  return "?";
}

inline GraspOutcome outcome_from_string(std::string_view s)
{
  if (s == "held") {return GraspOutcome::Held;}
  if (s == "force-not-reached") {return GraspOutcome::ForceNotReached;}
  if (s == "slipped") {return GraspOutcome::Slipped;}
  throw Error(ErrorKind::MalformedDocument, "unknown grasp outcome '" + std::string(s) + "'");
}

struct GraspEpisode
{
  ObjectSpec object;
  GraspOutcome outcome = GraspOutcome::Slipped;
  std::uint64_t seed = 0;

  // Ground truth geometry (mm).
  double gap_at_contact = 0.0;
  double gap_at_steady = 0.0;
  double midpoint_displacement = 0.0;
  double object_compression = 0.0;
  double true_compressed_diameter = 0.0;
  /// True displacement of every pair in `SimulatorConfig::pair_map` order.
  std::vector<double> pair_displacements;

  double achieved_force = 0.0;
  double object_force = 0.0;

  /// Gripper feedback and hold-window statistics as the estimator sees them.
  GraspObservation observation;
  /// One voltage trace per channel.
  std::vector<std::vector<SensorReading>> traces;
};

namespace detail
{

inline std::vector<double> pair_displacements_for(
  const ObjectSpec & object, const SimulatorConfig & sim, double d_mid, double gap,
  int n_active_fingers)
{
  const auto & pm = sim.pair_map;
  std::vector<double> out(pm.pairs.size(), d_mid);
  if (pm.intermediate.size() < 2) {
    return out;
  }
  const std::size_t second = pm.intermediate[1];
  switch (object.shape_class) {
    case ShapeClass::Sphere:
      out[second] = d_mid * (1.0 - sim.sphere_skew);
      break;
    case ShapeClass::Irregular:
      // Only touches the narrow section once the gap closes below it.
      out[second] = std::clamp((object.true_diameter - gap) / n_active_fingers, 0.0, d_mid);
      break;
    default:
      break;
  }
  return out;
}

}  // namespace detail

/// Closes a parallel gripper on `object` and records the sensor response.
///
/// After contact the closure advances at the configured speed, and at every
/// sample the finger/object spring balance is solved. Closing stops once the
/// finger force reaches the setpoint, or the gap reaches zero first
/// (force-not-reached). The final state is then held for
/// `sim.hold_samples`, whose statistics form the observation.
inline GraspEpisode run_grasp(
  const GripperConfig & gripper, const ObjectSpec & object,
  std::span<const SensorChannelModel> sensors, const SimulatorConfig & sim, std::uint64_t seed)
{
  gripper.validate();
  GraspEpisode ep;
  ep.object = object;
  ep.seed = seed;

  Rng rng(derive_seed(seed, {0}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double section_dev = sim.section_sigma * gauss(rng);
  const double width_noise_contact = sim.width_noise_sigma * gauss(rng);
  const double width_noise_steady = sim.width_noise_sigma * gauss(rng);

  const double contact_width = object.shape_class == ShapeClass::Irregular ?
    object.wide_section_diameter : object.true_diameter + section_dev;
  if (!object.graspable || !(contact_width > 0.0) || contact_width > gripper.max_gap) {
    ep.outcome = GraspOutcome::Slipped;
    return ep;
  }

  const int n = gripper.n_active_fingers;
  const ForceCurve & curve = gripper.force_curve;
  const double k = object.stiffness;

  Equilibrium final_eq;
  const double d_set = displacement_for_force(curve, gripper.force_setpoint);
  final_eq.displacement = d_set;
  final_eq.finger_force = estimate_force(curve, d_set);
  final_eq.compression = final_eq.finger_force / k;
  final_eq.object_force = k * final_eq.compression;
  double final_overtravel = n * final_eq.displacement + final_eq.compression;
  ep.outcome = GraspOutcome::Held;
  if (final_overtravel > contact_width) {
    ep.outcome = GraspOutcome::ForceNotReached;
    final_eq = solve_equilibrium(curve, k, n, contact_width);
    final_overtravel = n * final_eq.displacement + final_eq.compression;
  }

  ep.gap_at_contact = contact_width;
  ep.midpoint_displacement = final_eq.displacement;
  ep.object_compression = final_eq.compression;
  ep.gap_at_steady = contact_width - final_eq.compression - n * final_eq.displacement;
  ep.true_compressed_diameter = contact_width - final_eq.compression;
  ep.achieved_force = final_eq.finger_force;
  ep.object_force = final_eq.object_force;
  ep.pair_displacements = detail::pair_displacements_for(
    object, sim, ep.midpoint_displacement, ep.gap_at_steady, n);

  // Displacement path per pair: approach, closing, hold.
  const double period = 1000.0 / sim.sample_rate_hz;
  const double t_contact = sim.approach_margin / gripper.closing_speed * 1000.0;
  const double t_final = t_contact + final_overtravel / gripper.closing_speed * 1000.0;
  const double t_end = t_final + static_cast<double>(sim.hold_samples) * period;
  const std::size_t n_pairs = sim.pair_map.pairs.size();
  const double d_cap = sensors.empty() ? 0.0 : sensors.front().d_max;

  std::vector<std::vector<PathPoint>> paths(n_pairs);
  auto push = [&](double t, const std::vector<double> & pair_d) {
      for (std::size_t p = 0; p < n_pairs; ++p) {
        paths[p].push_back({t, std::clamp(pair_d[p], 0.0, d_cap)});
      }
    };
  push(0.0, std::vector<double>(n_pairs, 0.0));
  for (std::size_t step = 0;; ++step) {
    const double t = t_contact + static_cast<double>(step) * period;
    if (t >= t_final - 1e-9) {break;}
    const double overtravel = (t - t_contact) / 1000.0 * gripper.closing_speed;
    const Equilibrium eq = solve_equilibrium(curve, k, n, overtravel);
    const double gap = contact_width - eq.compression - n * eq.displacement;
    push(t, detail::pair_displacements_for(object, sim, eq.displacement, gap, n));
  }
  push(t_final, ep.pair_displacements);
  push(t_end, ep.pair_displacements);

  ep.observation.gap_at_contact = std::max(contact_width + width_noise_contact, 1e-3);
  ep.observation.gap_at_steady = std::max(ep.gap_at_steady + width_noise_steady, 0.0);

  for (std::size_t ch = 0; ch < sensors.size(); ++ch) {
    std::size_t pair = 0;
    for (std::size_t p = 0; p < n_pairs; ++p) {
      const auto & pr = sim.pair_map.pairs[p];
      if (pr[0] == static_cast<int>(ch) || pr[1] == static_cast<int>(ch)) {pair = p;}
    }
    SensorChannelModel model = sensors[ch];
    model.ambient_offset += sim.ambient_drift_sigma * gauss(rng);
    model.rng_seed = derive_seed(seed, {1, ch});
    auto trace = sample_trace(model, paths[pair], sim.sample_rate_hz, sim.sensor_noise);

    std::vector<double> hold;
    const std::size_t take = std::min(sim.hold_samples, trace.size());
    for (std::size_t i = trace.size() - take; i < trace.size(); ++i) {
      hold.push_back(trace[i].voltage);
    }
    ep.observation.steady.push_back(steady_state_of(hold));
    ep.traces.push_back(std::move(trace));
  }
  return ep;
}

// ---------------------------------------------------------------------------
// Plate calibration

struct PlateProtocol
{
  double commanded_gap = 40.0;
  /// Target per-finger displacements; plate width = gap + n * displacement.
  std::vector<double> displacements{5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
  int repetitions = 3;
  int n_deforming_fingers = 2;

  bool operator==(const PlateProtocol &) const = default;
};

/// Grasps each standard plate `repetitions` times and averages the hold
/// windows into one calibration sample per plate.
inline std::vector<CalibrationSample> simulate_plate_calibration(
  std::span<const SensorChannelModel> sensors, const PlateProtocol & protocol,
  const SimulatorConfig & sim, std::uint64_t seed)
{
  if (protocol.repetitions < 1) {
    throw Error(ErrorKind::Domain, "plate repetitions must be >= 1");
  }
  std::vector<CalibrationSample> out;
  const double period = 1000.0 / sim.sample_rate_hz;
  const double hold_ms = static_cast<double>(std::max<std::size_t>(sim.hold_samples, 1) - 1) * period;
  for (std::size_t plate = 0; plate < protocol.displacements.size(); ++plate) {
    const double d = protocol.displacements[plate];
    const double width = protocol.commanded_gap + protocol.n_deforming_fingers * d;
    std::vector<double> means(sensors.size(), 0.0);
    for (int rep = 0; rep < protocol.repetitions; ++rep) {
      for (std::size_t ch = 0; ch < sensors.size(); ++ch) {
        SensorChannelModel model = sensors[ch];
        model.rng_seed = derive_seed(seed, {plate, static_cast<std::uint64_t>(rep), ch});
        const std::vector<PathPoint> path = hold_ms > 0.0 ?
          std::vector<PathPoint>{{0.0, d}, {hold_ms, d}} : std::vector<PathPoint>{{0.0, d}};
        const auto trace = sample_trace(model, path, sim.sample_rate_hz, sim.sensor_noise);
        double sum = 0.0;
        for (const auto & r : trace) {sum += r.voltage;}
        means[ch] += sum / static_cast<double>(trace.size()) / protocol.repetitions;
      }
    }
    out.push_back(make_calibration_sample(
      width, protocol.commanded_gap, protocol.n_deforming_fingers, std::move(means),
      protocol.repetitions));
  }
  return out;
}

/// Builds the finger's channel bank: `count` copies of `base` with
/// fabrication scatter drawn from `fabrication_seed`.
inline std::vector<SensorChannelModel> make_sensor_bank(
  const SensorChannelModel & base, std::size_t count, std::uint64_t fabrication_seed,
  double gain_spread, double offset_spread)
{
  std::vector<SensorChannelModel> out;
  for (std::size_t ch = 0; ch < count; ++ch) {
    auto m = with_fabrication_variation(
      base, derive_seed(fabrication_seed, {ch}), gain_spread, offset_spread);
    m.channel_id = static_cast<int>(ch);
    m.validate();
    out.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Object sets

struct ObjectComposition
{
  int rigid_prismatic = 26;
  int very_soft = 9;
  int spheres = 2;
  int irregular = 1;
  int slender = 4;

  double rigid_diameter_min = 45.0;
  double rigid_diameter_max = 110.0;
  double rigid_stiffness_min = 4.0;
  double rigid_stiffness_max = 2000.0;
  double soft_diameter_min = 50.0;
  double soft_diameter_max = 100.0;
  double soft_stiffness_min = 0.003;
  double soft_stiffness_max = 0.012;
  double sphere_diameter_min = 68.0;
  double sphere_diameter_max = 80.0;
  double irregular_narrow_min = 50.0;
  double irregular_narrow_max = 65.0;
  double irregular_step_min = 45.0;
  double irregular_step_max = 55.0;
  double slender_diameter_min = 4.0;
  double slender_diameter_max = 12.0;

  int total() const {return rigid_prismatic + very_soft + spheres + irregular + slender;}

  bool operator==(const ObjectComposition &) const = default;
};

/// Deterministic object set for `seed`. True strains are evaluated at
/// `force_setpoint`.
inline std::vector<ObjectSpec> generate_object_set(
  std::uint64_t seed, const ObjectComposition & comp, double force_setpoint)
{
  if (comp.rigid_prismatic < 0 || comp.very_soft < 0 || comp.spheres < 0 ||
    comp.irregular < 0 || comp.slender < 0)
  {
    throw Error(ErrorKind::Domain, "object counts must be non-negative");
  }
  Rng rng(derive_seed(seed, {0x0b1ec7}));
  auto uniform = [&](double lo, double hi) {return std::uniform_real_distribution<double>(lo, hi)(rng);};
  auto log_uniform = [&](double lo, double hi) {return std::exp(uniform(std::log(lo), std::log(hi)));};

  std::vector<ObjectSpec> out;
  auto add = [&](std::string_view prefix, int index, ObjectSpec o) {
      o.id = static_cast<int>(out.size());
      o.name = std::string(prefix) + "-" + std::to_string(index + 1);
      o.true_strain_at_force = true_strain_at_force(force_setpoint, o.stiffness, o.true_diameter);
      out.push_back(std::move(o));
    };

  for (int i = 0; i < comp.rigid_prismatic; ++i) {
    ObjectSpec o;
    o.true_diameter = uniform(comp.rigid_diameter_min, comp.rigid_diameter_max);
    o.stiffness = log_uniform(comp.rigid_stiffness_min, comp.rigid_stiffness_max);
    add("rigid", i, o);
  }
  for (int i = 0; i < comp.very_soft; ++i) {
    ObjectSpec o;
    o.true_diameter = uniform(comp.soft_diameter_min, comp.soft_diameter_max);
    o.stiffness = uniform(comp.soft_stiffness_min, comp.soft_stiffness_max);
    add("soft", i, o);
  }
  for (int i = 0; i < comp.spheres; ++i) {
    ObjectSpec o;
    o.shape_class = ShapeClass::Sphere;
    o.true_diameter = uniform(comp.sphere_diameter_min, comp.sphere_diameter_max);
    o.stiffness = log_uniform(20.0, 200.0);
    add("ball", i, o);
  }
  for (int i = 0; i < comp.irregular; ++i) {
    ObjectSpec o;
    o.shape_class = ShapeClass::Irregular;
    o.true_diameter = uniform(comp.irregular_narrow_min, comp.irregular_narrow_max);
    o.wide_section_diameter = o.true_diameter + uniform(comp.irregular_step_min, comp.irregular_step_max);
    o.stiffness = log_uniform(100.0, 1000.0);
    add("irregular", i, o);
  }
  for (int i = 0; i < comp.slender; ++i) {
    ObjectSpec o;
    o.shape_class = ShapeClass::Slender;
    o.graspable = false;
    o.true_diameter = uniform(comp.slender_diameter_min, comp.slender_diameter_max);
    o.stiffness = log_uniform(50.0, 1000.0);
    add("slender", i, o);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sorting experiment

inline constexpr double kDiameterTolerance = 6.0;
inline constexpr double kStrainTolerance = 0.1;

struct ReportRow
{
  int id = 0;
  std::string name;
  ShapeClass shape_class = ShapeClass::Prismatic;
  GraspOutcome outcome = GraspOutcome::Slipped;
  double true_diameter = 0.0;
  std::optional<double> estimated_diameter;
  double true_strain = 0.0;
  std::optional<double> estimated_strain;
  Classification classification = Classification::Unrecognizable;
  Classification truth_class = Classification::Rigid;
  AnomalySet anomalies;

  bool graspable() const {return outcome != GraspOutcome::Slipped;}
  bool rigid_prismatic() const
  {
    return graspable() && shape_class == ShapeClass::Prismatic &&
           truth_class == Classification::Rigid;
  }
  bool operator==(const ReportRow &) const = default;
};

struct ReportAggregates
{
  int n_objects = 0;
  int n_graspable = 0;
  int n_slipped = 0;
  int n_force_not_reached = 0;
  int n_unrecognizable = 0;

  int n_rigid_prismatic = 0;
  double rigid_within_diameter_tolerance = 0.0;
  double mean_abs_diameter_error = 0.0;

  int n_strain_measurable = 0;
  double strain_within_tolerance = 0.0;
  double mean_abs_strain_error = 0.0;

  int n_correct = 0;
  double classification_success_rate = 0.0;

  bool operator==(const ReportAggregates &) const = default;
};

/// Aggregate metrics, derived only from the rows:
///  - diameter metrics over graspable prismatic objects whose truth is rigid;
///  - strain metrics over rows with a measurable estimated strain;
///  - classification success over graspable objects (unrecognizable counts
///    as a miss).
/// Empty populations report 0 alongside a zero count.
inline ReportAggregates compute_aggregates(std::span<const ReportRow> rows)
{
  ReportAggregates a;
  a.n_objects = static_cast<int>(rows.size());
  int diam_ok = 0;
  double diam_err = 0.0;
  int strain_ok = 0;
  double strain_err = 0.0;
  for (const auto & r : rows) {
    if (!r.graspable()) {
      ++a.n_slipped;
      continue;
    }
    ++a.n_graspable;
    if (r.outcome == GraspOutcome::ForceNotReached) {++a.n_force_not_reached;}
    if (r.classification == Classification::Unrecognizable) {++a.n_unrecognizable;}
    if (r.classification == r.truth_class) {++a.n_correct;}
    if (r.rigid_prismatic() && r.estimated_diameter) {
      ++a.n_rigid_prismatic;
      const double e = std::abs(*r.estimated_diameter - r.true_diameter);
      diam_err += e;
      if (e <= kDiameterTolerance) {++diam_ok;}
    }
    if (r.estimated_strain) {
      ++a.n_strain_measurable;
      const double e = std::abs(*r.estimated_strain - r.true_strain);
      strain_err += e;
      if (e <= kStrainTolerance) {++strain_ok;}
    }
  }
  if (a.n_rigid_prismatic > 0) {
    a.rigid_within_diameter_tolerance = static_cast<double>(diam_ok) / a.n_rigid_prismatic;
    a.mean_abs_diameter_error = diam_err / a.n_rigid_prismatic;
  }
  if (a.n_strain_measurable > 0) {
    a.strain_within_tolerance = static_cast<double>(strain_ok) / a.n_strain_measurable;
    a.mean_abs_strain_error = strain_err / a.n_strain_measurable;
  }
  if (a.n_graspable > 0) {
    a.classification_success_rate = static_cast<double>(a.n_correct) / a.n_graspable;
  }
  return a;
}

struct SortingReport
{
  std::vector<ReportRow> rows;
  ReportAggregates aggregates;
};

struct ExperimentSetup
{
  GripperConfig gripper{};
  SimulatorConfig simulator{};
  EstimationConfig estimation{};
  std::vector<SensorChannelModel> sensors;
};

struct ExperimentResult
{
  SortingReport report;
  std::vector<GraspEpisode> episodes;
  std::vector<std::optional<GraspEstimate>> estimates;
};

inline ReportRow score_episode(
  const GraspEpisode & ep, const std::optional<GraspEstimate> & est, const SortingBoundary & boundary)
{
  ReportRow row;
  row.id = ep.object.id;
  row.name = ep.object.name;
  row.shape_class = ep.object.shape_class;
  row.outcome = ep.outcome;
  row.true_diameter = ep.object.true_diameter;
  row.true_strain = ep.object.true_strain_at_force;
  row.truth_class = ep.object.true_strain_at_force >= boundary.strain_threshold ?
    Classification::Soft : Classification::Rigid;
  if (est) {
    row.estimated_diameter = est->estimated_diameter;
    row.estimated_strain = est->estimated_strain;
    row.classification = est->classification;
    row.anomalies = est->anomalies;
  }
  return row;
}

/// Grasps, estimates and scores every object. Each episode is seeded from
/// (seed, object id), so results do not depend on evaluation order.
inline ExperimentResult run_sorting_experiment(
  std::span<const ObjectSpec> objects, const ExperimentSetup & setup,
  const CalibrationProfile & profile, std::uint64_t seed)
{
  if (objects.empty()) {
    throw Error(ErrorKind::Domain, "sorting experiment needs at least one object");
  }
  if (profile.channels.empty()) {
    throw Error(ErrorKind::Domain, "calibration profile has no channels");
  }
  if (setup.gripper.n_active_fingers != setup.estimation.n_active_fingers) {
    throw Error(ErrorKind::Domain, "simulator and estimator disagree on n_active_fingers");
  }
  setup.estimation.boundary.validate();

  ExperimentResult result;
  for (const auto & obj : objects) {
    GraspEpisode ep = run_grasp(
      setup.gripper, obj, setup.sensors, setup.simulator,
      derive_seed(seed, {static_cast<std::uint64_t>(obj.id)}));
    std::optional<GraspEstimate> est;
    if (ep.outcome != GraspOutcome::Slipped) {
      est = estimate_grasp(profile, ep.observation, setup.estimation);
    }
    result.report.rows.push_back(score_episode(ep, est, setup.estimation.boundary));
    result.episodes.push_back(std::move(ep));
    result.estimates.push_back(std::move(est));
  }
  result.report.aggregates = compute_aggregates(result.report.rows);
  return result;
}

}  // namespace fcsense

#endif  // FCSENSE__GRASP_SIM_HPP_
