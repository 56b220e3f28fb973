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

#ifndef FCSENSE__CONFIG_HPP_
#define FCSENSE__CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fcsense/calibration.hpp"
#include "fcsense/estimation.hpp"
#include "fcsense/grasp_sim.hpp"
#include "fcsense/persistence.hpp"
#include "fcsense/sensor_model.hpp"

namespace fcsense
{

struct SensorBankConfig
{
  SensorChannelModel base{};
  std::size_t channel_count = 8;
  std::uint64_t fabrication_seed = 7;
  double gain_spread = 0.2;
  double offset_spread = 0.1;

  bool operator==(const SensorBankConfig &) const = default;
};

struct CharacterizeConfig
{
  double step = 0.5;
  std::size_t filter_window = 5;

  bool operator==(const CharacterizeConfig &) const = default;
};

/// Everything a workflow needs. Every field has a default, and a config file
/// only has to name what it overrides.
struct PipelineConfig
{
  SensorBankConfig sensors{};
  GripperConfig gripper{};
  SimulatorConfig simulator{};
  EstimationConfig estimation{};
  ObjectComposition objects{};
  PlateProtocol plates{};
  CalibrationOptions calibration{};
  CharacterizeConfig characterize{};

  std::vector<SensorChannelModel> sensor_bank() const
  {
    return make_sensor_bank(
      sensors.base, sensors.channel_count, sensors.fabrication_seed, sensors.gain_spread,
      sensors.offset_spread);
  }

  ExperimentSetup experiment_setup() const
  {
    return {gripper, simulator, estimation, sensor_bank()};
  }

  void validate() const
  {
    sensors.base.validate();
    gripper.validate();
    estimation.boundary.validate();
    if (gripper.n_active_fingers != estimation.n_active_fingers) {
      throw Error(ErrorKind::Domain, "gripper and estimator n_active_fingers differ");
    }
    if (!(calibration.valid_interval.lo < calibration.valid_interval.hi)) {
      throw Error(ErrorKind::Domain, "empty valid interval");
    }
    if (characterize.filter_window % 2 == 0 || !(characterize.step > 0.0)) {
      throw Error(ErrorKind::Domain, "characterize needs an odd window and a positive step");
    }
  }
};

namespace detail
{

template<typename T>
void read_field(const Json & j, const char * key, T & field)
{
  if (!j.contains(key)) {return;}
  if constexpr (std::is_floating_point_v<T>) {
    field = finite_number(j, key);
  } else {
    field = j.at(key).get<T>();
  }
}

inline const Json & section(const Json & doc, const char * key)
{
  static const Json empty = Json::object();
  if (!doc.contains(key)) {return empty;}
  if (!doc.at(key).is_object()) {
    throw Error(ErrorKind::MalformedDocument, std::string("config section '") + key + "' must be an object");
  }
  return doc.at(key);
}

}  // namespace detail

inline PipelineConfig config_from_json(const Json & doc)
{
  if (!doc.is_object()) {
    throw Error(ErrorKind::MalformedDocument, "config must be a JSON object");
  }
  return detail::guarded("config", [&] {
      using detail::read_field;
      using detail::section;
      PipelineConfig c;

      const auto & s = section(doc, "sensor");
      auto & m = c.sensors.base;
      read_field(s, "v_rest", m.v_rest);
      read_field(s, "slope", m.slope);
      read_field(s, "d_lo", m.d_lo);
      read_field(s, "d_hi", m.d_hi);
      read_field(s, "d_max", m.d_max);
      read_field(s, "noise_sigma_linear", m.noise_sigma_linear);
      read_field(s, "noise_sigma_unstable", m.noise_sigma_unstable);
      read_field(s, "ambient_offset", m.ambient_offset);
      read_field(s, "adc_bits", m.adc_bits);
      read_field(s, "channel_count", c.sensors.channel_count);
      read_field(s, "fabrication_seed", c.sensors.fabrication_seed);
      read_field(s, "gain_spread", c.sensors.gain_spread);
      read_field(s, "offset_spread", c.sensors.offset_spread);

      const auto & fc = section(doc, "force_curve");
      if (fc.contains("samples")) {
        c.gripper.force_curve.samples.clear();
        for (const auto & p : fc.at("samples")) {
          c.gripper.force_curve.samples.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
      }
      read_field(fc, "finger_multiplicity", c.gripper.force_curve.finger_multiplicity);
      c.estimation.force_curve = c.gripper.force_curve;

      const auto & geo = section(doc, "geometry");
      read_field(geo, "n_active_fingers", c.gripper.n_active_fingers);
      c.estimation.n_active_fingers = c.gripper.n_active_fingers;
      if (geo.contains("valid_interval")) {
        const auto & iv = geo.at("valid_interval");
        c.calibration.valid_interval = {iv.at(0).get<double>(), iv.at(1).get<double>()};
      }
      read_field(geo, "n_deforming_fingers", c.calibration.n_deforming_fingers);
      c.plates.n_deforming_fingers = c.calibration.n_deforming_fingers;

      const auto & g = section(doc, "gripper");
      read_field(g, "max_gap", c.gripper.max_gap);
      read_field(g, "closing_speed", c.gripper.closing_speed);
      read_field(g, "force_setpoint", c.gripper.force_setpoint);

      read_field(section(doc, "boundary"), "strain_threshold", c.estimation.boundary.strain_threshold);

      const auto & est = section(doc, "estimation");
      read_field(est, "pair_tolerance", c.estimation.aggregation.pair_tolerance);
      read_field(est, "instability_sigma", c.estimation.aggregation.instability_sigma);
      if (est.contains("pairs")) {
        c.estimation.pair_map.pairs = est.at("pairs").get<std::vector<std::array<int, 2>>>();
      }
      if (est.contains("intermediate_pairs")) {
        c.estimation.pair_map.intermediate = est.at("intermediate_pairs").get<std::vector<std::size_t>>();
      }
      c.simulator.pair_map = c.estimation.pair_map;

      const auto & sim = section(doc, "simulator");
      read_field(sim, "sample_rate_hz", c.simulator.sample_rate_hz);
      read_field(sim, "hold_samples", c.simulator.hold_samples);
      read_field(sim, "approach_margin", c.simulator.approach_margin);
      read_field(sim, "sphere_skew", c.simulator.sphere_skew);
      read_field(sim, "ambient_drift_sigma", c.simulator.ambient_drift_sigma);
      read_field(sim, "width_noise_sigma", c.simulator.width_noise_sigma);
      read_field(sim, "section_sigma", c.simulator.section_sigma);
      read_field(sim, "sensor_noise", c.simulator.sensor_noise);

      const auto & comp = section(doc, "composition");
      auto & o = c.objects;
      read_field(comp, "rigid_prismatic", o.rigid_prismatic);
      read_field(comp, "very_soft", o.very_soft);
      read_field(comp, "spheres", o.spheres);
      read_field(comp, "irregular", o.irregular);
      read_field(comp, "slender", o.slender);
      read_field(comp, "rigid_diameter_min", o.rigid_diameter_min);
      read_field(comp, "rigid_diameter_max", o.rigid_diameter_max);
      read_field(comp, "rigid_stiffness_min", o.rigid_stiffness_min);
      read_field(comp, "rigid_stiffness_max", o.rigid_stiffness_max);
      read_field(comp, "soft_diameter_min", o.soft_diameter_min);
      read_field(comp, "soft_diameter_max", o.soft_diameter_max);
      read_field(comp, "soft_stiffness_min", o.soft_stiffness_min);
      read_field(comp, "soft_stiffness_max", o.soft_stiffness_max);
      read_field(comp, "sphere_diameter_min", o.sphere_diameter_min);
      read_field(comp, "sphere_diameter_max", o.sphere_diameter_max);

      const auto & cal = section(doc, "calibration");
      read_field(cal, "r2_threshold", c.calibration.r2_threshold);
      read_field(cal, "commanded_gap", c.plates.commanded_gap);
      read_field(cal, "repetitions", c.plates.repetitions);
      if (cal.contains("plate_displacements")) {
        c.plates.displacements = cal.at("plate_displacements").get<std::vector<double>>();
      }

      const auto & ch = section(doc, "characterize");
      read_field(ch, "step", c.characterize.step);
      read_field(ch, "filter_window", c.characterize.filter_window);

      c.validate();
      return c;
    });
}

inline Json config_to_json(const PipelineConfig & c)
{
  const auto & m = c.sensors.base;
  Json samples = Json::array();
  for (const auto & p : c.gripper.force_curve.samples) {samples.push_back({p.x, p.y});}
  const auto & o = c.objects;
  return {
    {"sensor", {
        {"v_rest", m.v_rest}, {"slope", m.slope}, {"d_lo", m.d_lo}, {"d_hi", m.d_hi},
        {"d_max", m.d_max}, {"noise_sigma_linear", m.noise_sigma_linear},
        {"noise_sigma_unstable", m.noise_sigma_unstable}, {"ambient_offset", m.ambient_offset},
        {"adc_bits", m.adc_bits}, {"channel_count", c.sensors.channel_count},
        {"fabrication_seed", c.sensors.fabrication_seed},
        {"gain_spread", c.sensors.gain_spread}, {"offset_spread", c.sensors.offset_spread}}},
    {"force_curve", {
        {"samples", samples},
        {"finger_multiplicity", c.gripper.force_curve.finger_multiplicity}}},
    {"geometry", {
        {"n_active_fingers", c.gripper.n_active_fingers},
        {"valid_interval", {c.calibration.valid_interval.lo, c.calibration.valid_interval.hi}},
        {"n_deforming_fingers", c.calibration.n_deforming_fingers}}},
    {"gripper", {
        {"max_gap", c.gripper.max_gap}, {"closing_speed", c.gripper.closing_speed},
        {"force_setpoint", c.gripper.force_setpoint}}},
    {"boundary", {{"strain_threshold", c.estimation.boundary.strain_threshold}}},
    {"estimation", {
        {"pair_tolerance", c.estimation.aggregation.pair_tolerance},
        {"instability_sigma", c.estimation.aggregation.instability_sigma},
        {"pairs", c.estimation.pair_map.pairs},
        {"intermediate_pairs", c.estimation.pair_map.intermediate}}},
    {"simulator", {
        {"sample_rate_hz", c.simulator.sample_rate_hz},
        {"hold_samples", c.simulator.hold_samples},
        {"approach_margin", c.simulator.approach_margin},
        {"sphere_skew", c.simulator.sphere_skew},
        {"ambient_drift_sigma", c.simulator.ambient_drift_sigma},
        {"width_noise_sigma", c.simulator.width_noise_sigma},
        {"section_sigma", c.simulator.section_sigma},
        {"sensor_noise", c.simulator.sensor_noise}}},
    {"composition", {
        {"rigid_prismatic", o.rigid_prismatic}, {"very_soft", o.very_soft},
        {"spheres", o.spheres}, {"irregular", o.irregular}, {"slender", o.slender},
        {"rigid_diameter_min", o.rigid_diameter_min}, {"rigid_diameter_max", o.rigid_diameter_max},
        {"rigid_stiffness_min", o.rigid_stiffness_min},
        {"rigid_stiffness_max", o.rigid_stiffness_max},
        {"soft_diameter_min", o.soft_diameter_min}, {"soft_diameter_max", o.soft_diameter_max},
        {"soft_stiffness_min", o.soft_stiffness_min},
        {"soft_stiffness_max", o.soft_stiffness_max},
        {"sphere_diameter_min", o.sphere_diameter_min},
        {"sphere_diameter_max", o.sphere_diameter_max}}},
    {"calibration", {
        {"r2_threshold", c.calibration.r2_threshold},
        {"commanded_gap", c.plates.commanded_gap},
        {"repetitions", c.plates.repetitions},
        {"plate_displacements", c.plates.displacements}}},
    {"characterize", {
        {"step", c.characterize.step}, {"filter_window", c.characterize.filter_window}}},
  };
}

inline PipelineConfig load_config(const std::filesystem::path & path)
{
  return config_from_json(parse_json(read_text_file(path), path.string()));
}

}  // namespace fcsense

#endif  // FCSENSE__CONFIG_HPP_
