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
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "fcsense/calibration.hpp"
#include "fcsense/grasp_sim.hpp"
#include "fcsense/sensor_model.hpp"

using namespace fcsense;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

struct GridBest
{
  double sse = std::numeric_limits<double>::infinity();
  double slope = 0.0;
  double intercept = 0.0;
};

// Exhaustive 201 x 201 search over [s0 - hs, s0 + hs] x [b0 - hb, b0 + hb].
GridBest grid_search(const std::vector<Point2> & pts, double s0, double hs, double b0, double hb)
{
  GridBest best;
  for (int i = 0; i <= 200; ++i) {
    const double s = s0 - hs + 2.0 * hs * i / 200.0;
    for (int j = 0; j <= 200; ++j) {
      const double b = b0 - hb + 2.0 * hb * j / 200.0;
      double sse = 0.0;
      for (const auto & p : pts) {
        const double r = p.y - (b + s * p.x);
        sse += r * r;
      }
      if (sse < best.sse) {
        best = {sse, s, b};
      }
    }
  }
  return best;
}

std::vector<CalibrationSample> stage_two_samples(
  std::span<const SensorChannelModel> bank, const std::vector<double> & displacements)
{
  std::vector<CalibrationSample> out;
  for (double d : displacements) {
    std::vector<double> v;
    for (const auto & m : bank) {v.push_back(voltage_at(m, d));}
    out.push_back(make_calibration_sample(40.0 + 2.0 * d, 40.0, 2, v));
  }
  return out;
}

SensorChannelModel random_stage_two_model(std::mt19937_64 & g)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SensorChannelModel m;
  m.v_rest = 3.5 + 1.4 * u(g);
  m.slope = -(0.04 + 0.1 * u(g));
  m.ambient_offset = -0.2 + 0.4 * u(g);
  return m;
}

}  // namespace

TEST_CASE("two-point fit is exact")
{
  const std::vector<Point2> pts{{0, 1}, {1, 3}};
  const auto f = fit_linear(pts);
  CHECK_THAT(f.slope, WithinAbs(2.0, 1e-12));
  CHECK_THAT(f.intercept, WithinAbs(1.0, 1e-12));
  CHECK(f.r_squared == 1.0);
}

TEST_CASE("tent data fits a flat line at one third")
{
  const std::vector<Point2> pts{{0, 0}, {1, 1}, {2, 0}};
  const auto f = fit_linear(pts);
  const auto g = grid_search(pts, 0.0, 1.0, 0.0, 1.0);
  CHECK_THAT(f.slope, WithinAbs(0.0, 1e-12));
  CHECK_THAT(f.intercept, WithinAbs(1.0 / 3.0, 1e-12));
  CHECK_THAT(f.r_squared, WithinAbs(0.0, 1e-12));
  CHECK(sum_squared_error(pts, f.slope, f.intercept) <= g.sse);
  CHECK_THAT(g.slope, WithinAbs(f.slope, 0.01 + 1e-12));
  CHECK_THAT(g.intercept, WithinAbs(f.intercept, 0.01 + 1e-12));
}

TEST_CASE("fit_linear rejects degenerate input")
{
  const std::vector<Point2> one{{1, 1}};
  const std::vector<Point2> vertical{{2, 1}, {2, 5}, {2, 3}};
  try {
    fit_linear(one);
    FAIL("expected an error");
  } catch (const Error & e) {
    CHECK(e.kind() == ErrorKind::InsufficientData);
  }
  try {
    fit_linear(vertical);
    FAIL("expected an error");
  } catch (const Error & e) {
    CHECK(e.kind() == ErrorKind::DegenerateAbscissa);
  }
}

TEST_CASE("flat series: r2 is 1 when fitted exactly")
{
  const std::vector<Point2> pts{{0, 2}, {1, 2}, {5, 2}};
  const auto f = fit_linear(pts);
  CHECK(f.r_squared == 1.0);
  CHECK(f.slope == 0.0);
}

TEST_CASE("default noise on stage-two data lands in the published linearity band")
{
  const SensorChannelModel m;
  Rng rng(derive_seed(3, {0}));
  std::vector<Point2> pts;
  for (double d = m.d_lo; d <= m.d_hi + 1e-9; d += 0.5) {
    pts.push_back({d, voltage_at(m, d, rng)});
  }
  const auto f = fit_linear(pts);
  CHECK(f.r_squared >= 0.9544);
  CHECK(f.r_squared <= 0.9887);
}

TEST_CASE("property: fit_linear beats a 201x201 grid around its answer")
{
  std::mt19937_64 g(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int inst = 0; inst < 50; ++inst) {
    const int n = 2 + static_cast<int>(g() % 9);
    std::vector<Point2> pts;
    const double true_s = 3.0 * u(g);
    const double true_b = 5.0 * u(g);
    for (int i = 0; i < n; ++i) {
      const double x = 10.0 * u(g);
      pts.push_back({x, true_b + true_s * x + u(g)});
    }
    if (std::all_of(pts.begin(), pts.end(), [&](const Point2 & p) {return p.x == pts[0].x;})) {
      continue;
    }
    const auto f = fit_linear(pts);
    const double sse = sum_squared_error(pts, f.slope, f.intercept);
    for (double scale : {1.0, 0.01}) {
      const auto best = grid_search(
        pts, f.slope, scale * (1.0 + std::abs(f.slope)), f.intercept,
        scale * (1.0 + std::abs(f.intercept)));
      REQUIRE(sse <= best.sse * (1.0 + 1e-9) + 1e-12);
    }
    const auto coarse = grid_search(pts, 0.0, 4.0, 0.0, 8.0);
    REQUIRE(sse <= coarse.sse * (1.0 + 1e-9) + 1e-12);
    REQUIRE(f.r_squared >= 0.0);
    REQUIRE(f.r_squared <= 1.0);
  }
}

TEST_CASE("property: scaling voltages scales the fit")
{
  std::mt19937_64 g(43);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<Point2> pts;
    for (int i = 0; i < 8; ++i) {pts.push_back({static_cast<double>(i), 2.0 + u(g)});}
    const double c = 0.1 + 10.0 * std::abs(u(g));
    auto scaled = pts;
    for (auto & p : scaled) {p.y *= c;}
    const auto a = fit_linear(pts);
    const auto b = fit_linear(scaled);
    REQUIRE_THAT(b.slope, WithinAbs(c * a.slope, 1e-9 * (1.0 + std::abs(c * a.slope))));
    REQUIRE_THAT(b.intercept, WithinAbs(c * a.intercept, 1e-9 * (1.0 + std::abs(c * a.intercept))));
    REQUIRE_THAT(b.r_squared, WithinAbs(a.r_squared, 1e-9));
  }
}

TEST_CASE("implied displacement splits overtravel across fingers")
{
  const auto s = make_calibration_sample(70.0, 40.0, 2, {1.0});
  CHECK(s.implied_displacement == 15.0);
  CHECK(make_calibration_sample(70.0, 40.0, 1, {1.0}).implied_displacement == 30.0);
  CHECK_THROWS_AS(make_calibration_sample(40.0, 40.0, 2, {1.0}), Error);
  CHECK_THROWS_AS(make_calibration_sample(50.0, 40.0, 2, {1.0}, 0), Error);
}

TEST_CASE("normalize_channels maps endpoints to 1 and 0")
{
  std::vector<CalibrationSample> two{
    make_calibration_sample(50.0, 40.0, 2, {4.0}),
    make_calibration_sample(100.0, 40.0, 2, {1.0})};
  const auto n2 = normalize_channels(two);
  CHECK(n2[0].channel_voltages[0] == 1.0);
  CHECK(n2[1].channel_voltages[0] == 0.0);

  std::vector<CalibrationSample> three{
    make_calibration_sample(100.0, 40.0, 2, {1.0}),
    make_calibration_sample(50.0, 40.0, 2, {4.0}),
    make_calibration_sample(75.0, 40.0, 2, {2.5})};
  const auto n3 = normalize_channels(three);
  CHECK(n3[0].channel_voltages[0] == 0.0);
  CHECK(n3[1].channel_voltages[0] == 1.0);
  CHECK_THAT(n3[2].channel_voltages[0], WithinAbs(0.5, 1e-15));
}

TEST_CASE("normalize_channels stays within [0, 1] for monotone channels")
{
  std::mt19937_64 g(47);
  for (int inst = 0; inst < 50; ++inst) {
    const auto m = random_stage_two_model(g);
    const std::vector<SensorChannelModel> bank{m};
    const auto n = normalize_channels(stage_two_samples(bank, {5, 10, 15, 20, 25, 30}));
    for (const auto & s : n) {
      REQUIRE(s.channel_voltages[0] >= 0.0);
      REQUIRE(s.channel_voltages[0] <= 1.0);
    }
  }
}

TEST_CASE("normalize_channels rejects a constant channel")
{
  std::vector<CalibrationSample> s{
    make_calibration_sample(50.0, 40.0, 2, {2.0, 4.0}),
    make_calibration_sample(100.0, 40.0, 2, {2.0, 1.0})};
  try {
    normalize_channels(s);
    FAIL("expected an error");
  } catch (const Error & e) {
    CHECK(e.kind() == ErrorKind::DegenerateChannel);
  }
}

TEST_CASE("noise-free calibration recovers the model slope")
{
  std::mt19937_64 g(53);
  for (int inst = 0; inst < 50; ++inst) {
    const auto m = random_stage_two_model(g);
    const std::vector<SensorChannelModel> bank{m};
    const auto profile = calibrate(stage_two_samples(bank, {5, 10, 15, 20, 25, 30}));
    REQUIRE(profile.channels.size() == 1);
    const auto & f = profile.channels[0];
    REQUIRE(std::abs(f.slope - m.slope) <= adc_step(m.adc_bits));
    REQUIRE(f.r_squared >= 0.999);
    for (double d = 5.0; d <= 30.0; d += 0.25) {
      const auto r = voltage_to_displacement(profile, 0, voltage_at(m, d));
      REQUIRE(std::abs(r.displacement - d) < 0.2);
    }
  }
}

TEST_CASE("a constant channel is rejected while the others pass")
{
  const SensorChannelModel m;
  std::vector<CalibrationSample> samples;
  for (double d : {5.0, 10.0, 15.0, 20.0, 25.0, 30.0}) {
    samples.push_back(make_calibration_sample(40.0 + 2 * d, 40.0, 2, {voltage_at(m, d), 2.0}));
  }
  const auto profile = calibrate(samples);
  REQUIRE(profile.channels.size() == 1);
  CHECK(profile.channels[0].channel_id == 0);
  CHECK(profile.find(1) == nullptr);
  CHECK_THROWS_AS(profile.channel(1), Error);
}

TEST_CASE("calibration fails when no channel is accepted")
{
  std::vector<CalibrationSample> samples;
  for (double d : {5.0, 15.0, 25.0}) {
    samples.push_back(make_calibration_sample(40.0 + 2 * d, 40.0, 2, {2.0, 1.0 + d}));
  }
  try {
    calibrate(samples);
    FAIL("expected an error");
  } catch (const Error & e) {
    CHECK(e.kind() == ErrorKind::CalibrationFailed);
    const std::string what = e.what();
    CHECK(what.find("ch0 r2=") != std::string::npos);
    CHECK(what.find("ch1 r2=") != std::string::npos);
  }
}

TEST_CASE("two displacements are not enough span")
{
  const SensorChannelModel m;
  const std::vector<SensorChannelModel> bank{m};
  try {
    calibrate(stage_two_samples(bank, {10, 20}));
    FAIL("expected an error");
  } catch (const Error & e) {
    CHECK(e.kind() == ErrorKind::InsufficientSpan);
  }
  CHECK_THROWS_AS(calibrate(stage_two_samples(bank, {10, 12, 14})), Error);
}

TEST_CASE("samples outside the valid interval are ignored")
{
  const SensorChannelModel m;
  const std::vector<SensorChannelModel> bank{m};
  const auto inside = calibrate(stage_two_samples(bank, {5, 10, 20, 30}));
  const auto with_outside = calibrate(stage_two_samples(bank, {1, 2, 5, 10, 20, 30, 33}));
  CHECK(inside == with_outside);
}

TEST_CASE("property: calibrate is permutation-invariant")
{
  std::mt19937_64 g(59);
  const auto bank = make_sensor_bank(SensorChannelModel{}, 8, 7, 0.2, 0.1);
  auto samples = simulate_plate_calibration(bank, PlateProtocol{}, SimulatorConfig{}, 17);
  const auto reference = calibrate(samples);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(samples.begin(), samples.end(), g);
    REQUIRE(calibrate(samples) == reference);
  }
}

TEST_CASE("stored fits respect the threshold")
{
  const auto bank = make_sensor_bank(SensorChannelModel{}, 8, 7, 0.2, 0.1);
  const auto samples = simulate_plate_calibration(bank, PlateProtocol{}, SimulatorConfig{}, 17);
  CalibrationOptions opts;
  opts.r2_threshold = 0.99;
  const auto profile = calibrate(samples, opts);
  CHECK(profile.r2_threshold_used == 0.99);
  for (const auto & f : profile.channels) {
    CHECK(f.r_squared >= 0.99);
    CHECK(f.slope < 0.0);
  }
}

TEST_CASE("voltage_to_displacement inverts and tags range")
{
  CalibrationProfile p;
  p.channels.push_back({3, -0.12, 5.1, 0.99});
  const auto at = [&](double d) {return voltage_to_displacement(p, 3, 5.1 - 0.12 * d);};
  CHECK_THAT(at(17).displacement, WithinAbs(17.0, 1e-12));
  CHECK(at(17).status == RangeStatus::InRange);
  CHECK_THAT(at(2).displacement, WithinAbs(2.0, 1e-12));
  CHECK(at(2).status == RangeStatus::BelowRange);
  CHECK_THAT(at(32).displacement, WithinAbs(32.0, 1e-12));
  CHECK(at(32).status == RangeStatus::AboveRange);
  try {
    voltage_to_displacement(p, 0, 1.0);
    FAIL("expected an error");
  } catch (const Error & e) {
    CHECK(e.kind() == ErrorKind::MissingChannel);
  }
}

TEST_CASE("profile drift of identical and scaled profiles")
{
  CalibrationProfile a;
  a.channels = {{0, -0.12, 5.0, 0.99}, {1, -0.10, 4.8, 0.98}};
  const auto same = profile_drift(a, a);
  for (const auto & d : same) {
    CHECK(d.slope_ratio == 1.0);
    CHECK(d.intercept_delta == 0.0);
  }
  auto b = a;
  b.channels[0].slope = 1.05 * a.channels[0].slope;
  CHECK_THAT(profile_drift(a, b)[0].slope_ratio, WithinRel(1.05, 1e-12));

  auto c = a;
  c.channels.pop_back();
  CHECK_THROWS_AS(profile_drift(a, c), Error);
  auto d = a;
  d.channels[1].channel_id = 5;
  CHECK_THROWS_AS(profile_drift(a, d), Error);
}

TEST_CASE("drift between fabrication seeds is bounded by the spreads")
{
  const double gain = 0.2;
  const double offset = 0.1;
  const SensorChannelModel base;
  const PlateProtocol plates;
  SimulatorConfig quiet;
  quiet.sensor_noise = false;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pa = calibrate(simulate_plate_calibration(
        make_sensor_bank(base, 8, 2 * seed, gain, offset), plates, quiet, 1));
    const auto pb = calibrate(simulate_plate_calibration(
        make_sensor_bank(base, 8, 2 * seed + 1, gain, offset), plates, quiet, 1));
    for (const auto & d : profile_drift(pa, pb)) {
      const double tol = 0.01;
      REQUIRE(d.slope_ratio >= (1 - gain) / (1 + gain) - tol);
      REQUIRE(d.slope_ratio <= (1 + gain) / (1 - gain) + tol);
      // intercept = v_rest - slope * d_lo
      const double bound = 2 * offset + 2 * gain * std::abs(base.slope) * base.d_lo + tol;
      REQUIRE(std::abs(d.intercept_delta) <= bound);
    }
  }
}
