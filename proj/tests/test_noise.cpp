#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "dwl/noise.hpp"
#include "dwl/obs.hpp"

using namespace dwl;
using namespace dwl::noise;

TEST_CASE("sample_dynamics stays inside the declared ranges") {
  const auto specs = default_noise_specs();
  RngStream rng(1, 0);
  for (int i = 0; i < 500; ++i) {
    const auto d = sample_dynamics(rng, specs, 12);
    CHECK(d.friction >= 0.2);
    CHECK(d.friction <= 2.0);
    CHECK(d.motor_strength >= 0.9);
    CHECK(d.motor_strength <= 1.1);
    CHECK(d.payload >= -5.0);
    CHECK(d.payload <= 20.0);
    CHECK(d.pd_factors[0] >= 0.8);
    CHECK(d.pd_factors[0] <= 1.2);
    CHECK(d.system_delay_ms >= 0.0);
    CHECK(d.system_delay_ms <= 10.0);
    for (double o : d.motor_offset) {
      CHECK(o >= -0.05);
      CHECK(o <= 0.05);
    }
    CHECK(d.motor_offset.size() == 12);
  }
}

TEST_CASE("degenerate point ranges produce the exact point") {
  auto specs = default_noise_specs();
  for (auto& s : specs) {
    s.lo = s.hi = (s.op == Operator::scaling || s.op == Operator::resample) ? 1.0 : 0.0;
  }
  RngStream rng(2, 0);
  const auto d = sample_dynamics(rng, specs, 6);
  CHECK(d.friction == 1.0);
  CHECK(d.motor_strength == 1.0);
  CHECK(d.payload == 0.0);
  CHECK(d.pd_factors[0] == 1.0);
  CHECK(d.system_delay_ms == 0.0);
}

TEST_CASE("identical seed and stream replay identical draws") {
  const auto specs = default_noise_specs();
  RngStream a(42, 0), b(42, 0);
  for (int i = 0; i < 10; ++i) {
    const auto da = sample_dynamics(a, specs, 12);
    const auto db = sample_dynamics(b, specs, 12);
    CHECK(da.friction == db.friction);
    CHECK(da.payload == db.payload);
    CHECK(da.motor_offset == db.motor_offset);
    CHECK(da.system_delay_ms == db.system_delay_ms);
  }
  // different streams decorrelate
  RngStream c(42, 1);
  CHECK(sample_dynamics(c, specs, 12).friction !=
        sample_dynamics(a, specs, 12).friction);
}

TEST_CASE("corrupt_observation masks the privileged tail") {
  obs::EnvConfig cfg;
  cfg.joint_count = 12;
  cfg.height_scan_count = 96;
  cfg.nominal_pose.assign(12, 0.0);
  const auto layout = obs::make_layout(cfg);

  // sentinel values in every privileged slot
  std::vector<double> state(static_cast<std::size_t>(layout.state_dim), 0.0);
  const double sentinel = 12345.6789;
  for (int i = layout.obs_dim; i < layout.state_dim; ++i) {
    state[static_cast<std::size_t>(i)] = sentinel;
  }
  RngStream rng(7, 0);
  const auto obs = corrupt_observation(state, rng, default_noise_specs(),
                                       layout.sensor_slices());
  CHECK(static_cast<int>(obs.size()) == layout.obs_dim);
  for (double v : obs) CHECK(std::abs(v) < 1.0);  // noise only, never the sentinel
}

TEST_CASE("zero-width noise leaves unmasked channels lossless") {
  obs::EnvConfig cfg;
  cfg.joint_count = 6;
  cfg.height_scan_count = 16;
  cfg.scan_x_count = 8;
  cfg.scan_y_count = 2;
  cfg.nominal_pose.assign(6, 0.0);
  const auto layout = obs::make_layout(cfg);
  std::vector<double> state(static_cast<std::size_t>(layout.state_dim));
  for (std::size_t i = 0; i < state.size(); ++i) state[i] = 0.01 * static_cast<double>(i);
  RngStream rng(3, 0);
  const auto obs = corrupt_observation(state, rng, zero_noise_specs(),
                                       layout.sensor_slices());
  for (int i = 0; i < layout.obs_dim; ++i) {
    CHECK(obs[static_cast<std::size_t>(i)] == state[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("per-step sensor noise is bounded by the table ranges") {
  obs::EnvConfig cfg;
  cfg.joint_count = 12;
  cfg.height_scan_count = 96;
  cfg.nominal_pose.assign(12, 0.0);
  const auto layout = obs::make_layout(cfg);
  std::vector<double> state(static_cast<std::size_t>(layout.state_dim), 0.0);
  RngStream rng(11, 0);
  const auto specs = default_noise_specs();
  for (int step = 0; step < 200; ++step) {
    const auto obs = corrupt_observation(state, rng, specs, layout.sensor_slices());
    for (int j = 0; j < 12; ++j) {
      CHECK(std::abs(obs[static_cast<std::size_t>(layout.joint_pos + j)]) <= 0.3);
      CHECK(std::abs(obs[static_cast<std::size_t>(layout.joint_vel + j)]) <= 1.0);
    }
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(obs[static_cast<std::size_t>(layout.ang_vel + j)]) <= 0.1);
      CHECK(std::abs(obs[static_cast<std::size_t>(layout.orientation + j)]) <= 0.1);
    }
    // clock, commands, last actions stay exact
    CHECK(obs[static_cast<std::size_t>(layout.clock)] == 0.0);
    CHECK(obs[static_cast<std::size_t>(layout.commands)] == 0.0);
    CHECK(obs[static_cast<std::size_t>(layout.last_actions)] == 0.0);
  }
}

TEST_CASE("corrupt_observation rejects short states") {
  obs::EnvConfig cfg;
  cfg.joint_count = 6;
  cfg.height_scan_count = 16;
  cfg.scan_x_count = 8;
  cfg.scan_y_count = 2;
  cfg.nominal_pose.assign(6, 0.0);
  const auto layout = obs::make_layout(cfg);
  std::vector<double> too_short(static_cast<std::size_t>(layout.obs_dim - 1), 0.0);
  RngStream rng(1, 0);
  CHECK_THROWS_AS(
      corrupt_observation(too_short, rng, zero_noise_specs(), layout.sensor_slices()),
      std::invalid_argument);
}

TEST_CASE("apply_delay floors to whole control steps") {
  std::vector<std::vector<double>> history;
  for (int i = 0; i < 8; ++i) history.push_back({static_cast<double>(i)});

  // 500 Hz inner loop: 2 ms per step
  CHECK(apply_delay(history, 0.0, 0.002)[0] == 7.0);
  CHECK(apply_delay(history, 10.0, 0.002)[0] == 2.0);  // 5 steps back
  CHECK(apply_delay(history, 3.0, 0.002)[0] == 6.0);   // floor(1.5) = 1 step
  CHECK(apply_delay(history, 1.9, 0.002)[0] == 7.0);   // floor(0.95) = 0
  CHECK_THROWS_AS(apply_delay(history, 100.0, 0.002), std::invalid_argument);
}
