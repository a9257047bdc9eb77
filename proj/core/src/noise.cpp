#include "dwl/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace dwl::noise {

std::vector<NoiseSpec> default_noise_specs(double payload_mass_scale) {
  using Op = Operator;
  using Fr = DrawFreq;
  return {
      {"joint_position", "rad", -0.3, 0.3, Op::additive, Fr::per_step},
      {"joint_velocity", "rad/s", -1.0, 1.0, Op::additive, Fr::per_step},
      {"angular_velocity", "rad/s", -0.1, 0.1, Op::additive, Fr::per_step},
      {"orientation", "rad", -0.1, 0.1, Op::additive, Fr::per_step},
      {"system_delay", "ms", 0.0, 10.0, Op::latency, Fr::per_episode},
      {"friction", "-", 0.2, 2.0, Op::resample, Fr::per_episode},
      {"motor_offset", "rad", -0.05, 0.05, Op::additive, Fr::per_episode},
      {"motor_strength", "fraction", 0.9, 1.1, Op::scaling, Fr::per_episode},
      {"payload", "kg", -5.0 * payload_mass_scale, 20.0 * payload_mass_scale,
       Op::additive, Fr::per_episode},
      {"pd_factors", "fraction", 0.8, 1.2, Op::scaling, Fr::per_episode},
  };
}

std::vector<NoiseSpec> zero_noise_specs() {
  auto specs = default_noise_specs();
  for (auto& s : specs) {
    if (s.op == Operator::scaling) {
      s.lo = s.hi = 1.0;
    } else if (s.op == Operator::resample) {
      s.lo = s.hi = 1.0;
    } else {
      s.lo = s.hi = 0.0;
    }
  }
  return specs;
}

const NoiseSpec* find_spec(std::span<const NoiseSpec> specs, const std::string& name) {
  for (const auto& s : specs) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

namespace {

double draw(RngStream& rng, const NoiseSpec& s) {
  if (s.lo > s.hi) throw std::invalid_argument("NoiseSpec " + s.name + ": lo > hi");
  return rng.uniform(s.lo, s.hi);
}

}  // namespace

RandomizedDynamics sample_dynamics(RngStream& rng, std::span<const NoiseSpec> specs,
                                   int joint_count) {
  RandomizedDynamics d;
  d.motor_offset.assign(static_cast<std::size_t>(joint_count), 0.0);
  // Draw order is fixed so replays are reproducible regardless of spec order.
  if (const auto* s = find_spec(specs, "friction")) d.friction = draw(rng, *s);
  if (const auto* s = find_spec(specs, "motor_offset")) {
    for (auto& o : d.motor_offset) o = draw(rng, *s);
  }
  if (const auto* s = find_spec(specs, "motor_strength")) d.motor_strength = draw(rng, *s);
  if (const auto* s = find_spec(specs, "payload")) d.payload = draw(rng, *s);
  if (const auto* s = find_spec(specs, "pd_factors")) {
    d.pd_factors[0] = draw(rng, *s);
    d.pd_factors[1] = draw(rng, *s);
  }
  if (const auto* s = find_spec(specs, "system_delay")) d.system_delay_ms = draw(rng, *s);
  return d;
}

std::vector<double> corrupt_observation(std::span<const double> state, RngStream& rng,
                                        std::span<const NoiseSpec> specs,
                                        const SensorSlices& slices) {
  if (static_cast<int>(state.size()) < slices.obs_dim) {
    throw std::invalid_argument("corrupt_observation: state shorter than observation");
  }
  // Masking: only the observation prefix survives.
  std::vector<double> obs(state.begin(), state.begin() + slices.obs_dim);

  auto perturb = [&](const char* name, int offset, int count) {
    const auto* s = find_spec(specs, name);
    if (!s) return;
    for (int i = 0; i < count; ++i) {
      obs[static_cast<std::size_t>(offset + i)] += draw(rng, *s);
    }
  };
  perturb("joint_position", slices.joint_pos_offset, slices.joint_count);
  perturb("joint_velocity", slices.joint_vel_offset, slices.joint_count);
  perturb("angular_velocity", slices.ang_vel_offset, 3);
  perturb("orientation", slices.orientation_offset, 3);
  return obs;
}

std::span<const double> apply_delay(std::span<const std::vector<double>> history,
                                    double delay_ms, double control_dt) {
  if (history.empty()) throw std::invalid_argument("apply_delay: empty history");
  const int steps = static_cast<int>(std::floor(delay_ms * 1e-3 / control_dt));
  const int last = static_cast<int>(history.size()) - 1;
  if (steps > last) {
    throw std::invalid_argument("apply_delay: history shorter than requested delay");
  }
  return history[static_cast<std::size_t>(last - steps)];
}

}  // namespace dwl::noise
