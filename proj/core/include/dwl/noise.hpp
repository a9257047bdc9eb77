#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "dwl/rng.hpp"

namespace dwl::noise {

enum class Operator { additive, scaling, latency, resample };
enum class DrawFreq { per_episode, per_step };

/// One row of the domain-randomization table.
struct NoiseSpec {
  std::string name;
  std::string unit;
  double lo = 0.0;
  double hi = 0.0;
  Operator op = Operator::additive;
  DrawFreq freq = DrawFreq::per_episode;
};

/// Dynamics parameters drawn once per episode.
struct RandomizedDynamics {
  double friction = 1.0;              // resampled
  std::vector<double> motor_offset;   // additive, per joint [rad]
  double motor_strength = 1.0;        // scaling fraction
  double payload = 0.0;               // additive [kg]
  std::array<double, 2> pd_factors{1.0, 1.0};  // scaling (kp, kd)
  double system_delay_ms = 0.0;       // latency
};

/// The published randomization table. `payload_mass_scale` rescales the
/// payload range for robots lighter than the reference platform (the range
/// is stated for a 38 kg robot); 1.0 keeps the table verbatim.
std::vector<NoiseSpec> default_noise_specs(double payload_mass_scale = 1.0);

/// Zero-width specs, useful for lossless-corruption tests.
std::vector<NoiseSpec> zero_noise_specs();

const NoiseSpec* find_spec(std::span<const NoiseSpec> specs, const std::string& name);

/// Draws every per-episode parameter uniformly within its range.
RandomizedDynamics sample_dynamics(RngStream& rng, std::span<const NoiseSpec> specs,
                                   int joint_count);

/// Offsets of the sensor channels inside the observation prefix of the state.
struct SensorSlices {
  int obs_dim = 0;
  int joint_count = 0;
  int joint_pos_offset = 0;
  int joint_vel_offset = 0;
  int ang_vel_offset = 0;
  int orientation_offset = 0;
};

/// Masks the privileged tail of the state and perturbs the surviving sensor
/// channels with their per-step additive noise. Channels the controller
/// produces itself (clock, commands, last actions) stay exact.
/// Throws std::invalid_argument when the state is shorter than obs_dim.
std::vector<double> corrupt_observation(std::span<const double> state, RngStream& rng,
                                        std::span<const NoiseSpec> specs,
                                        const SensorSlices& slices);

/// Returns the action in effect delay_ms ago, floored to whole control steps.
/// history is ordered oldest..newest; the newest entry is the current action.
std::span<const double> apply_delay(std::span<const std::vector<double>> history,
                                    double delay_ms, double control_dt);

}  // namespace dwl::noise
