#pragma once

#include <array>
#include <utility>

namespace dwl::gait {

/// Phase variable over one gait cycle, exposed to the policy as (sin, cos).
struct GaitClock {
  double cycle_time = 1.0;           // seconds per full cycle
  double phase = 0.0;                // in [0, 1)
  std::array<double, 2> clock_signal() const;
};

/// Binary per-foot indicator of the planned contact phase.
struct StanceMask {
  int left = 0;
  int right = 0;
};

/// Boundary conditions of the swing-height profile. One swing phase and one
/// stance phase complete a full cycle, so T is half the cycle time.
struct QuinticConstraints {
  double h0 = 0.0;       // height at swing start [m]
  double v0 = 0.0;       // vertical velocity at swing start [m/s]
  double acc0 = 0.0;     // vertical acceleration at swing start [m/s^2]
  double h_max = 0.0;    // apex height at the swing midpoint [m]
  double h_swing = 0.0;  // height at touchdown [m]
  double v_swing = 0.0;  // vertical velocity at touchdown [m/s]
  double T = 0.5;        // swing duration [s]
};

struct QuinticCoeffs {
  std::array<double, 6> a{};  // f(t) = sum_k a[k] t^k
};

struct FootRef {
  double height = 0.0;    // [m]
  double velocity = 0.0;  // [m/s]
};

struct FootReferences {
  FootRef left;
  FootRef right;
};

/// Advances the phase by dt, wrapping modulo one cycle.
/// Throws std::invalid_argument if cycle_time <= 0 or dt < 0.
GaitClock phase_advance(const GaitClock& clock, double dt);

/// Left stance on [0, 0.5), right stance on [0.5, 1). The two masks are
/// complementary during walking; double stance for standing is decided by
/// the environment, not here.
StanceMask stance_mask(const GaitClock& clock);

/// Solves the 6x6 linear system fixing f, f', f'' at t=0, the apex at T/2,
/// and f, f' at T. Throws std::invalid_argument for T <= 0.
QuinticCoeffs solve_quintic(const QuinticConstraints& c);

/// Polynomial value and first two derivatives at t. Extrapolates outside
/// [0, T]; callers clamp.
struct QuinticSample {
  double height = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
};
QuinticSample eval_quintic(const QuinticCoeffs& coeffs, double t);

/// Vertical reference for both feet at the clock's current phase. The
/// swinging foot tracks the quintic at its local swing time (clamped to
/// [0, T]); the stance foot gets (0, 0).
FootReferences foot_reference(const GaitClock& clock, const QuinticCoeffs& coeffs, double T);

}  // namespace dwl::gait
