#include "dwl/gait.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dwl::gait {

std::array<double, 2> GaitClock::clock_signal() const {
  const double a = 2.0 * std::numbers::pi * phase;
  return {std::sin(a), std::cos(a)};
}

GaitClock phase_advance(const GaitClock& clock, double dt) {
  if (clock.cycle_time <= 0.0) {
    throw std::invalid_argument("GaitClock: cycle_time must be positive");
  }
  if (dt < 0.0) {
    throw std::invalid_argument("phase_advance: dt must be non-negative");
  }
  GaitClock out = clock;
  out.phase = std::fmod(clock.phase + dt / clock.cycle_time, 1.0);
  if (out.phase < 0.0) out.phase += 1.0;
  return out;
}

StanceMask stance_mask(const GaitClock& clock) {
  StanceMask m;
  m.left = clock.phase < 0.5 ? 1 : 0;
  m.right = 1 - m.left;
  return m;
}

QuinticCoeffs solve_quintic(const QuinticConstraints& c) {
  if (c.T <= 0.0) {
    throw std::invalid_argument("solve_quintic: swing duration T must be positive");
  }
  const double T = c.T;
  const double Th = 0.5 * T;

  Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> b;

  // f(0) = h0, f'(0) = v0, f''(0) = acc0
  A(0, 0) = 1.0;
  A(1, 1) = 1.0;
  A(2, 2) = 2.0;
  // f(T/2) = h_max
  for (int k = 0; k < 6; ++k) A(3, k) = std::pow(Th, k);
  // f(T) = h_swing
  for (int k = 0; k < 6; ++k) A(4, k) = std::pow(T, k);
  // f'(T) = v_swing
  for (int k = 1; k < 6; ++k) A(5, k) = k * std::pow(T, k - 1);

  b << c.h0, c.v0, c.acc0, c.h_max, c.h_swing, c.v_swing;

  const Eigen::Matrix<double, 6, 1> x = A.partialPivLu().solve(b);
  QuinticCoeffs out;
  for (int k = 0; k < 6; ++k) out.a[static_cast<std::size_t>(k)] = x(k);
  return out;
}

QuinticSample eval_quintic(const QuinticCoeffs& coeffs, double t) {
  const auto& a = coeffs.a;
  QuinticSample s;
  // Horner for f, f', f''
  s.height = ((((a[5] * t + a[4]) * t + a[3]) * t + a[2]) * t + a[1]) * t + a[0];
  s.velocity = (((5.0 * a[5] * t + 4.0 * a[4]) * t + 3.0 * a[3]) * t + 2.0 * a[2]) * t + a[1];
  s.acceleration = ((20.0 * a[5] * t + 12.0 * a[4]) * t + 6.0 * a[3]) * t + 2.0 * a[2];
  return s;
}

FootReferences foot_reference(const GaitClock& clock, const QuinticCoeffs& coeffs, double T) {
  const StanceMask mask = stance_mask(clock);
  // Right swings while left stances and vice versa. Local swing time runs
  // from the start of the foot's swing half-cycle.
  const double left_start = 0.5;
  const double right_start = 0.0;

  auto swing_ref = [&](double start) {
    double t = (clock.phase - start) * clock.cycle_time;
    t = std::clamp(t, 0.0, T);
    const QuinticSample s = eval_quintic(coeffs, t);
    return FootRef{s.height, s.velocity};
  };

  FootReferences refs;
  refs.left = mask.left ? FootRef{0.0, 0.0} : swing_ref(left_start);
  refs.right = mask.right ? FootRef{0.0, 0.0} : swing_ref(right_start);
  return refs;
}

}  // namespace dwl::gait
