#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "dwl/sim.hpp"

using namespace dwl;
using namespace dwl::sim;

namespace {

RobotModel flight_model() {
  RobotModel m;
  m.settle_time = 0.0;
  return m;
}

noise::RandomizedDynamics passive_dynamics() {
  noise::RandomizedDynamics d;
  d.motor_offset.assign(kNumJoints, 0.0);
  d.pd_factors = {0.0, 0.0};  // zero gains: unactuated
  return d;
}

}  // namespace

TEST_CASE("pd torque") {
  CHECK(pd_torque(0.5, 0.5, 0.0, 20.0, 5.0, 1.0, 0.0, 100.0) == 0.0);
  CHECK(pd_torque(0.6, 0.5, 0.0, 20.0, 5.0, 1.0, 0.0, 100.0) == doctest::Approx(2.0));
  CHECK(pd_torque(0.6, 0.5, 0.0, 20.0, 5.0, 1.1, 0.0, 100.0) == doctest::Approx(2.2));
  CHECK(pd_torque(0.6, 0.5, 0.0, 20.0, 5.0, 1.1, 0.05, 100.0) ==
        doctest::Approx(1.1 * 20.0 * 0.15));
  // damping and clamping
  CHECK(pd_torque(0.0, 0.0, 2.0, 20.0, 5.0, 1.0, 0.0, 100.0) == doctest::Approx(-10.0));
  CHECK(pd_torque(10.0, 0.0, 0.0, 20.0, 5.0, 1.0, 0.0, 8.0) == doctest::Approx(8.0));
}

TEST_CASE("terrain profiles") {
  const auto flat = TerrainProfile::by_name("flat");
  CHECK(flat.height(-3.0) == 0.0);
  CHECK(flat.height(5.0) == 0.0);

  const auto slope = TerrainProfile::by_name("slope");
  CHECK(slope.height(-1.0) == 0.0);
  CHECK(slope.height(2.0) == doctest::Approx(0.5));  // gradient 0.25

  const auto stairs = TerrainProfile::by_name("stairs");
  CHECK(stairs.height(-0.5) == 0.0);
  const double s1 = stairs.height(0.05);
  const double s2 = stairs.height(0.25);
  const double s3 = stairs.height(0.45);
  CHECK(s2 - s1 == doctest::Approx(0.10));  // 10 cm rise per 20 cm run
  CHECK(s3 - s2 == doctest::Approx(0.10));
  CHECK(stairs.height(0.199) == doctest::Approx(s1));  // piecewise constant

  const auto rough = TerrainProfile::by_name("irregular", 5);
  for (double x = 0.0; x < 5.0; x += 0.05) {
    CHECK(rough.height(x) >= 0.0);
    CHECK(rough.height(x) <= 0.10);
  }
  CHECK(rough.height(1.23) == rough.height(1.23));  // deterministic
  CHECK_THROWS_AS(TerrainProfile::by_name("lava"), std::invalid_argument);
}

TEST_CASE("ballistic flight matches closed-form kinematics and frozen joints") {
  Simulator s(flight_model(), TerrainProfile{});
  s.set_dynamics(passive_dynamics());
  s.reset_standing();
  s.mutable_state().q[1] += 50.0;
  s.mutable_state().qd[0] = 1.2;

  const double z0 = s.state().base_z();
  const double x0 = s.state().base_x();
  const auto q0 = s.state().q;
  const double dt = 0.002;
  const int n = 400;
  std::vector<double> targets(kNumJoints, 0.0);
  for (int i = 0; i < n; ++i) s.substep(targets, dt);

  // semi-implicit Euler integrates z0 - g dt^2 n(n+1)/2 exactly
  const double z_expected = z0 - 9.81 * dt * dt * n * (n + 1) / 2.0;
  CHECK(s.state().base_z() == doctest::Approx(z_expected).epsilon(1e-12));
  CHECK(s.state().base_x() == doctest::Approx(x0 + 1.2 * n * dt).epsilon(1e-12));
  // free fall induces no joint motion from rest
  for (int j = 3; j < kNumDofs; ++j) {
    CHECK(s.state().q[j] == doctest::Approx(q0[j]).epsilon(1e-9));
  }
}

TEST_CASE("passive energy drift stays below 0.1% per second") {
  Simulator s(flight_model(), TerrainProfile{});
  s.set_dynamics(passive_dynamics());
  s.reset_standing();
  s.mutable_state().q[1] += 80.0;  // airborne for the whole window
  s.mutable_state().qd[3] = 1.0;   // internal swinging
  s.mutable_state().qd[4] = -0.8;
  s.mutable_state().qd[7] = 0.6;
  s.mutable_state().qd[2] = 0.3;

  const double e0 = s.total_energy();
  std::vector<double> targets(kNumJoints, 0.0);
  for (int i = 0; i < 500; ++i) s.substep(targets, 0.002);  // one second
  const double e1 = s.total_energy();
  CHECK(std::abs(e1 - e0) / std::abs(e0) < 1e-3);
}

TEST_CASE("standing in the nominal pose holds the base within 1 cm for 2 s") {
  RobotModel m;
  Simulator s(m, TerrainProfile{});
  const auto pose = m.nominal_pose();
  const double z0 = s.state().base_z();
  for (int i = 0; i < 1000; ++i) {
    s.substep(pose, 0.002);
    CHECK(std::abs(s.state().base_z() - z0) < 0.01);
  }
  CHECK_FALSE(s.state().failed);
  // weight supported: vertical contact forces match gravity at rest
  const double fz = s.state().feet[0].contact_force + s.state().feet[1].contact_force;
  CHECK(fz == doctest::Approx(m.total_mass() * m.gravity).epsilon(0.02));
}

TEST_CASE("contact force is zero when the feet are above the terrain") {
  Simulator s(flight_model(), TerrainProfile{});
  s.set_dynamics(passive_dynamics());
  s.reset_standing();
  s.mutable_state().q[1] += 1.0;
  std::vector<double> targets(kNumJoints, 0.0);
  s.substep(targets, 0.002);
  CHECK(s.state().feet[0].contact_force == 0.0);
  CHECK(s.state().feet[1].contact_force == 0.0);
  CHECK_FALSE(s.state().feet[0].in_contact);
}

TEST_CASE("lower friction slips further under the same lateral push") {
  auto run = [](double mu) {
    RobotModel m;
    Simulator s(m, TerrainProfile{});
    noise::RandomizedDynamics d;
    d.motor_offset.assign(kNumJoints, 0.0);
    d.friction = mu;
    s.set_dynamics(d);
    s.reset_standing();
    s.apply_push(60.0, 0.0, 0.0, 1.0);
    const auto pose = m.nominal_pose();
    for (int i = 0; i < 500; ++i) s.substep(pose, 0.002);
    return s.state().base_x();
  };
  const double x_slippery = run(0.2);
  const double x_grippy = run(2.0);
  CHECK(x_slippery > x_grippy + 0.01);
}

TEST_CASE("push wrench bookkeeping and monotone response") {
  RobotModel m;
  Simulator s(m, TerrainProfile{});
  CHECK(s.active_push_wrench() == std::array<double, 6>{0, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(s.apply_push(10, 0, 0, 0.0), std::invalid_argument);

  // zero force leaves the trajectory unchanged
  Simulator a(m, TerrainProfile{});
  Simulator b(m, TerrainProfile{});
  b.apply_push(0.0, 0.0, 0.0, 0.5);
  const auto pose = m.nominal_pose();
  for (int i = 0; i < 200; ++i) {
    a.substep(pose, 0.002);
    b.substep(pose, 0.002);
  }
  CHECK(a.state().q == b.state().q);

  // wrench visible exactly during the window
  Simulator c(m, TerrainProfile{});
  c.apply_push(20.0, 0.0, 1.0, 0.1);
  CHECK(c.active_push_wrench()[0] == 20.0);
  CHECK(c.active_push_wrench()[4] == 1.0);
  for (int i = 0; i < 100; ++i) c.substep(pose, 0.002);
  CHECK(c.active_push_wrench()[0] == 0.0);

  // peak velocity deviation grows with push magnitude
  auto peak_speed = [&](double f) {
    Simulator s2(m, TerrainProfile{});
    s2.apply_push(f, 0.0, 0.0, 0.2);
    double peak = 0.0;
    for (int i = 0; i < 300; ++i) {
      s2.substep(pose, 0.002);
      peak = std::max(peak, std::abs(s2.state().qd[0]));
    }
    return peak;
  };
  const double p1 = peak_speed(5.0);
  const double p2 = peak_speed(20.0);
  const double p3 = peak_speed(60.0);
  CHECK(p1 < p2);
  CHECK(p2 < p3);
}

TEST_CASE("height scan reflects the terrain shape") {
  RobotModel m;
  SUBCASE("flat ground gives a constant scan") {
    Simulator s(m, TerrainProfile{});
    const auto scan = s.height_scan(8, 2, -0.35, 0.1);
    CHECK(scan.size() == 16);
    for (double v : scan) CHECK(v == doctest::Approx(scan[0]));
  }
  SUBCASE("stairs appear as 0.10 m steps") {
    Simulator s(flight_model(), TerrainProfile::by_name("stairs"));
    s.mutable_state().q[0] = 0.0;  // pin the base over the staircase origin
    s.mutable_state().q[1] = 1.0;
    const auto scan = s.height_scan(12, 1, 0.1, 0.2);  // one point per tread
    for (std::size_t i = 1; i < scan.size(); ++i) {
      CHECK(scan[i] - scan[i - 1] == doctest::Approx(0.10));
    }
  }
  SUBCASE("slope appears as a 0.25-gradient ramp") {
    Simulator s(flight_model(), TerrainProfile::by_name("slope"));
    s.mutable_state().q[0] = 0.0;
    s.mutable_state().q[1] = 1.0;
    const auto scan = s.height_scan(10, 1, 0.1, 0.1);
    for (std::size_t i = 1; i < scan.size(); ++i) {
      CHECK(scan[i] - scan[i - 1] == doctest::Approx(0.25 * 0.1));
    }
  }
}

TEST_CASE("simulation is deterministic for identical inputs") {
  RobotModel m;
  auto run = [&] {
    Simulator s(m, TerrainProfile::by_name("irregular", 3));
    noise::RandomizedDynamics d;
    d.motor_offset.assign(kNumJoints, 0.01);
    d.friction = 0.9;
    d.motor_strength = 1.05;
    s.set_dynamics(d);
    s.reset_standing();
    std::vector<double> targets(kNumJoints);
    const auto pose = m.nominal_pose();
    for (int i = 0; i < 400; ++i) {
      for (int j = 0; j < kNumJoints; ++j) {
        targets[static_cast<std::size_t>(j)] =
            pose[static_cast<std::size_t>(j)] + 0.1 * std::sin(0.01 * i + j);
      }
      s.substep(targets, 0.002);
    }
    return s.state().q;
  };
  const auto q1 = run();
  const auto q2 = run();
  CHECK(q1 == q2);
}

TEST_CASE("blow-up flags failure instead of corrupting state") {
  Simulator s(flight_model(), TerrainProfile{});
  s.mutable_state().qd[0] = 1e6;
  std::vector<double> targets(kNumJoints, 0.0);
  s.substep(targets, 0.002);
  CHECK(s.state().failed);
}
