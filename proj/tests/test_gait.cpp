#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "dwl/gait.hpp"
#include "dwl/rng.hpp"

using namespace dwl;
using namespace dwl::gait;

TEST_CASE("phase advance wraps and recomputes the clock signal") {
  GaitClock c{1.0, 0.0};
  CHECK(phase_advance(c, 0.25).phase == doctest::Approx(0.25));

  GaitClock w{1.0, 0.9};
  CHECK(phase_advance(w, 0.2).phase == doctest::Approx(0.1));

  const auto sig = phase_advance(c, 0.5).clock_signal();
  CHECK(sig[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sig[1] == doctest::Approx(-1.0));

  CHECK_THROWS_AS(phase_advance(GaitClock{0.0, 0.0}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(phase_advance(c, -0.1), std::invalid_argument);
}

TEST_CASE("clock signal stays on the unit circle") {
  RngStream rng(3, 0);
  GaitClock c{0.73, 0.0};
  for (int i = 0; i < 500; ++i) {
    c = phase_advance(c, rng.uniform(0.0, 0.2));
    const auto s = c.clock_signal();
    CHECK(s[0] * s[0] + s[1] * s[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.phase >= 0.0);
    CHECK(c.phase < 1.0);
  }
}

TEST_CASE("stance mask: left first half, right second half, complementary") {
  CHECK(stance_mask(GaitClock{1.0, 0.25}).left == 1);
  CHECK(stance_mask(GaitClock{1.0, 0.25}).right == 0);
  CHECK(stance_mask(GaitClock{1.0, 0.75}).left == 0);
  CHECK(stance_mask(GaitClock{1.0, 0.75}).right == 1);
  // half-open boundary: phase 0.5 belongs to right stance
  CHECK(stance_mask(GaitClock{1.0, 0.5}).left == 0);
  CHECK(stance_mask(GaitClock{1.0, 0.5}).right == 1);

  // complementary and periodic over a full sweep
  for (int i = 0; i < 200; ++i) {
    const double phase = i / 200.0;
    const auto m = stance_mask(GaitClock{1.0, phase});
    CHECK(m.left + m.right == 1);
    GaitClock next_cycle{1.0, phase};
    next_cycle = phase_advance(next_cycle, 1.0);
    const auto m2 = stance_mask(next_cycle);
    CHECK(m.left == m2.left);
  }
}

TEST_CASE("quintic solve reproduces the published coefficient table") {
  // published constraint set; the initial acceleration closing the 6x6
  // system is 2 * a2 = 10
  QuinticConstraints c{0.0, 0.1, 10.0, 0.1, 0.0, 0.0, 0.5};
  const auto q = solve_quintic(c);
  CHECK(q.a[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(q.a[1] == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(q.a[2] == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(q.a[3] == doctest::Approx(-18.8).epsilon(1e-9));
  CHECK(q.a[4] == doctest::Approx(12.0).epsilon(1e-9));
  CHECK(q.a[5] == doctest::Approx(9.6).epsilon(1e-9));

  // apex at the midpoint, touchdown height and velocity
  CHECK(eval_quintic(q, 0.25).height == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(eval_quintic(q, 0.5).height == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(eval_quintic(q, 0.5).velocity == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(eval_quintic(q, 0.0).height == doctest::Approx(0.0));
}

TEST_CASE("zero constraints give the zero polynomial") {
  QuinticConstraints c{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0};
  const auto q = solve_quintic(c);
  for (double a : q.a) CHECK(a == doctest::Approx(0.0).epsilon(1e-12));
  const auto s = eval_quintic(q, 0.37);
  CHECK(s.height == 0.0);
  CHECK(s.velocity == 0.0);
  CHECK(s.acceleration == 0.0);
}

TEST_CASE("solve/eval round trip reproduces random constraints") {
  RngStream rng(17, 0);
  for (int trial = 0; trial < 200; ++trial) {
    QuinticConstraints c;
    c.h0 = rng.uniform(-0.2, 0.2);
    c.v0 = rng.uniform(-1.0, 1.0);
    c.acc0 = rng.uniform(-20.0, 20.0);
    c.h_max = rng.uniform(-0.3, 0.3);
    c.h_swing = rng.uniform(-0.2, 0.2);
    c.v_swing = rng.uniform(-1.0, 1.0);
    c.T = rng.uniform(0.1, 2.0);
    const auto q = solve_quintic(c);
    CHECK(eval_quintic(q, 0.0).height == doctest::Approx(c.h0).epsilon(1e-9));
    CHECK(eval_quintic(q, 0.0).velocity == doctest::Approx(c.v0).epsilon(1e-9));
    CHECK(eval_quintic(q, 0.0).acceleration == doctest::Approx(c.acc0).epsilon(1e-9));
    CHECK(eval_quintic(q, 0.5 * c.T).height == doctest::Approx(c.h_max).epsilon(1e-9));
    CHECK(eval_quintic(q, c.T).height == doctest::Approx(c.h_swing).epsilon(1e-9));
    CHECK(eval_quintic(q, c.T).velocity == doctest::Approx(c.v_swing).epsilon(1e-9));
  }
  CHECK_THROWS_AS(solve_quintic(QuinticConstraints{0, 0, 0, 0, 0, 0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("foot references: swing foot follows the profile, stance foot is zero") {
  QuinticConstraints c{0.0, 0.1, 10.0, 0.1, 0.0, 0.0, 0.5};
  const auto q = solve_quintic(c);

  // left stance phase: right foot swings from its local time zero
  const auto refs_start = foot_reference(GaitClock{1.0, 1e-9}, q, c.T);
  CHECK(refs_start.left.height == 0.0);
  CHECK(refs_start.left.velocity == 0.0);
  CHECK(refs_start.right.height == doctest::Approx(0.0).epsilon(1e-6));

  // left just entered swing after the half-cycle boundary
  const auto refs_half = foot_reference(GaitClock{1.0, 0.5 + 1e-9}, q, c.T);
  CHECK(refs_half.right.height == 0.0);
  CHECK(refs_half.left.height == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(refs_half.left.velocity == doctest::Approx(0.1).epsilon(1e-4));

  // mid-swing apex with the published profile
  const auto refs_mid = foot_reference(GaitClock{1.0, 0.25}, q, c.T);
  CHECK(refs_mid.right.height == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(refs_mid.left.height == 0.0);
}
