#include <doctest.h>

#include <cmath>
#include <limits>

#include "dcdyn/errors.hpp"
#include "dcdyn/stochastic.hpp"

using namespace dcdyn;

TEST_CASE("ou_step deterministic cases") {
  RngStream rng(1, 0);
  OuParams p;
  p.a_it = 2.0;
  p.b_it = 0.0;
  CHECK(ou_step(0.0, 0.01, p, rng) == 0.0);
  CHECK(ou_step(0.0, 1.0, p, rng) == 0.0);
  CHECK(ou_step(1.0, 0.01, p, rng) == doctest::Approx(0.98).epsilon(1e-15));
}

TEST_CASE("ou_step rejects non-finite state") {
  RngStream rng(1, 0);
  OuParams p;
  CHECK_THROWS_AS(ou_step(std::numeric_limits<double>::quiet_NaN(), 0.01, p, rng), ModelError);
}

TEST_CASE("ou stationary moments") {
  RngStream rng(42, 3);
  OuParams p;
  p.a_it = 1.0;
  p.b_it = 0.1;
  p.clamp_sigmas = 0.0;
  const double dt = 0.01;
  double eta = 0.0, sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < 1000; ++i) eta = ou_step(eta, dt, p, rng);  // burn-in, 10 s
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    eta = ou_step(eta, dt, p, rng);
    sum += eta;
    sum2 += eta * eta;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  // Euler-Maruyama stationary variance is b^2 / (2a - a^2 dt); 0.5% off the exact value at this dt.
  CHECK(var == doctest::Approx(0.005).epsilon(0.05));
  CHECK(std::abs(mean) < 0.1 * std::sqrt(0.005));
}

TEST_CASE("ou clamp bounds the output") {
  RngStream rng(7, 0);
  OuParams p;
  p.a_it = 1.0;
  p.b_it = 1.0;
  p.clamp_sigmas = 1.0;
  double eta = 0.0;
  for (int i = 0; i < 100000; ++i) {
    eta = ou_step(eta, 0.01, p, rng);
    REQUIRE(std::abs(eta) <= p.stationary_sigma() + 1e-12);
  }
}

TEST_CASE("jump_step") {
  RngStream rng(5, 1);
  JumpParams none;
  none.rate = 0.0;
  none.amp_hi = 0.5;
  for (int i = 0; i < 1000; ++i) CHECK(jump_step(0.4, 0.01, none, rng).u == 0.4);

  JumpParams up;
  up.rate = 1000.0;  // certain jump at dt = 1 ms
  up.amp_lo = 0.1;
  up.amp_hi = 0.5;
  const JumpStep j = jump_step(1.0, 0.001, up, rng);
  CHECK(j.jumped);
  CHECK(j.u == 1.0);
}

TEST_CASE("jump count follows the Poisson rate") {
  RngStream rng(11, 2);
  JumpParams p;
  p.rate = 0.2;
  p.amp_lo = -0.1;
  p.amp_hi = 0.1;
  double u = 0.5;
  int count = 0;
  const double dt = 0.001;
  const long n = static_cast<long>(1e4 / dt);
  for (long i = 0; i < n; ++i) {
    const JumpStep j = jump_step(u, dt, p, rng);
    u = j.u;
    count += j.jumped ? 1 : 0;
    REQUIRE(u >= 0.0);
    REQUIRE(u <= 1.0);
  }
  CHECK(count == doctest::Approx(2000.0).epsilon(0.05));
}

TEST_CASE("pulse_value") {
  PulseParams p{10.0, 8.0, 1.0, 0.0, 0.0};
  CHECK(pulse_value(0.0, p) == 1.0);
  CHECK(pulse_value(8.0 + 1e-9, p) == 0.0);
  CHECK(pulse_value(8.0, p) == 0.0);  // half-open
  CHECK(pulse_value(10.0, p) == 1.0);

  PulseParams shifted{10.0, 8.0, 3.0, 1.0, 2.5};
  CHECK(pulse_value(2.4, shifted) == 1.0);
  CHECK(pulse_value(2.5, shifted) == 3.0);

  // Exact duty-cycle average over one period on a grid commensurate with the edges.
  PulseParams q{10.0, 8.0, 5.0, 2.0, 0.0};
  const int n = 10000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += pulse_value(i * 10.0 / n, q);
  CHECK(acc / n == doctest::Approx(0.8 * 5.0 + 0.2 * 2.0).epsilon(1e-12));
}

TEST_CASE("rng streams are reproducible and independent") {
  RngStream a(9, 1), b(9, 1), c(9, 2);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    differs = differs || x != c.normal();
  }
  CHECK(differs);
}
