#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "ecodrive/errors.hpp"
#include "ecodrive/phase_kinematics.hpp"
#include "oracle.hpp"

using namespace ecodrive;

namespace {

const TrainParams kP;
const oracle::Train kTr;

// Time-domain RK4 of v' = A/v - r(v) in kinetic-energy form, for speed_after.
double accel_speed_rk4(double v0, double elapsed) {
  const int steps = 20000;
  const double h = elapsed / steps;
  double q = 0.5 * v0 * v0;
  auto f = [](double qq) { return kTr.A - kTr.phi(std::sqrt(2.0 * std::max(qq, 0.0))); };
  for (int i = 0; i < steps; ++i) {
    const double k1 = f(q), k2 = f(q + 0.5 * h * k1), k3 = f(q + 0.5 * h * k2), k4 = f(q + h * k3);
    q += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return std::sqrt(2.0 * q);
}

}  // namespace

TEST_CASE("full traction metrics against a speed-domain RK4 oracle") {
  for (auto [a, b] : {std::pair{0.0, 26.6844}, {10.0, 30.0}, {25.0, 34.59}}) {
    const PhaseMetrics m = accel_metrics(kP, a, b);
    const oracle::Metrics o = oracle::accel(kTr, a, b);
    CHECK(m.duration == doctest::Approx(o.t).epsilon(1e-9));
    CHECK(m.distance == doctest::Approx(o.x).epsilon(1e-9));
    CHECK(m.energy == doctest::Approx(kP.traction_A * m.duration).epsilon(1e-15));
  }
}

TEST_CASE("coast and brake closed forms against RK4 and quadrature") {
  for (auto [a, b] : {std::pair{34.59, 20.17}, {26.68, 16.73}, {20.0, 0.0}}) {
    const PhaseMetrics c = coast_metrics(kP, a, b);
    const oracle::Metrics o = oracle::coast(kTr, a, b);
    CHECK(c.duration == doctest::Approx(o.t).epsilon(1e-9));
    CHECK(c.distance == doctest::Approx(o.x).epsilon(1e-9));
    CHECK(c.energy == 0.0);
    const PhaseMetrics cq = coast_metrics_quadrature(kP, a, b);
    CHECK(c.duration == doctest::Approx(cq.duration).epsilon(1e-11));
    CHECK(c.distance == doctest::Approx(cq.distance).epsilon(1e-11));

    const PhaseMetrics br = brake_metrics(kP, a, b);
    const oracle::Metrics ob = oracle::brake(kTr, a, b);
    CHECK(br.duration == doctest::Approx(ob.t).epsilon(1e-9));
    CHECK(br.distance == doctest::Approx(ob.x).epsilon(1e-9));
    const PhaseMetrics bq = brake_metrics_quadrature(kP, a, b);
    CHECK(br.duration == doctest::Approx(bq.duration).epsilon(1e-11));
    CHECK(br.distance == doctest::Approx(bq.distance).epsilon(1e-11));
  }
}

TEST_CASE("speedhold metrics") {
  const PhaseMetrics h = hold_metrics(kP, 25.0, 100.0);
  CHECK(h.duration == 100.0);
  CHECK(h.distance == doctest::Approx(2500.0));
  CHECK(h.energy == doctest::Approx(100.0 * kTr.phi(25.0)));
  CHECK_THROWS_AS(hold_metrics(kP, 25.0, -1.0), SolverError);
}

TEST_CASE("zero-length phases are zero") {
  const PhaseMetrics a = accel_metrics(kP, 20.0, 20.0);
  CHECK(a.duration == 0.0);
  CHECK(a.distance == 0.0);
  CHECK(coast_metrics(kP, 20.0, 20.0).duration == 0.0);
  CHECK(brake_metrics(kP, 0.0, 0.0).distance == 0.0);
}

TEST_CASE("invalid phase directions and the speed cap") {
  CHECK_THROWS_AS(accel_metrics(kP, 20.0, 10.0), SolverError);
  CHECK_THROWS_AS(coast_metrics(kP, 10.0, 20.0), SolverError);
  CHECK_THROWS_AS(brake_metrics(kP, 10.0, 20.0), SolverError);
  try {
    accel_metrics(kP, 0.0, 0.999 * max_sustainable_speed(kP));
    FAIL("expected SpeedCapExceeded");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::SpeedCapExceeded);
  }
}

TEST_CASE("property: phase metrics are additive over split speed ranges") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double cap = speed_cap(kP);
  for (int i = 0; i < 200; ++i) {
    double v[3] = {u(rng) * cap, u(rng) * cap, u(rng) * cap};
    std::sort(v, v + 3);
    const PhaseMetrics whole = accel_metrics(kP, v[0], v[2]);
    const PhaseMetrics parts = accel_metrics(kP, v[0], v[1]) + accel_metrics(kP, v[1], v[2]);
    CHECK(std::abs(whole.duration - parts.duration) <= 1e-9 * std::max(1.0, whole.duration));
    CHECK(std::abs(whole.distance - parts.distance) <= 1e-9 * std::max(1.0, whole.distance));
    CHECK(std::abs(whole.energy - parts.energy) <= 1e-9 * std::max(1.0, whole.energy));

    for (auto fn : {&coast_metrics, &brake_metrics}) {
      const PhaseMetrics w = fn(kP, v[2], v[0]);
      const PhaseMetrics s = fn(kP, v[2], v[1]) + fn(kP, v[1], v[0]);
      CHECK(std::abs(w.duration - s.duration) <= 1e-9 * std::max(1.0, w.duration));
      CHECK(std::abs(w.distance - s.distance) <= 1e-9 * std::max(1.0, w.distance));
    }
  }
}

TEST_CASE("speed_after inverts the phase durations") {
  const PhaseMetrics a = accel_metrics(kP, 5.0, 30.0);
  CHECK(speed_after(kP, PhaseKind::MaxAccel, 5.0, a.duration) == doctest::Approx(30.0).epsilon(1e-10));
  CHECK(speed_after(kP, PhaseKind::MaxAccel, 0.0, 60.0) ==
        doctest::Approx(accel_speed_rk4(0.0, 60.0)).epsilon(1e-8));
  const PhaseMetrics c = coast_metrics(kP, 30.0, 12.0);
  CHECK(speed_after(kP, PhaseKind::Coast, 30.0, c.duration) == doctest::Approx(12.0).epsilon(1e-10));
  const PhaseMetrics b = brake_metrics(kP, 16.0, 0.0);
  CHECK(speed_after(kP, PhaseKind::MaxBrake, 16.0, b.duration) == doctest::Approx(0.0));
  CHECK(speed_after(kP, PhaseKind::MaxBrake, 16.0, b.duration + 10.0) == 0.0);
  CHECK(speed_after(kP, PhaseKind::Speedhold, 22.0, 123.0) == 22.0);
}

TEST_CASE("partial metrics agree with full metrics at the phase end") {
  const PhaseMetrics a = accel_metrics(kP, 5.0, 30.0);
  const PhaseMetrics pa = partial_metrics(kP, PhaseKind::MaxAccel, 5.0, a.duration);
  CHECK(pa.distance == doctest::Approx(a.distance).epsilon(1e-9));
  CHECK(pa.energy == doctest::Approx(a.energy).epsilon(1e-12));
  const PhaseMetrics c = coast_metrics(kP, 30.0, 12.0);
  const PhaseMetrics pc = partial_metrics(kP, PhaseKind::Coast, 30.0, c.duration);
  CHECK(pc.distance == doctest::Approx(c.distance).epsilon(1e-9));
  CHECK(pc.energy == 0.0);
}
