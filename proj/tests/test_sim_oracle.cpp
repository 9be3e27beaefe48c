#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ecodrive/errors.hpp"
#include "ecodrive/sim_oracle.hpp"

using namespace ecodrive;

namespace {

const TrainParams kP;
const std::vector<double> kGrid1{0.0, 750.0, 1350.0, 2400.0};

// accel 10 -> 30, hold 100 s, coast 30 -> 15, brake 15 -> 0; smooth from the first step.
SpeedProfile synthetic_profile() {
  SpeedProfile prof;
  double t = 0.0;
  auto push = [&](PhaseKind kind, double a, double b, double dur) {
    prof.phases.push_back(Phase{kind, t, t + dur, a, b, 0});
    t += dur;
  };
  push(PhaseKind::MaxAccel, 10.0, 30.0, accel_metrics(kP, 10.0, 30.0).duration);
  push(PhaseKind::Speedhold, 30.0, 30.0, 100.0);
  push(PhaseKind::Coast, 30.0, 15.0, coast_metrics(kP, 30.0, 15.0).duration);
  push(PhaseKind::MaxBrake, 15.0, 0.0, brake_metrics(kP, 15.0, 0.0).duration);
  prof.grid = {0.0, t};
  return prof;
}

double synthetic_distance() {
  return accel_metrics(kP, 10.0, 30.0).distance + 3000.0 + coast_metrics(kP, 30.0, 15.0).distance +
         brake_metrics(kP, 15.0, 0.0).distance;
}

}  // namespace

TEST_CASE("classic profile: distance and energy") {
  const SpeedProfile prof = build_profile(kP, 26.6844, IntervalWeights::zeros(3), kGrid1);
  const SimResult sim = simulate(kP, TrackProfile::level(), prof);
  CHECK(std::abs(sim.distance - 60000.0) < 5.0);
  CHECK(std::abs(sim.total_energy - 2541.0) < 3.0);
  CHECK(std::abs(sim.terminal_speed) < 0.05);
  const VerifyReport rep = verify(prof, evaluate_profile(kP, prof), sim);
  CHECK(rep.passed());
}

TEST_CASE("zero-duration profile gives zero everything") {
  SpeedProfile prof;
  prof.grid = {0.0, 100.0};
  const SimResult sim = simulate(kP, TrackProfile::level(), prof);
  CHECK(sim.distance == 0.0);
  CHECK(sim.total_energy == 0.0);
  CHECK(sim.terminal_speed == 0.0);
  CHECK(sim.interval_energy == std::vector<double>{0.0});
}

TEST_CASE("weighted interval energy at the published three-train point") {
  const SpeedProfile prof = build_profile(kP, 27.35, IntervalWeights{{0.0, 0.152612, 0.0}}, kGrid1);
  const SimResult sim = simulate(kP, TrackProfile::level(), prof);
  CHECK(std::abs(sim.interval_energy[1] - 353.0) < 3.0);
}

TEST_CASE("verify: analytic and simulated agree, injected faults are flagged") {
  const std::vector<double> grid{0.0, 660.0, 1020.0, 1380.0, 1740.0, 2400.0};
  const IntervalWeights w{{0.0, 0.213310, 0.378544, 0.170739, 0.0}};
  const SpeedProfile prof = build_profile(kP, 23.2467, w, grid, 4);
  const ProfileEvaluation ev = evaluate_profile(kP, prof);
  const VerifyReport ok = verify(prof, ev, simulate(kP, TrackProfile::level(), prof));
  CHECK(ok.passed());
  CHECK(ok.train_index == 4);
  for (const auto& item : ok.items) {
    if (item.name == "distance") CHECK(std::abs(item.delta()) < 5.0);
    if (item.name.rfind("energy", 0) == 0) CHECK(std::abs(item.delta()) < 3.0);
  }

  SpeedProfile bad = prof;
  for (auto& ph : bad.phases) {
    if (ph.kind == PhaseKind::Speedhold && ph.interval == 2) {
      ph.v_start += 1.0;
      ph.v_end += 1.0;
    }
  }
  const VerifyReport flagged = verify(bad, ev, simulate(kP, TrackProfile::level(), bad));
  CHECK_FALSE(flagged.passed());
  CHECK_FALSE(flagged.items.front().passed);  // distance
}

TEST_CASE("RK4 order: halving dt cuts the distance error about 16x") {
  const SpeedProfile prof = synthetic_profile();
  const double exact = synthetic_distance();
  double errors[3];
  const double steps[3] = {4.0, 2.0, 1.0};
  for (int i = 0; i < 3; ++i) {
    SimOptions opt;
    opt.dt = steps[i];
    opt.output_stride = 1e6;  // keep the step uniform inside each phase
    errors[i] = std::abs(simulate(kP, TrackProfile::level(), prof, opt).distance - exact);
  }
  for (int i = 0; i < 2; ++i) {
    const double ratio = errors[i] / errors[i + 1];
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
  }
}

TEST_CASE("energy accounting per phase type") {
  SpeedProfile accel;
  const double dur = accel_metrics(kP, 0.0, 30.0).duration;
  accel.phases.push_back(Phase{PhaseKind::MaxAccel, 0.0, dur, 0.0, 30.0, 0});
  accel.grid = {0.0, dur};
  const SimResult a = simulate(kP, TrackProfile::level(), accel);
  CHECK(a.total_energy == doctest::Approx(kP.traction_A * dur).epsilon(1e-4));
  CHECK(a.terminal_speed == doctest::Approx(30.0).epsilon(1e-4));

  SpeedProfile drag;
  const double tc = coast_metrics(kP, 30.0, 10.0).duration;
  const double tb = brake_metrics(kP, 10.0, 0.0).duration;
  drag.phases.push_back(Phase{PhaseKind::Coast, 0.0, tc, 30.0, 10.0, 0});
  drag.phases.push_back(Phase{PhaseKind::MaxBrake, tc, tc + tb, 10.0, 0.0, 0});
  drag.grid = {0.0, tc + tb};
  const SimResult d = simulate(kP, TrackProfile::level(), drag);
  CHECK(d.total_energy == 0.0);
  CHECK(std::abs(d.terminal_speed) < 1e-6);
}

TEST_CASE("sample invariants") {
  const SpeedProfile prof = build_profile(kP, 27.04473709, IntervalWeights{{0.0, 0.1073135393, 0.0}}, kGrid1);
  const SimResult sim = simulate(kP, TrackProfile::level(), prof);
  CHECK(sim.samples.size() == 2401);
  for (std::size_t i = 0; i < sim.samples.size(); ++i) {
    const SimSample& s = sim.samples[i];
    if (i > 0) CHECK(s.t > sim.samples[i - 1].t);
    CHECK(s.u_a >= 0.0);
    if (s.v > 1e-3) CHECK(s.u_a <= kP.traction_A / s.v * (1.0 + 1e-9));
    CHECK(s.u_b >= 0.0);
    CHECK(s.u_b <= kP.brake_bound);
    CHECK(s.u_a * s.u_b == 0.0);
  }
}

TEST_CASE("speedhold on a steep climb is not controllable") {
  const SpeedProfile prof = build_profile(kP, 26.6844, IntervalWeights::zeros(3), kGrid1);
  const TrackProfile climb({{0.0, 0.0}, {20000.0, -0.5}});
  try {
    simulate(kP, climb, prof);
    FAIL("expected ControlInfeasible");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::ControlInfeasible);
  }
}

TEST_CASE("invalid step") {
  SimOptions opt;
  opt.dt = 0.0;
  CHECK_THROWS_AS(simulate(kP, TrackProfile::level(), synthetic_profile(), opt), SolverError);
}
