#pragma once

#include <string>
#include <vector>

#include "ecodrive/phase_kinematics.hpp"
#include "ecodrive/strategy_profile.hpp"
#include "ecodrive/train_model.hpp"

namespace ecodrive {

struct SimSample {
  double t = 0.0;
  double x = 0.0;
  double v = 0.0;
  double u_a = 0.0;
  double u_b = 0.0;
  PhaseKind phase = PhaseKind::Speedhold;
};

struct SimResult {
  std::vector<SimSample> samples;
  double distance = 0.0;
  std::vector<double> interval_energy;  // trapezoidal integral of u_a v, J per unit mass
  double total_energy = 0.0;
  double terminal_speed = 0.0;
};

struct SimOptions {
  double dt = 0.01;             // RK4 step, s
  double output_stride = 1.0;   // sample spacing, s
  double accel_speed_floor = 1e-3;  // reported u_a = A / max(v, floor) under full traction
};

/**
 * @brief Forward RK4 integration of x' = v, v' = u_a - u_b - r(v) + g(x)
 * under the control law of each scheduled phase.
 *
 * Full traction is integrated in kinetic-energy form, q = v^2/2 with
 * q' = A - phi(v) + g(x) v, which is regular at rest. Speedhold applies
 * u_a = r(V) - g(x) with V the phase's start speed. Steps land exactly on
 * phase boundaries, grid times and output times. Throws ControlInfeasible
 * when a speedhold needs u_a outside [0, H_a(v)].
 */
SimResult simulate(const TrainParams& p, const TrackProfile& track, const SpeedProfile& profile,
                   const SimOptions& options = {});

struct VerifyTolerance {
  double distance = 5.0;         // m
  double energy = 3.0;           // J per unit mass
  double terminal_speed = 0.05;  // m/s
};

struct VerifyItem {
  std::string name;
  double analytic = 0.0;
  double simulated = 0.0;
  double tolerance = 0.0;
  bool passed = false;

  double delta() const { return simulated - analytic; }
};

struct VerifyReport {
  std::size_t train_index = 0;
  std::vector<VerifyItem> items;

  bool passed() const;
};

VerifyReport verify(const SpeedProfile& profile, const ProfileEvaluation& evaluation,
                    const SimResult& sim, const VerifyTolerance& tol = {});

}  // namespace ecodrive
