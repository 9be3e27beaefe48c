#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ecodrive/adjoint_switching.hpp"
#include "ecodrive/phase_kinematics.hpp"
#include "ecodrive/train_model.hpp"

namespace ecodrive {

struct Phase {
  PhaseKind kind = PhaseKind::Speedhold;
  double t_start = 0.0;
  double t_end = 0.0;
  double v_start = 0.0;
  double v_end = 0.0;
  std::size_t interval = 0;  // grid interval that contains the phase

  double duration() const { return t_end - t_start; }
};

/// Phases of one train, tiling [0, T] with continuous speed, v(0) = v(T) = 0.
struct SpeedProfile {
  std::vector<Phase> phases;
  std::size_t train_index = 0;
  std::vector<double> grid;  // t_0 = 0 < t_1 < ... < t_{n+1} = T

  std::size_t interval_count() const { return grid.empty() ? 0 : grid.size() - 1; }
  double horizon() const { return grid.empty() ? 0.0 : grid.back(); }
};

struct ProfileEvaluation {
  double total_distance = 0.0;
  std::vector<double> interval_energy;  // J per unit mass, k = 0..n
  double total_energy = 0.0;
  std::vector<double> transition_speeds;  // v(t_k) for k = 1..n (index k-1)
  double braking_speed = 0.0;             // speed at the start of the final brake
};

/// One transition or tail phase inside an interval, before time placement.
struct PlannedPhase {
  PhaseKind kind = PhaseKind::MaxAccel;
  double v_start = 0.0;
  double v_end = 0.0;
  PhaseMetrics metrics;
};

struct IntervalPlan {
  double hold_speed = 0.0;
  std::vector<PlannedPhase> before_hold;
  std::vector<PlannedPhase> after_hold;
  /// Interval length minus transition time. Signed: negative means the
  /// transitions do not fit.
  double hold_duration = 0.0;
};

/**
 * @brief Optimal-type strategy for fixed hold speeds, prior to time placement.
 *
 * Distance and energies treat the hold as contributing hold_duration * (V,
 * phi(V)) even when hold_duration < 0. This keeps them smooth for the outer
 * Newton solve.
 */
struct StrategyPlan {
  std::vector<IntervalPlan> intervals;
  std::vector<double> transition_speeds;  // W_k, k = 1..n (index k-1)
  double braking_speed = 0.0;
  double distance = 0.0;
  std::vector<double> interval_energy;
  double total_energy = 0.0;

  /// Smallest hold duration and the interval where it occurs.
  double min_hold_duration() const;
  std::size_t tightest_interval() const;
};

/// Hold speed per interval: constrained_speed(V, w_k).
std::vector<double> hold_speeds_for(const TrainParams& p, double V, const IntervalWeights& weights);

/// Throws InvalidInput unless grid is strictly increasing, starts at 0 and has >= 2 points.
void validate_grid(std::span<const double> grid);

StrategyPlan plan_strategy(const TrainParams& p, std::span<const double> hold_speeds,
                           std::span<const double> grid);

/**
 * @brief Builds the optimal-type profile for unconstrained speed V and weights.
 *
 * Interval 0 starts with full traction from rest, and every interval holds at
 * V_k = constrained_speed(V, w_k). Where adjacent hold speeds differ, the
 * boundary pair (accel then coast, or coast then accel) meets the switching
 * speed W_k exactly at t_k. The last interval ends with coast to U(V_n) and
 * full brake to rest at T. Throws InfeasibleTiming when a hold duration is
 * negative, naming the interval and its boundaries.
 */
SpeedProfile build_profile(const TrainParams& p, double V, const IntervalWeights& weights,
                           std::span<const double> grid, std::size_t train_index = 0);

SpeedProfile build_profile_from_holds(const TrainParams& p, std::span<const double> hold_speeds,
                                      std::span<const double> grid, std::size_t train_index = 0);

/// Re-integrates a profile phase by phase; phases that straddle a grid time are split there.
ProfileEvaluation evaluate_profile(const TrainParams& p, const SpeedProfile& profile);

/// Speed at time t (clamped to [0, T]).
double speed_at(const TrainParams& p, const SpeedProfile& profile, double t);

struct ProfileSample {
  double t = 0.0;
  double v = 0.0;
  double x = 0.0;
  PhaseKind phase = PhaseKind::Speedhold;
  double u_a = 0.0;
  double u_b = 0.0;
};

/// Samples at t = 0, stride, 2 stride, ..., always including T.
std::vector<ProfileSample> sample_profile(const TrainParams& p, const SpeedProfile& profile,
                                          double stride);

struct EnergySensitivity {
  double d_prev = 0.0;  // dE_k / dV_{k-1}
  double d_self = 0.0;  // dE_k / dV_k
  double d_next = 0.0;  // dE_k / dV_{k+1}
  bool has_prev = false;
  bool has_next = false;

  static int sign(double x) { return (x > 0.0) - (x < 0.0); }
};

/// Central differences of E_k with respect to the hold speeds of intervals
/// k-1, k and k+1, each perturbed on its own.
EnergySensitivity energy_sensitivity(const TrainParams& p, double V,
                                     const IntervalWeights& weights,
                                     std::span<const double> grid, std::size_t k);

}  // namespace ecodrive
