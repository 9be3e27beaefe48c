#pragma once

#include <cstddef>
#include <vector>

#include "ecodrive/phase_kinematics.hpp"
#include "ecodrive/train_model.hpp"

namespace ecodrive {

/// Non-negative KKT weights w_0..w_n on the interval energy caps.
struct IntervalWeights {
  std::vector<double> w;

  static IntervalWeights zeros(std::size_t intervals) {
    return IntervalWeights{std::vector<double>(intervals, 0.0)};
  }
  std::size_t size() const { return w.size(); }
  bool is_active(std::size_t k) const { return w.at(k) > 0.0; }
  /// Indices k with w_k > 0.
  std::vector<std::size_t> active_set() const;
};

/// On level track the position adjoint is constant: lambda_j = kappa_j = phi'(V_j).
struct AdjointConstants {
  double kappa = 0.0;
};

AdjointConstants adjoint_constants(const TrainParams& p, double V);

/**
 * @brief Modified adjoint eta = mu / v on a phase of the given kind, for an
 * interval whose hold speed is V_hold and whose weight is w.
 *
 * MaxAccel: (1+w) [A - L_V(v)] / [A - phi(v)]; Speedhold: 1+w;
 * Coast: (1+w) L_V(v) / phi(v). MaxBrake throws InvalidPhase.
 */
double eta(const TrainParams& p, PhaseKind phase, double v, double V_hold, double w);

/// Hold speed on a weighted interval: solves (1+w) phi'(V_k) = phi'(V).
/// w may be negative (> -1) while the solver is deciding whether a cap binds;
/// then V_k > V. Throws WeightTooLarge if phi'(V)/(1+w) <= r0.
double constrained_speed(const TrainParams& p, double V, double w);

/// Inverse of constrained_speed: w = phi'(V)/phi'(V_k) - 1.
double weight_between(const TrainParams& p, double V, double V_k);

/// Hold speed and weight of one side of an interval boundary.
struct HoldSide {
  double speed = 0.0;
  double weight = 0.0;
};

/**
 * @brief Boundary speed W at t_k from continuity of eta.
 *
 * prev.speed > next.speed: full traction above prev.speed then coast, so the
 * root lies in (prev.speed, speed_cap]. prev.speed < next.speed: coast below
 * prev.speed then full traction, root in (0, prev.speed). Equal speeds return
 * prev.speed (no transition). Throws NoRoot if the bracket has no sign change.
 */
double switching_speed(const TrainParams& p, HoldSide prev, HoldSide next);

/// Same, with the weights implied by the hold speeds (1+w = kappa / phi'(V)).
double switching_speed(const TrainParams& p, double V_prev, double V_next);

/// Residual of the eta continuity equation with the fractions cleared; zero at
/// the switching speed. Positive multiples of eta_left - eta_right.
double switching_residual(const TrainParams& p, HoldSide prev, HoldSide next, double W);

struct SwitchingSensitivities {
  double d_prev = 0.0;  // dW / dV_prev
  double d_next = 0.0;  // dW / dV_next
};

/// Central differences of switching_speed(p, V_prev, V_next), step 1e-5 V.
SwitchingSensitivities switching_sensitivities(const TrainParams& p, double V_prev,
                                               double V_next);

}  // namespace ecodrive
