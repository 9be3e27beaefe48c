#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecodrive/adjoint_switching.hpp"
#include "ecodrive/strategy_profile.hpp"
#include "ecodrive/train_model.hpp"

namespace ecodrive {

struct TrainJourney {
  TrainParams params;
  double distance = 0.0;  // X_j, m
};

/// Fleet of independent level-track journeys sharing [0, T] and an interval
/// grid. caps[k] bounds the mass-scaled fleet traction energy (J) on interval k.
struct FleetProblem {
  std::vector<TrainJourney> trains;
  double horizon = 0.0;
  std::vector<double> grid;
  std::vector<std::optional<double>> caps;

  std::size_t interval_count() const { return grid.empty() ? 0 : grid.size() - 1; }
  std::size_t train_count() const { return trains.size(); }
  /// Throws SolverError(InvalidInput) on any violated invariant.
  void validate() const;
};

FleetProblem without_caps(FleetProblem problem);

struct SolverOptions {
  double tol_x = 1e-3;      // m, per-train distance residual
  double tol_e_rel = 1e-3;  // energy tolerance relative to max(Q_k, mean interval energy)
  int max_outer = 50;       // active-set iterations
  int max_newton = 60;      // Newton / dog-leg iterations per active set
  double initial_weight = 0.1;
};

struct IterationReport {
  int outer_iterations = 0;
  int newton_iterations = 0;
  int residual_evaluations = 0;
  bool used_dogleg = false;
  std::vector<std::string> log;
  std::vector<std::string> diagnostics;
};

struct FleetSolution {
  std::vector<double> V;  // unconstrained hold speed per train
  IntervalWeights weights;
  std::vector<SpeedProfile> profiles;
  std::vector<ProfileEvaluation> evaluations;  // per unit mass
  std::vector<double> fleet_interval_energy;   // sum_j M_j E_{j,k}, J
  std::vector<double> train_cost;              // M_j J_j, J
  double total_cost = 0.0;
  double max_distance_residual = 0.0;  // m
  double max_energy_residual = 0.0;    // J, over the active set
  double energy_scale = 0.0;           // mean unconstrained fleet interval energy, J
  IterationReport report;

  std::vector<std::size_t> active_set() const { return weights.active_set(); }
  /// Hold speed of train j on interval k.
  double hold_speed(const TrainParams& p, std::size_t j, std::size_t k) const;
};

/**
 * @brief Distance and active-cap residuals at a candidate (V, w).
 *
 * Returns m entries distance_j - X_j (m) followed by one entry
 * sum_j M_j E_{j,k} - Q_k (J) per index in `active`, in the given order.
 * Hold durations enter with their sign, so the residual is defined (and
 * smooth) slightly outside the feasible region too.
 */
std::vector<double> residuals(const FleetProblem& problem, std::span<const double> V,
                              const IntervalWeights& weights,
                              std::span<const std::size_t> active);

/**
 * @brief Active-set solve of the capped fleet problem.
 *
 * Starts from the unconstrained optimum, adds the most violated cap with an
 * initial weight, solves distances and active caps jointly by damped Newton
 * with a finite-difference Jacobian (Powell dog-leg as fallback), drops caps
 * whose weight turns non-positive, and repeats until every cap holds.
 * Throws NonConvergence or Infeasible.
 */
FleetSolution solve(const FleetProblem& problem, const SolverOptions& options = {});

/// Naive alternation: re-solve each V_j for its distance with w fixed, then
/// the active weights for their caps with V fixed, `sweeps` times.
/// Returns the updated (V, w) without rebuilding profiles.
std::pair<std::vector<double>, IntervalWeights> refine_alternating(const FleetProblem& problem,
                                                                   const FleetSolution& start,
                                                                   int sweeps);

/// Minimum incentive payment that makes the restricted schedule worthwhile:
/// (constrained cost - unconstrained cost) * price.
double incentive_breakeven(const FleetSolution& unconstrained, const FleetSolution& constrained,
                           double energy_price);

}  // namespace ecodrive
