#include "ecodrive/fleet_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ecodrive/errors.hpp"
#include "ecodrive/roots.hpp"

namespace ecodrive {

namespace {

// Active weights are carried as s with w = s |s|: the transition speed moves
// like sqrt(w) near w = 0, so interval energy is Lipschitz in s but not in w.
double weight_of(double s) { return s * std::abs(s); }
double s_of(double w) { return w >= 0.0 ? std::sqrt(w) : -std::sqrt(-w); }

constexpr double kTargetScaledNorm = 1e-11;

struct TrainTerms {
  double distance = 0.0;
  std::vector<double> energy;  // per unit mass
};

TrainTerms train_terms(const TrainJourney& tj, std::span<const double> grid, double V,
                       const IntervalWeights& weights) {
  const auto holds = hold_speeds_for(tj.params, V, weights);
  const StrategyPlan plan = plan_strategy(tj.params, holds, grid);
  return TrainTerms{plan.distance, plan.interval_energy};
}

/// Residual system for a fixed active set; unknowns z = [V_1..V_m, s_1..s_a].
class ActiveSystem {
 public:
  ActiveSystem(const FleetProblem& pb, std::vector<std::size_t> active, double energy_scale,
               IterationReport& report)
      : pb_(pb), active_(std::move(active)), energy_scale_(energy_scale), report_(report) {}

  std::size_t trains() const { return pb_.trains.size(); }
  std::size_t size() const { return trains() + active_.size(); }
  const std::vector<std::size_t>& active() const { return active_; }

  IntervalWeights weights(const Eigen::VectorXd& z) const {
    IntervalWeights w = IntervalWeights::zeros(pb_.interval_count());
    for (std::size_t i = 0; i < active_.size(); ++i) {
      w.w[active_[i]] = weight_of(z[static_cast<Eigen::Index>(trains() + i)]);
    }
    return w;
  }

  std::vector<TrainTerms> terms(const Eigen::VectorXd& z) const {
    const IntervalWeights w = weights(z);
    std::vector<TrainTerms> out;
    out.reserve(trains());
    for (std::size_t j = 0; j < trains(); ++j) {
      out.push_back(train_terms(pb_.trains[j], pb_.grid, z[static_cast<Eigen::Index>(j)], w));
    }
    ++report_.residual_evaluations;
    return out;
  }

  Eigen::VectorXd scaled(const std::vector<TrainTerms>& t) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(size()));
    for (std::size_t j = 0; j < trains(); ++j) {
      r[static_cast<Eigen::Index>(j)] = (t[j].distance - pb_.trains[j].distance) /
                                        pb_.trains[j].distance;
    }
    for (std::size_t i = 0; i < active_.size(); ++i) {
      r[static_cast<Eigen::Index>(trains() + i)] =
          (fleet_energy(t, active_[i]) - *pb_.caps[active_[i]]) / energy_scale_;
    }
    return r;
  }

  double fleet_energy(const std::vector<TrainTerms>& t, std::size_t k) const {
    double e = 0.0;
    for (std::size_t j = 0; j < trains(); ++j) e += pb_.trains[j].params.mass * t[j].energy[k];
    return e;
  }

  bool within_tolerance(const std::vector<TrainTerms>& t, const SolverOptions& opt) const {
    for (std::size_t j = 0; j < trains(); ++j) {
      if (std::abs(t[j].distance - pb_.trains[j].distance) > opt.tol_x) return false;
    }
    for (std::size_t k : active_) {
      const double tol = opt.tol_e_rel * std::max(*pb_.caps[k], energy_scale_);
      if (std::abs(fleet_energy(t, k) - *pb_.caps[k]) > tol) return false;
    }
    return true;
  }

  /// Forward-difference Jacobian. A V_j column only touches train j.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z, const std::vector<TrainTerms>& base,
                           const Eigen::VectorXd& f0) const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd J(n, n);
    const IntervalWeights w = weights(z);
    for (std::size_t j = 0; j < trains(); ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      const double h = 1e-6 * std::max(std::abs(z[col]), 1.0);
      std::vector<TrainTerms> t = base;
      t[j] = train_terms(pb_.trains[j], pb_.grid, z[col] + h, w);
      J.col(col) = (scaled(t) - f0) / h;
    }
    for (std::size_t i = 0; i < active_.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(trains() + i);
      const double h = 1e-6 * std::max(std::abs(z[col]), 1.0);
      Eigen::VectorXd zp = z;
      zp[col] += h;
      J.col(col) = (scaled(terms(zp)) - f0) / h;
    }
    return J;
  }

 private:
  const FleetProblem& pb_;
  std::vector<std::size_t> active_;
  double energy_scale_;
  IterationReport& report_;
};

struct Trial {
  bool ok = false;
  std::vector<TrainTerms> terms;
  Eigen::VectorXd f;
  double norm = std::numeric_limits<double>::infinity();
};

Trial try_point(const ActiveSystem& sys, const Eigen::VectorXd& z) {
  Trial t;
  try {
    t.terms = sys.terms(z);
    t.f = sys.scaled(t.terms);
    t.norm = t.f.norm();
    t.ok = std::isfinite(t.norm);
  } catch (const SolverError&) {
    t.ok = false;
  }
  return t;
}

// Powell dog-leg from z; returns the improved point (possibly unchanged).
Eigen::VectorXd dogleg(const ActiveSystem& sys, Eigen::VectorXd z, Trial cur,
                       const SolverOptions& opt, IterationReport& report) {
  report.used_dogleg = true;
  double radius = 0.1 * std::max(1.0, z.norm());
  for (int it = 0; it < opt.max_newton && cur.norm > kTargetScaledNorm; ++it) {
    ++report.newton_iterations;
    const Eigen::MatrixXd J = sys.jacobian(z, cur.terms, cur.f);
    const Eigen::VectorXd gn = J.colPivHouseholderQr().solve(-cur.f);
    const Eigen::VectorXd g = J.transpose() * cur.f;
    const Eigen::VectorXd Jg = J * g;
    const double alpha = g.squaredNorm() / std::max(Jg.squaredNorm(), 1e-300);
    const Eigen::VectorXd sd = -alpha * g;

    bool accepted = false;
    for (int shrink = 0; shrink < 30 && !accepted; ++shrink) {
      Eigen::VectorXd step;
      if (gn.norm() <= radius) {
        step = gn;
      } else if (sd.norm() >= radius) {
        step = -(radius / g.norm()) * g;
      } else {
        const Eigen::VectorXd d = gn - sd;
        const double a = d.squaredNorm();
        const double b = 2.0 * sd.dot(d);
        const double c = sd.squaredNorm() - radius * radius;
        const double tau = (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
        step = sd + tau * d;
      }
      Trial next = try_point(sys, z + step);
      const double predicted = cur.norm * cur.norm - (cur.f + J * step).squaredNorm();
      const double actual = cur.norm * cur.norm - next.norm * next.norm;
      const double rho = next.ok && predicted > 0.0 ? actual / predicted : -1.0;
      if (rho > 0.75) radius = std::max(radius, 2.0 * step.norm());
      if (rho < 0.25) radius = 0.25 * step.norm();
      if (next.ok && rho > 1e-4) {
        z += step;
        cur = std::move(next);
        accepted = true;
      }
      if (radius < 1e-14) break;
    }
    if (!accepted) break;
  }
  return z;
}

struct SystemResult {
  Eigen::VectorXd z;
  std::vector<TrainTerms> terms;
  bool converged = false;
  double scaled_norm = 0.0;
};

SystemResult solve_system(const ActiveSystem& sys, Eigen::VectorXd z, const SolverOptions& opt,
                          IterationReport& report) {
  Trial cur = try_point(sys, z);
  if (!cur.ok) {
    throw SolverError(ErrorCode::Infeasible, "starting point of the joint solve is not evaluable");
  }
  bool stalled = false;
  for (int it = 0; it < opt.max_newton && cur.norm > kTargetScaledNorm; ++it) {
    ++report.newton_iterations;
    const Eigen::MatrixXd J = sys.jacobian(z, cur.terms, cur.f);
    const Eigen::VectorXd dz = J.colPivHouseholderQr().solve(-cur.f);
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving, lambda *= 0.5) {
      Trial next = try_point(sys, z + lambda * dz);
      if (next.ok && next.norm < cur.norm) {
        z += lambda * dz;
        cur = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      stalled = true;
      break;
    }
  }
  if (stalled && !sys.within_tolerance(cur.terms, opt)) {
    std::ostringstream msg;
    msg << "damped Newton stalled at scaled residual " << cur.norm << "; trying dog-leg";
    report.log.push_back(msg.str());
    z = dogleg(sys, z, cur, opt, report);
    cur = try_point(sys, z);
  }
  SystemResult out;
  out.z = z;
  out.terms = cur.terms;
  out.scaled_norm = cur.norm;
  out.converged = cur.ok && sys.within_tolerance(cur.terms, opt);
  return out;
}

double unconstrained_speed(const TrainJourney& tj, std::span<const double> grid) {
  const TrainParams& p = tj.params;
  const std::size_t n = grid.size() - 1;
  auto distance = [&](double V) {
    const std::vector<double> holds(n, V);
    return plan_strategy(p, holds, grid).distance;
  };
  const double T = grid.back();
  const double lo = tj.distance / T;
  const double hi = speed_cap(p);
  if (lo >= hi || distance(hi) < tj.distance) {
    std::ostringstream msg;
    msg << "journey of " << tj.distance << " m in " << T << " s needs a hold speed above the cap "
        << hi;
    throw SolverError(ErrorCode::Infeasible, msg.str());
  }
  return bracketed_newton(
      [&](double V) {
        const double up = std::min(V + 1e-6 * V, hi);
        const double down = V - 1e-6 * V;
        const double f = distance(V) - tj.distance;
        const double df = (distance(up) - distance(down)) / (up - down);
        return std::pair{f, df};
      },
      lo, hi, RootOptions{1e-12, 200});
}

}  // namespace

void FleetProblem::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw SolverError(ErrorCode::InvalidInput, what);
  };
  require(!trains.empty(), "fleet has no trains");
  for (const auto& t : trains) {
    t.params.validate();
    require(std::isfinite(t.distance) && t.distance > 0.0, "journey distance must be > 0");
  }
  validate_grid(grid);
  require(horizon > 0.0 && grid.back() == horizon, "grid must end at the horizon T");
  require(caps.empty() || caps.size() == interval_count(), "one cap entry per interval required");
  for (const auto& c : caps) {
    require(!c || (std::isfinite(*c) && *c >= 0.0), "caps must be >= 0");
  }
}

FleetProblem without_caps(FleetProblem problem) {
  problem.caps.assign(problem.interval_count(), std::nullopt);
  return problem;
}

double FleetSolution::hold_speed(const TrainParams& p, std::size_t j, std::size_t k) const {
  return constrained_speed(p, V.at(j), weights.w.at(k));
}

std::vector<double> residuals(const FleetProblem& problem, std::span<const double> V,
                              const IntervalWeights& weights,
                              std::span<const std::size_t> active) {
  if (V.size() != problem.trains.size()) {
    throw SolverError(ErrorCode::InvalidInput, "one speed per train required");
  }
  std::vector<double> out;
  std::vector<double> fleet(problem.interval_count(), 0.0);
  for (std::size_t j = 0; j < V.size(); ++j) {
    TrainTerms t;
    try {
      t = train_terms(problem.trains[j], problem.grid, V[j], weights);
    } catch (const SolverError& e) {
      std::ostringstream msg;
      msg << "train " << j << ": " << e.what();
      throw SolverError(e.code(), msg.str());
    }
    out.push_back(t.distance - problem.trains[j].distance);
    for (std::size_t k = 0; k < fleet.size(); ++k) {
      fleet[k] += problem.trains[j].params.mass * t.energy[k];
    }
  }
  for (std::size_t k : active) {
    if (k >= fleet.size() || !problem.caps.at(k)) {
      throw SolverError(ErrorCode::InvalidInput, "active index without a cap");
    }
    out.push_back(fleet[k] - *problem.caps[k]);
  }
  return out;
}

FleetSolution solve(const FleetProblem& problem, const SolverOptions& options) {
  problem.validate();
  FleetSolution sol;
  IterationReport& report = sol.report;
  const std::size_t m = problem.trains.size();
  const std::size_t n = problem.interval_count();
  std::vector<std::optional<double>> caps = problem.caps;
  caps.resize(n);
  FleetProblem pb = problem;
  pb.caps = caps;

  // Unconstrained optimum: one scalar distance solve per train.
  Eigen::VectorXd V(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    V[static_cast<Eigen::Index>(j)] = unconstrained_speed(pb.trains[j], pb.grid);
  }
  {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const std::vector<double> holds(n, V[static_cast<Eigen::Index>(j)]);
      total += pb.trains[j].params.mass *
               plan_strategy(pb.trains[j].params, holds, pb.grid).total_energy;
    }
    sol.energy_scale = total / static_cast<double>(n);
  }

  std::vector<std::size_t> active;
  std::vector<double> s_active;  // s for each entry of `active`
  SystemResult result;
  bool done = false;

  for (int outer = 0; outer < options.max_outer && !done; ++outer) {
    report.outer_iterations = outer + 1;
    ActiveSystem sys(pb, active, sol.energy_scale, report);
    Eigen::VectorXd z(static_cast<Eigen::Index>(sys.size()));
    z.head(static_cast<Eigen::Index>(m)) = V;
    for (std::size_t i = 0; i < active.size(); ++i) {
      z[static_cast<Eigen::Index>(m + i)] = s_active[i];
    }
    result = solve_system(sys, z, options, report);
    if (!result.converged) {
      std::ostringstream msg;
      msg << "joint solve did not converge for active set {";
      for (std::size_t k : active) msg << ' ' << k;
      msg << " }; best scaled residual " << result.scaled_norm << " at V =";
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(m); ++j) msg << ' ' << result.z[j];
      throw SolverError(ErrorCode::NonConvergence, msg.str());
    }
    V = result.z.head(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < active.size(); ++i) {
      s_active[i] = result.z[static_cast<Eigen::Index>(m + i)];
    }

    // drop the most negative weight, if any
    std::optional<std::size_t> drop;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (s_active[i] <= 0.0 && (!drop || s_active[i] < s_active[*drop])) drop = i;
    }
    if (drop) {
      std::ostringstream msg;
      msg << "outer " << outer << ": drop interval " << active[*drop] << " (w = "
          << weight_of(s_active[*drop]) << ")";
      report.log.push_back(msg.str());
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(*drop));
      s_active.erase(s_active.begin() + static_cast<std::ptrdiff_t>(*drop));
      continue;
    }

    // add the most violated inactive cap
    std::optional<std::size_t> add;
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!caps[k] || std::find(active.begin(), active.end(), k) != active.end()) continue;
      const double e = sys.fleet_energy(result.terms, k);
      const double scale = std::max(*caps[k], sol.energy_scale);
      const double excess = (e - *caps[k]) / scale;
      if (e - *caps[k] > options.tol_e_rel * scale && excess > worst) {
        worst = excess;
        add = k;
      }
    }
    if (add) {
      std::ostringstream msg;
      msg << "outer " << outer << ": add interval " << *add << " (relative excess " << worst << ")";
      report.log.push_back(msg.str());
      if (*add == 0) {
        report.diagnostics.push_back(
            "cap on the first interval is active; this configuration is experimental");
      }
      active.push_back(*add);
      s_active.push_back(std::sqrt(options.initial_weight));
      continue;
    }
    done = true;
  }
  if (!done) {
    throw SolverError(ErrorCode::NonConvergence, "active-set iteration limit reached");
  }

  sol.V.assign(V.data(), V.data() + V.size());
  sol.weights = IntervalWeights::zeros(n);
  for (std::size_t i = 0; i < active.size(); ++i) sol.weights.w[active[i]] = weight_of(s_active[i]);

  sol.fleet_interval_energy.assign(n, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const TrainParams& p = pb.trains[j].params;
    try {
      sol.profiles.push_back(build_profile(p, sol.V[j], sol.weights, pb.grid, j));
    } catch (const SolverError& e) {
      if (e.code() == ErrorCode::InfeasibleTiming) {
        std::ostringstream msg;
        msg << "train " << j << ": " << e.what();
        throw SolverError(ErrorCode::Infeasible, msg.str());
      }
      throw;
    }
    sol.evaluations.push_back(evaluate_profile(p, sol.profiles.back()));
    const ProfileEvaluation& ev = sol.evaluations.back();
    for (std::size_t k = 0; k < n; ++k) sol.fleet_interval_energy[k] += p.mass * ev.interval_energy[k];
    sol.train_cost.push_back(p.mass * ev.total_energy);
    sol.total_cost += sol.train_cost.back();
    sol.max_distance_residual =
        std::max(sol.max_distance_residual, std::abs(ev.total_distance - pb.trains[j].distance));
  }
  for (std::size_t k : active) {
    sol.max_energy_residual =
        std::max(sol.max_energy_residual, std::abs(sol.fleet_interval_energy[k] - *caps[k]));
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (std::abs(sol.evaluations[j].total_distance - pb.trains[j].distance) > 1.0) {
      report.diagnostics.push_back("train " + std::to_string(j) +
                                   ": emitted profile distance differs from plan");
    }
  }
  return sol;
}

std::pair<std::vector<double>, IntervalWeights> refine_alternating(const FleetProblem& problem,
                                                                   const FleetSolution& start,
                                                                   int sweeps) {
  std::vector<double> V = start.V;
  IntervalWeights w = start.weights;
  const std::vector<std::size_t> active = w.active_set();
  const std::size_t n = problem.interval_count();

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    // distances with w fixed
    for (std::size_t j = 0; j < V.size(); ++j) {
      const TrainJourney& tj = problem.trains[j];
      auto f = [&](double v) {
        return train_terms(tj, problem.grid, v, w).distance - tj.distance;
      };
      const double h = 1e-6 * V[j];
      for (int it = 0; it < 20; ++it) {
        const double fv = f(V[j]);
        if (std::abs(fv) < 1e-9) break;
        const double df = (f(V[j] + h) - f(V[j] - h)) / (2.0 * h);
        V[j] -= fv / df;
      }
    }
    // active caps with V fixed
    if (active.empty()) continue;
    auto cap_residual = [&](const IntervalWeights& ww) {
      Eigen::VectorXd r(static_cast<Eigen::Index>(active.size()));
      std::vector<double> fleet(n, 0.0);
      for (std::size_t j = 0; j < V.size(); ++j) {
        const TrainTerms t = train_terms(problem.trains[j], problem.grid, V[j], ww);
        for (std::size_t k = 0; k < n; ++k) fleet[k] += problem.trains[j].params.mass * t.energy[k];
      }
      for (std::size_t i = 0; i < active.size(); ++i) {
        r[static_cast<Eigen::Index>(i)] = fleet[active[i]] - *problem.caps[active[i]];
      }
      return r;
    };
    for (int it = 0; it < 20; ++it) {
      const Eigen::VectorXd r = cap_residual(w);
      if (r.norm() < 1e-9) break;
      const auto a = static_cast<Eigen::Index>(active.size());
      Eigen::MatrixXd J(a, a);
      for (Eigen::Index c = 0; c < a; ++c) {
        IntervalWeights wp = w;
        const double s = s_of(w.w[active[static_cast<std::size_t>(c)]]);
        const double h = 1e-6 * std::max(std::abs(s), 1.0);
        wp.w[active[static_cast<std::size_t>(c)]] = weight_of(s + h);
        J.col(c) = (cap_residual(wp) - r) / h;
      }
      const Eigen::VectorXd ds = J.colPivHouseholderQr().solve(-r);
      for (Eigen::Index c = 0; c < a; ++c) {
        const std::size_t k = active[static_cast<std::size_t>(c)];
        w.w[k] = weight_of(s_of(w.w[k]) + ds[c]);
      }
    }
  }
  return {V, w};
}

double incentive_breakeven(const FleetSolution& unconstrained, const FleetSolution& constrained,
                           double energy_price) {
  return (constrained.total_cost - unconstrained.total_cost) * energy_price;
}

}  // namespace ecodrive
