#include "ecodrive/strategy_profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ecodrive/errors.hpp"

namespace ecodrive {

namespace {

// Holds shorter than this (in magnitude) are rounding noise from the outer solve.
constexpr double kHoldSlack = 1e-7;

PlannedPhase planned(const TrainParams& p, PhaseKind kind, double v_start, double v_end) {
  PlannedPhase ph{kind, v_start, v_end, {}};
  switch (kind) {
    case PhaseKind::MaxAccel:
      ph.metrics = accel_metrics(p, v_start, v_end);
      break;
    case PhaseKind::Coast:
      ph.metrics = coast_metrics(p, v_start, v_end);
      break;
    case PhaseKind::MaxBrake:
      ph.metrics = brake_metrics(p, v_start, v_end);
      break;
    case PhaseKind::Speedhold:
      break;
  }
  return ph;
}

PhaseMetrics full_phase_metrics(const TrainParams& p, const Phase& ph) {
  switch (ph.kind) {
    case PhaseKind::MaxAccel: {
      PhaseMetrics m = accel_metrics(p, ph.v_start, ph.v_end);
      return m;
    }
    case PhaseKind::Coast:
      return coast_metrics(p, ph.v_start, ph.v_end);
    case PhaseKind::MaxBrake:
      return brake_metrics(p, ph.v_start, ph.v_end);
    case PhaseKind::Speedhold:
      return hold_metrics(p, ph.v_start, ph.duration());
  }
  return {};
}

std::size_t interval_of(std::span<const double> grid, double t) {
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  std::size_t k = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
  return std::min(k, grid.size() - 2);
}

}  // namespace

double StrategyPlan::min_hold_duration() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& iv : intervals) m = std::min(m, iv.hold_duration);
  return m;
}

std::size_t StrategyPlan::tightest_interval() const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < intervals.size(); ++k) {
    if (intervals[k].hold_duration < intervals[best].hold_duration) best = k;
  }
  return best;
}

std::vector<double> hold_speeds_for(const TrainParams& p, double V,
                                    const IntervalWeights& weights) {
  std::vector<double> holds(weights.size());
  for (std::size_t k = 0; k < holds.size(); ++k) holds[k] = constrained_speed(p, V, weights.w[k]);
  return holds;
}

void validate_grid(std::span<const double> grid) {
  if (grid.size() < 2) throw SolverError(ErrorCode::InvalidInput, "grid needs at least 2 times");
  if (grid.front() != 0.0) throw SolverError(ErrorCode::InvalidInput, "grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw SolverError(ErrorCode::InvalidInput, "grid must be strictly increasing");
    }
  }
}

StrategyPlan plan_strategy(const TrainParams& p, std::span<const double> hold_speeds,
                           std::span<const double> grid) {
  validate_grid(grid);
  const std::size_t n = grid.size() - 1;  // number of intervals
  if (hold_speeds.size() != n) {
    throw SolverError(ErrorCode::InvalidInput, "one hold speed per grid interval required");
  }
  for (double V : hold_speeds) {
    if (!(V > 0.0)) throw SolverError(ErrorCode::InvalidInput, "hold speeds must be > 0");
  }

  StrategyPlan plan;
  plan.transition_speeds.resize(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    plan.transition_speeds[k - 1] = switching_speed(p, hold_speeds[k - 1], hold_speeds[k]);
  }
  plan.braking_speed = optimal_braking_speed(p, hold_speeds[n - 1]);

  plan.intervals.resize(n);
  plan.interval_energy.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    IntervalPlan& iv = plan.intervals[k];
    const double Vk = hold_speeds[k];
    iv.hold_speed = Vk;

    if (k == 0) {
      iv.before_hold.push_back(planned(p, PhaseKind::MaxAccel, 0.0, Vk));
    } else {
      const double W = plan.transition_speeds[k - 1];
      if (hold_speeds[k - 1] > Vk) {
        iv.before_hold.push_back(planned(p, PhaseKind::Coast, W, Vk));
      } else if (hold_speeds[k - 1] < Vk) {
        iv.before_hold.push_back(planned(p, PhaseKind::MaxAccel, W, Vk));
      }
    }

    if (k + 1 == n) {
      iv.after_hold.push_back(planned(p, PhaseKind::Coast, Vk, plan.braking_speed));
      iv.after_hold.push_back(planned(p, PhaseKind::MaxBrake, plan.braking_speed, 0.0));
    } else {
      const double W = plan.transition_speeds[k];
      if (Vk > hold_speeds[k + 1]) {
        iv.after_hold.push_back(planned(p, PhaseKind::MaxAccel, Vk, W));
      } else if (Vk < hold_speeds[k + 1]) {
        iv.after_hold.push_back(planned(p, PhaseKind::Coast, Vk, W));
      }
    }

    PhaseMetrics transitions;
    for (const auto& ph : iv.before_hold) transitions += ph.metrics;
    for (const auto& ph : iv.after_hold) transitions += ph.metrics;
    iv.hold_duration = (grid[k + 1] - grid[k]) - transitions.duration;

    plan.interval_energy[k] = transitions.energy + phi(p, Vk) * iv.hold_duration;
    plan.distance += transitions.distance + Vk * iv.hold_duration;
  }
  for (double e : plan.interval_energy) plan.total_energy += e;
  return plan;
}

SpeedProfile build_profile(const TrainParams& p, double V, const IntervalWeights& weights,
                           std::span<const double> grid, std::size_t train_index) {
  if (weights.size() + 1 != grid.size()) {
    throw SolverError(ErrorCode::InvalidInput, "one weight per grid interval required");
  }
  const auto holds = hold_speeds_for(p, V, weights);
  return build_profile_from_holds(p, holds, grid, train_index);
}

SpeedProfile build_profile_from_holds(const TrainParams& p, std::span<const double> hold_speeds,
                                      std::span<const double> grid, std::size_t train_index) {
  const StrategyPlan plan = plan_strategy(p, hold_speeds, grid);
  const std::size_t n = plan.intervals.size();

  for (std::size_t k = 0; k < n; ++k) {
    if (plan.intervals[k].hold_duration < -kHoldSlack) {
      std::ostringstream msg;
      msg << "interval " << k << " (" << grid[k] << ", " << grid[k + 1]
          << ") is too short for its transition phases by " << -plan.intervals[k].hold_duration
          << " s (hold speed " << plan.intervals[k].hold_speed << ")";
      throw SolverError(ErrorCode::InfeasibleTiming, msg.str());
    }
  }

  SpeedProfile profile;
  profile.train_index = train_index;
  profile.grid.assign(grid.begin(), grid.end());

  for (std::size_t k = 0; k < n; ++k) {
    const IntervalPlan& iv = plan.intervals[k];
    std::vector<Phase> head;
    double t = grid[k];
    for (const auto& ph : iv.before_hold) {
      if (ph.metrics.duration == 0.0 && ph.v_start == ph.v_end) continue;
      head.push_back(Phase{ph.kind, t, t + ph.metrics.duration, ph.v_start, ph.v_end, k});
      t = head.back().t_end;
    }
    std::vector<Phase> tail;
    double te = grid[k + 1];
    for (auto it = iv.after_hold.rbegin(); it != iv.after_hold.rend(); ++it) {
      if (it->metrics.duration == 0.0 && it->v_start == it->v_end) continue;
      tail.push_back(Phase{it->kind, te - it->metrics.duration, te, it->v_start, it->v_end, k});
      te = tail.back().t_start;
    }
    std::reverse(tail.begin(), tail.end());

    const double head_end = head.empty() ? grid[k] : head.back().t_end;
    const double tail_start = tail.empty() ? grid[k + 1] : tail.front().t_start;
    if (tail_start > head_end) {
      profile.phases.insert(profile.phases.end(), head.begin(), head.end());
      profile.phases.push_back(
          Phase{PhaseKind::Speedhold, head_end, tail_start, iv.hold_speed, iv.hold_speed, k});
      profile.phases.insert(profile.phases.end(), tail.begin(), tail.end());
    } else {
      // zero hold (within slack): meet in the middle
      const double join = 0.5 * (head_end + tail_start);
      if (!head.empty()) head.back().t_end = join;
      if (!tail.empty()) tail.front().t_start = join;
      profile.phases.insert(profile.phases.end(), head.begin(), head.end());
      profile.phases.insert(profile.phases.end(), tail.begin(), tail.end());
    }
  }
  return profile;
}

ProfileEvaluation evaluate_profile(const TrainParams& p, const SpeedProfile& profile) {
  ProfileEvaluation out;
  const std::size_t n = profile.interval_count();
  out.interval_energy.assign(n, 0.0);
  std::span<const double> grid(profile.grid);

  for (const Phase& ph : profile.phases) {
    if (ph.t_end <= ph.t_start) continue;
    const PhaseMetrics full = full_phase_metrics(p, ph);
    out.total_distance += full.distance;

    const std::size_t k0 = interval_of(grid, ph.t_start);
    const double tol = 1e-9 * std::max(1.0, profile.horizon());
    if (ph.t_end <= grid[k0 + 1] + tol) {
      out.interval_energy[k0] += full.energy;
      continue;
    }
    // split at every grid time inside the phase
    double done = 0.0;
    std::size_t k = k0;
    while (k + 1 < grid.size() && grid[k + 1] < ph.t_end - tol) {
      const double upto = partial_metrics(p, ph.kind, ph.v_start, grid[k + 1] - ph.t_start).energy;
      out.interval_energy[k] += upto - done;
      done = upto;
      ++k;
    }
    out.interval_energy[std::min(k, n - 1)] += full.energy - done;
  }
  for (double e : out.interval_energy) out.total_energy += e;

  out.transition_speeds.resize(n > 0 ? n - 1 : 0);
  for (std::size_t k = 1; k < n; ++k) out.transition_speeds[k - 1] = speed_at(p, profile, grid[k]);
  for (auto it = profile.phases.rbegin(); it != profile.phases.rend(); ++it) {
    if (it->kind == PhaseKind::MaxBrake) {
      out.braking_speed = it->v_start;
      break;
    }
  }
  return out;
}

double speed_at(const TrainParams& p, const SpeedProfile& profile, double t) {
  if (profile.phases.empty()) return 0.0;
  if (t <= profile.phases.front().t_start) return profile.phases.front().v_start;
  if (t >= profile.phases.back().t_end) return profile.phases.back().v_end;
  auto it = std::upper_bound(profile.phases.begin(), profile.phases.end(), t,
                             [](double tt, const Phase& ph) { return tt < ph.t_end; });
  if (it == profile.phases.end()) return profile.phases.back().v_end;
  if (t == it->t_start) return it->v_start;
  if (it->kind == PhaseKind::Speedhold) return it->v_start;
  return speed_after(p, it->kind, it->v_start, t - it->t_start);
}

std::vector<ProfileSample> sample_profile(const TrainParams& p, const SpeedProfile& profile,
                                          double stride) {
  if (!(stride > 0.0)) throw SolverError(ErrorCode::InvalidInput, "sample stride must be > 0");
  std::vector<ProfileSample> out;
  if (profile.phases.empty()) return out;

  std::vector<double> x_at_start(profile.phases.size(), 0.0);
  for (std::size_t i = 1; i < profile.phases.size(); ++i) {
    x_at_start[i] = x_at_start[i - 1] + full_phase_metrics(p, profile.phases[i - 1]).distance;
  }

  const double T = profile.horizon();
  std::vector<double> times;
  for (std::size_t i = 0; static_cast<double>(i) * stride < T - 1e-9; ++i) {
    times.push_back(static_cast<double>(i) * stride);
  }
  times.push_back(T);

  std::size_t phase_idx = 0;
  for (double t : times) {
    while (phase_idx + 1 < profile.phases.size() && t > profile.phases[phase_idx].t_end) {
      ++phase_idx;
    }
    const Phase& ph = profile.phases[phase_idx];
    const double elapsed = std::clamp(t - ph.t_start, 0.0, ph.duration());
    ProfileSample s;
    s.t = t;
    s.phase = ph.kind;
    s.v = ph.kind == PhaseKind::Speedhold ? ph.v_start
                                          : (elapsed >= ph.duration()
                                                 ? ph.v_end
                                                 : speed_after(p, ph.kind, ph.v_start, elapsed));
    s.x = x_at_start[phase_idx] +
          (elapsed >= ph.duration() ? full_phase_metrics(p, ph).distance
                                    : partial_metrics(p, ph.kind, ph.v_start, elapsed).distance);
    switch (ph.kind) {
      case PhaseKind::MaxAccel:
        s.u_a = p.traction_A / std::max(s.v, 1e-3);
        break;
      case PhaseKind::Speedhold:
        s.u_a = resistance(p, ph.v_start);
        break;
      case PhaseKind::MaxBrake:
        s.u_b = p.brake_bound;
        break;
      case PhaseKind::Coast:
        break;
    }
    out.push_back(s);
  }
  return out;
}

EnergySensitivity energy_sensitivity(const TrainParams& p, double V,
                                     const IntervalWeights& weights,
                                     std::span<const double> grid, std::size_t k) {
  const std::vector<double> holds = hold_speeds_for(p, V, weights);
  if (k >= holds.size()) throw SolverError(ErrorCode::InvalidInput, "interval out of range");
  auto energy_with = [&](std::size_t i, double delta) {
    std::vector<double> h = holds;
    h[i] += delta;
    return plan_strategy(p, h, grid).interval_energy[k];
  };
  auto derivative = [&](std::size_t i) {
    const double step = 1e-5 * holds[i];
    return (energy_with(i, step) - energy_with(i, -step)) / (2.0 * step);
  };
  EnergySensitivity s;
  s.d_self = derivative(k);
  if (k > 0) {
    s.has_prev = true;
    s.d_prev = derivative(k - 1);
  }
  if (k + 1 < holds.size()) {
    s.has_next = true;
    s.d_next = derivative(k + 1);
  }
  return s;
}

}  // namespace ecodrive
