#include "ecodrive/sim_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "ecodrive/errors.hpp"

namespace ecodrive {

namespace {

using State = std::array<double, 2>;  // (x, v), or (x, q) under full traction

State axpy(const State& s, double h, const State& k) { return {s[0] + h * k[0], s[1] + h * k[1]}; }

class PhaseDynamics {
 public:
  PhaseDynamics(const TrainParams& p, const TrackProfile& track, const Phase& phase)
      : p_(p), track_(track), kind_(phase.kind), hold_(phase.v_start) {}

  bool energy_form() const { return kind_ == PhaseKind::MaxAccel; }

  State to_internal(double x, double v) const {
    return energy_form() ? State{x, 0.5 * v * v} : State{x, v};
  }
  double speed(const State& s) const {
    return energy_form() ? std::sqrt(2.0 * std::max(s[1], 0.0)) : s[1];
  }

  State rhs(const State& s) const {
    const double v = speed(s);
    const double g = track_.gradient_at(s[0]);
    switch (kind_) {
      case PhaseKind::MaxAccel:
        return {v, p_.traction_A - phi(p_, v) + g * v};
      case PhaseKind::Speedhold:
        return {v, resistance(p_, hold_) - resistance(p_, v)};
      case PhaseKind::Coast:
        return {v, -resistance(p_, v) + g};
      case PhaseKind::MaxBrake:
        return {v, -p_.brake_bound - resistance(p_, v) + g};
    }
    return {0.0, 0.0};
  }

  double traction(const State& s, double floor) const {
    const double v = speed(s);
    switch (kind_) {
      case PhaseKind::MaxAccel:
        return p_.traction_A / std::max(v, floor);
      case PhaseKind::Speedhold:
        return resistance(p_, hold_) - track_.gradient_at(s[0]);
      default:
        return 0.0;
    }
  }

  double power(const State& s) const {
    if (kind_ == PhaseKind::MaxAccel) return p_.traction_A;
    return traction(s, 0.0) * speed(s);
  }

  double brake() const { return kind_ == PhaseKind::MaxBrake ? p_.brake_bound : 0.0; }

  void check_control(const State& s, double t) const {
    if (kind_ != PhaseKind::Speedhold) return;
    const double u = traction(s, 0.0);
    const double v = speed(s);
    const double bound = v > 0.0 ? p_.traction_A / v : INFINITY;
    if (u < -1e-12 || u > bound * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "speedhold at " << hold_ << " m/s needs u_a = " << u << " at t = " << t
          << " s, x = " << s[0] << " m (allowed [0, " << bound << "])";
      throw SolverError(ErrorCode::ControlInfeasible, msg.str());
    }
  }

 private:
  const TrainParams& p_;
  const TrackProfile& track_;
  PhaseKind kind_;
  double hold_;
};

State rk4_step(const PhaseDynamics& d, const State& s, double h) {
  const State k1 = d.rhs(s);
  const State k2 = d.rhs(axpy(s, 0.5 * h, k1));
  const State k3 = d.rhs(axpy(s, 0.5 * h, k2));
  const State k4 = d.rhs(axpy(s, h, k3));
  return {s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
          s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
}

std::size_t interval_index(const std::vector<double>& grid, double t) {
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - grid.begin() - 1, 0));
  return std::min(k, grid.size() - 2);
}

}  // namespace

SimResult simulate(const TrainParams& p, const TrackProfile& track, const SpeedProfile& profile,
                   const SimOptions& options) {
  if (!(options.dt > 0.0) || !(options.output_stride > 0.0)) {
    throw SolverError(ErrorCode::InvalidInput, "dt and output stride must be > 0");
  }
  SimResult out;
  const std::size_t n = profile.interval_count();
  out.interval_energy.assign(n, 0.0);
  if (profile.phases.empty() || n == 0) {
    out.samples.push_back(SimSample{});
    return out;
  }

  double x = 0.0;
  double v = profile.phases.front().v_start;
  double next_output = 0.0;
  auto record = [&](const PhaseDynamics& d, const State& s, double t, PhaseKind kind) {
    out.samples.push_back(SimSample{t, s[0], d.speed(s), d.traction(s, options.accel_speed_floor),
                                    d.brake(), kind});
  };

  for (const Phase& ph : profile.phases) {
    if (ph.duration() <= 0.0) continue;
    const PhaseDynamics dyn(p, track, ph);
    State s = dyn.to_internal(x, v);
    dyn.check_control(s, ph.t_start);

    // breakpoints inside the phase: grid times and output times
    std::vector<double> stops;
    for (double g : profile.grid) {
      if (g > ph.t_start && g < ph.t_end) stops.push_back(g);
    }
    const double first_out = std::ceil(ph.t_start / options.output_stride) * options.output_stride;
    for (double o = first_out; o < ph.t_end; o += options.output_stride) {
      if (o > ph.t_start) stops.push_back(o);
    }
    stops.push_back(ph.t_end);
    std::sort(stops.begin(), stops.end());

    if (next_output <= ph.t_start + 1e-12 && out.samples.empty()) {
      record(dyn, s, ph.t_start, ph.kind);
      next_output = options.output_stride;
    }

    double t = ph.t_start;
    for (double stop : stops) {
      if (stop - t <= 1e-12) continue;
      const auto steps = static_cast<std::size_t>(std::ceil((stop - t) / options.dt - 1e-9));
      const double h = (stop - t) / static_cast<double>(steps);
      const std::size_t k = interval_index(profile.grid, 0.5 * (t + stop));
      double p0 = dyn.power(s);
      for (std::size_t i = 0; i < steps; ++i) {
        s = rk4_step(dyn, s, h);
        const double p1 = dyn.power(s);
        out.interval_energy[k] += 0.5 * h * (p0 + p1);
        p0 = p1;
        dyn.check_control(s, t + h * static_cast<double>(i + 1));
      }
      t = stop;
      if (t >= next_output - 1e-9 && t < profile.horizon() - 1e-9) {
        record(dyn, s, t, ph.kind);
        next_output = t + options.output_stride;
        next_output = std::round(next_output / options.output_stride) * options.output_stride;
      }
    }
    x = s[0];
    v = dyn.speed(s);
    if (ph.t_end >= profile.horizon() - 1e-9) {
      out.samples.push_back(SimSample{ph.t_end, x, v, dyn.traction(s, options.accel_speed_floor),
                                      dyn.brake(), ph.kind});
    }
  }

  out.distance = x;
  out.terminal_speed = v;
  for (double e : out.interval_energy) out.total_energy += e;
  return out;
}

bool VerifyReport::passed() const {
  return std::all_of(items.begin(), items.end(), [](const VerifyItem& i) { return i.passed; });
}

VerifyReport verify(const SpeedProfile& profile, const ProfileEvaluation& evaluation,
                    const SimResult& sim, const VerifyTolerance& tol) {
  VerifyReport report;
  report.train_index = profile.train_index;
  auto add = [&](std::string name, double analytic, double simulated, double tolerance) {
    const bool ok = std::isfinite(simulated) && std::abs(simulated - analytic) <= tolerance;
    report.items.push_back(VerifyItem{std::move(name), analytic, simulated, tolerance, ok});
  };
  add("distance", evaluation.total_distance, sim.distance, tol.distance);
  const std::size_t n = std::min(evaluation.interval_energy.size(), sim.interval_energy.size());
  if (evaluation.interval_energy.size() != sim.interval_energy.size()) {
    report.items.push_back(VerifyItem{"interval_count",
                                      static_cast<double>(evaluation.interval_energy.size()),
                                      static_cast<double>(sim.interval_energy.size()), 0.0, false});
  }
  for (std::size_t k = 0; k < n; ++k) {
    add("energy_" + std::to_string(k), evaluation.interval_energy[k], sim.interval_energy[k],
        tol.energy);
  }
  add("terminal_speed", 0.0, sim.terminal_speed, tol.terminal_speed);
  return report;
}

}  // namespace ecodrive
