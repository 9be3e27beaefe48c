#include "ecodrive/phase_kinematics.hpp"

#include <cmath>
#include <sstream>

#include "ecodrive/errors.hpp"
#include "ecodrive/quadrature.hpp"
#include "ecodrive/roots.hpp"

namespace ecodrive {

namespace {

void check_cap(const TrainParams& p, double v) {
  const double cap = speed_cap(p);
  if (v > cap * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "speed " << v << " exceeds 0.99*v_max = " << cap;
    throw SolverError(ErrorCode::SpeedCapExceeded, msg.str());
  }
}

void check_decelerating(const char* phase, double v_from, double v_to) {
  if (!(v_from >= v_to) || v_to < 0.0) {
    std::ostringstream msg;
    msg << phase << " requires v_from >= v_to >= 0, got " << v_from << " -> " << v_to;
    throw SolverError(ErrorCode::InvalidPhase, msg.str());
  }
}

kernels::CubicDenominator accel_denominator(const TrainParams& p) {
  return {p.traction_A, -p.r0, 0.0, -p.r2};
}

// Decelerating under a constant retarding force c + r2 v^2, c = r0 (+ H_b).
// time = int dv/(c + r2 v^2), distance = int v dv/(c + r2 v^2).
PhaseMetrics quadratic_drag_metrics(double c, double r2, double v_from, double v_to) {
  PhaseMetrics m;
  if (r2 == 0.0) {
    m.duration = (v_from - v_to) / c;
    m.distance = (v_from * v_from - v_to * v_to) / (2.0 * c);
    return m;
  }
  const double k = std::sqrt(r2 / c);
  // atan(a) - atan(b) = atan((a - b) / (1 + a b)) for a, b >= 0
  const double a = v_from * k;
  const double b = v_to * k;
  m.duration = std::atan2(a - b, 1.0 + a * b) / std::sqrt(c * r2);
  m.distance = std::log1p(r2 * (v_from * v_from - v_to * v_to) / (c + r2 * v_to * v_to)) /
               (2.0 * r2);
  return m;
}

// Speed after `elapsed` seconds under constant force c + r2 v^2.
double quadratic_drag_speed(double c, double r2, double v_from, double elapsed) {
  if (r2 == 0.0) return std::max(0.0, v_from - c * elapsed);
  const double k = std::sqrt(r2 / c);
  const double theta = std::atan(v_from * k) - elapsed * std::sqrt(c * r2);
  if (theta <= 0.0) return 0.0;
  return std::tan(theta) / k;
}

}  // namespace

const char* to_string(PhaseKind kind) noexcept {
  switch (kind) {
    case PhaseKind::MaxAccel:
      return "accel";
    case PhaseKind::Speedhold:
      return "hold";
    case PhaseKind::Coast:
      return "coast";
    case PhaseKind::MaxBrake:
      return "brake";
  }
  return "unknown";
}

PhaseMetrics accel_metrics(const TrainParams& p, double v_from, double v_to) {
  if (!(v_from <= v_to) || v_from < 0.0) {
    std::ostringstream msg;
    msg << "accel requires 0 <= v_from <= v_to, got " << v_from << " -> " << v_to;
    throw SolverError(ErrorCode::InvalidPhase, msg.str());
  }
  check_cap(p, v_to);
  if (v_from == v_to) return {};
  QuadratureOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-14;
  const MomentIntegrals I = integrate_moments(accel_denominator(p), v_from, v_to, opt);
  return {I.first, I.second, p.traction_A * I.first};
}

PhaseMetrics coast_metrics(const TrainParams& p, double v_from, double v_to) {
  check_decelerating("coast", v_from, v_to);
  check_cap(p, v_from);
  if (v_from == v_to) return {};
  return quadratic_drag_metrics(p.r0, p.r2, v_from, v_to);
}

PhaseMetrics brake_metrics(const TrainParams& p, double v_from, double v_to) {
  check_decelerating("brake", v_from, v_to);
  check_cap(p, v_from);
  if (v_from == v_to) return {};
  return quadratic_drag_metrics(p.r0 + p.brake_bound, p.r2, v_from, v_to);
}

PhaseMetrics hold_metrics(const TrainParams& p, double V, double dt) {
  if (dt < 0.0) {
    throw SolverError(ErrorCode::InvalidPhase, "speedhold duration must be >= 0");
  }
  check_cap(p, V);
  return {dt, V * dt, phi(p, V) * dt};
}

PhaseMetrics coast_metrics_quadrature(const TrainParams& p, double v_from, double v_to) {
  check_decelerating("coast", v_from, v_to);
  const MomentIntegrals I =
      integrate_moments({0.0, p.r0, 0.0, p.r2}, v_to, v_from);
  return {I.first, I.second, 0.0};
}

PhaseMetrics brake_metrics_quadrature(const TrainParams& p, double v_from, double v_to) {
  check_decelerating("brake", v_from, v_to);
  const MomentIntegrals I =
      integrate_moments({0.0, p.r0 + p.brake_bound, 0.0, p.r2}, v_to, v_from);
  return {I.first, I.second, 0.0};
}

double speed_after(const TrainParams& p, PhaseKind kind, double v_from, double elapsed) {
  if (elapsed <= 0.0) return v_from;
  switch (kind) {
    case PhaseKind::Speedhold:
      return v_from;
    case PhaseKind::Coast:
      return quadratic_drag_speed(p.r0, p.r2, v_from, elapsed);
    case PhaseKind::MaxBrake:
      return quadratic_drag_speed(p.r0 + p.brake_bound, p.r2, v_from, elapsed);
    case PhaseKind::MaxAccel: {
      // t(v) = int_{v_from}^{v} s ds / (A - phi(s)) is increasing; invert on [v_from, cap].
      const double cap = speed_cap(p);
      if (accel_metrics(p, v_from, cap).duration <= elapsed) {
        throw SolverError(ErrorCode::SpeedCapExceeded, "acceleration runs past the speed cap");
      }
      return bracketed_newton(
          [&](double v) {
            const double t = accel_metrics(p, v_from, v).duration - elapsed;
            const double dt_dv = v / (p.traction_A - phi(p, v));
            return std::pair{t, dt_dv};
          },
          v_from, cap, RootOptions{1e-11, 200});
    }
  }
  return v_from;
}

PhaseMetrics partial_metrics(const TrainParams& p, PhaseKind kind, double v_from,
                             double elapsed) {
  if (elapsed <= 0.0) return {};
  switch (kind) {
    case PhaseKind::Speedhold:
      return hold_metrics(p, v_from, elapsed);
    case PhaseKind::Coast: {
      const double v = speed_after(p, kind, v_from, elapsed);
      PhaseMetrics m = coast_metrics(p, v_from, v);
      m.duration = elapsed;  // stationary after stopping
      return m;
    }
    case PhaseKind::MaxBrake: {
      const double v = speed_after(p, kind, v_from, elapsed);
      PhaseMetrics m = brake_metrics(p, v_from, v);
      m.duration = elapsed;
      return m;
    }
    case PhaseKind::MaxAccel: {
      const double v = speed_after(p, kind, v_from, elapsed);
      PhaseMetrics m = accel_metrics(p, v_from, v);
      m.duration = elapsed;
      m.energy = p.traction_A * elapsed;
      return m;
    }
  }
  return {};
}

}  // namespace ecodrive
