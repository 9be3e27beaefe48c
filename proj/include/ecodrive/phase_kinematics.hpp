#pragma once

#include "ecodrive/train_model.hpp"

namespace ecodrive {

enum class PhaseKind { MaxAccel, Speedhold, Coast, MaxBrake };

const char* to_string(PhaseKind kind) noexcept;

/// Duration (s), distance (m) and traction energy (J per unit mass) of one phase.
struct PhaseMetrics {
  double duration = 0.0;
  double distance = 0.0;
  double energy = 0.0;

  PhaseMetrics& operator+=(const PhaseMetrics& o) {
    duration += o.duration;
    distance += o.distance;
    energy += o.energy;
    return *this;
  }
  friend PhaseMetrics operator+(PhaseMetrics a, const PhaseMetrics& b) { return a += b; }
};

// Level-track phase integrals. Speeds in m/s; every phase must stay at or
// below speed_cap(p).

/// Full traction from v_from up to v_to: dt = v dv / (A - phi(v)), power is exactly A.
PhaseMetrics accel_metrics(const TrainParams& p, double v_from, double v_to);

/// Coast from v_from down to v_to: dt = dv / r(v). Closed form (arctan / log).
PhaseMetrics coast_metrics(const TrainParams& p, double v_from, double v_to);

/// Full brake (u_b = H_b) from v_from down to v_to: dt = dv / (H_b + r(v)). Closed form.
PhaseMetrics brake_metrics(const TrainParams& p, double v_from, double v_to);

/// Speedhold at V for dt seconds: (dt, V dt, phi(V) dt).
PhaseMetrics hold_metrics(const TrainParams& p, double V, double dt);

// Quadrature evaluations of the coast and brake integrals; the closed forms
// above are checked against these.
PhaseMetrics coast_metrics_quadrature(const TrainParams& p, double v_from, double v_to);
PhaseMetrics brake_metrics_quadrature(const TrainParams& p, double v_from, double v_to);

/// Speed reached `elapsed` seconds into a phase that started at v_from.
/// Speedhold returns v_from. Coast and MaxBrake floor at 0.
double speed_after(const TrainParams& p, PhaseKind kind, double v_from, double elapsed);

/// Distance covered and energy used during the first `elapsed` seconds of a phase.
PhaseMetrics partial_metrics(const TrainParams& p, PhaseKind kind, double v_from, double elapsed);

}  // namespace ecodrive
