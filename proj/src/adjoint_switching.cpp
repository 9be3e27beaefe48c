#include "ecodrive/adjoint_switching.hpp"

#include <cmath>
#include <sstream>

#include "ecodrive/errors.hpp"
#include "ecodrive/roots.hpp"

namespace ecodrive {

std::vector<std::size_t> IntervalWeights::active_set() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] > 0.0) out.push_back(k);
  }
  return out;
}

AdjointConstants adjoint_constants(const TrainParams& p, double V) {
  return AdjointConstants{phi_prime(p, V)};
}

double eta(const TrainParams& p, PhaseKind phase, double v, double V_hold, double w) {
  const double scale = 1.0 + w;
  switch (phase) {
    case PhaseKind::MaxAccel:
      // v H_a(v) = A for H_a = A / v
      return scale * (p.traction_A - tangent_L(p, V_hold, v)) / (p.traction_A - phi(p, v));
    case PhaseKind::Speedhold:
      return scale;
    case PhaseKind::Coast:
      return scale * tangent_L(p, V_hold, v) / phi(p, v);
    case PhaseKind::MaxBrake:
      break;
  }
  throw SolverError(ErrorCode::InvalidPhase, "eta is not evaluated on braking phases");
}

double constrained_speed(const TrainParams& p, double V, double w) {
  if (!(w > -1.0)) throw SolverError(ErrorCode::InvalidInput, "weight must be > -1");
  if (w == 0.0) return V;
  const double slope = phi_prime(p, V) / (1.0 + w);
  if (slope <= p.r0) {
    std::ostringstream msg;
    msg << "weight " << w << " pushes phi'(V_k) = " << slope << " below r0 = " << p.r0;
    throw SolverError(ErrorCode::WeightTooLarge, msg.str());
  }
  if (p.r2 == 0.0) {
    throw SolverError(ErrorCode::WeightTooLarge, "phi' is constant when r2 = 0");
  }
  // phi'(v) = r0 + 3 r2 v^2 inverts in closed form; one Newton polish.
  double v = std::sqrt((slope - p.r0) / (3.0 * p.r2));
  v -= (phi_prime(p, v) - slope) / phi_second(p, v);
  return v;
}

double weight_between(const TrainParams& p, double V, double V_k) {
  return phi_prime(p, V) / phi_prime(p, V_k) - 1.0;
}

double switching_residual(const TrainParams& p, HoldSide prev, HoldSide next, double W) {
  const double A = p.traction_A;
  const double phiW = phi(p, W);
  const double a = 1.0 + prev.weight;
  const double b = 1.0 + next.weight;
  if (prev.speed > next.speed) {
    // eta_a(prev) - eta_c(next), times phi(W) (A - phi(W))
    return a * (A - tangent_L(p, prev.speed, W)) * phiW -
           b * tangent_L(p, next.speed, W) * (A - phiW);
  }
  // eta_c(prev) - eta_a(next), times phi(W) (A - phi(W))
  return a * tangent_L(p, prev.speed, W) * (A - phiW) -
         b * (A - tangent_L(p, next.speed, W)) * phiW;
}

namespace {

double switching_residual_derivative(const TrainParams& p, HoldSide prev, HoldSide next,
                                     double W) {
  const double A = p.traction_A;
  const double phiW = phi(p, W);
  const double dphiW = phi_prime(p, W);
  const double a = 1.0 + prev.weight;
  const double b = 1.0 + next.weight;
  const double Lp = tangent_L(p, prev.speed, W);
  const double Ln = tangent_L(p, next.speed, W);
  const double dLp = phi_prime(p, prev.speed);
  const double dLn = phi_prime(p, next.speed);
  if (prev.speed > next.speed) {
    return a * (-dLp * phiW + (A - Lp) * dphiW) - b * (dLn * (A - phiW) - Ln * dphiW);
  }
  return a * (dLp * (A - phiW) - Lp * dphiW) - b * (-dLn * phiW + (A - Ln) * dphiW);
}

}  // namespace

double switching_speed(const TrainParams& p, HoldSide prev, HoldSide next) {
  if (prev.speed == next.speed) return prev.speed;
  auto f = [&](double W) {
    return std::pair{switching_residual(p, prev, next, W),
                     switching_residual_derivative(p, prev, next, W)};
  };
  double lo;
  double hi;
  if (prev.speed > next.speed) {
    lo = prev.speed;
    hi = speed_cap(p);
  } else {
    lo = 1e-9 * prev.speed;
    hi = prev.speed;
  }
  try {
    return bracketed_newton(f, lo, hi, RootOptions{1e-12, 300});
  } catch (const SolverError& e) {
    std::ostringstream msg;
    msg << "switching speed between hold " << prev.speed << " (w=" << prev.weight << ") and "
        << next.speed << " (w=" << next.weight << "): " << e.what();
    throw SolverError(ErrorCode::NoRoot, msg.str());
  }
}

double switching_speed(const TrainParams& p, double V_prev, double V_next) {
  // Any common kappa works; the equation depends on (1+w_prev)/(1+w_next) only.
  const double kappa = std::max(phi_prime(p, V_prev), phi_prime(p, V_next));
  return switching_speed(p, HoldSide{V_prev, kappa / phi_prime(p, V_prev) - 1.0},
                         HoldSide{V_next, kappa / phi_prime(p, V_next) - 1.0});
}

SwitchingSensitivities switching_sensitivities(const TrainParams& p, double V_prev,
                                               double V_next) {
  const double hp = 1e-5 * V_prev;
  const double hn = 1e-5 * V_next;
  SwitchingSensitivities s;
  s.d_prev = (switching_speed(p, V_prev + hp, V_next) - switching_speed(p, V_prev - hp, V_next)) /
             (2.0 * hp);
  s.d_next = (switching_speed(p, V_prev, V_next + hn) - switching_speed(p, V_prev, V_next - hn)) /
             (2.0 * hn);
  return s;
}

}  // namespace ecodrive
