#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>
#include <utility>

#include "ecodrive/errors.hpp"

namespace ecodrive {

struct RootOptions {
  double x_tol = 1e-12;
  int max_iter = 200;
};

/**
 * @brief Safeguarded Newton iteration on a sign-changing bracket.
 *
 * `f(x)` returns {value, derivative}. A Newton step is taken when it stays
 * inside the current bracket and shrinks the residual fast enough; otherwise
 * the bracket is bisected. Throws SolverError(NoRoot) if f(lo) and f(hi) share
 * a sign.
 */
template <class F>
double bracketed_newton(F&& f, double lo, double hi, const RootOptions& opt = {}) {
  auto [f_lo, d_lo] = f(lo);
  auto [f_hi, d_hi] = f(hi);
  (void)d_lo;
  (void)d_hi;
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    std::ostringstream msg;
    msg << "no sign change on [" << lo << ", " << hi << "]: f(lo)=" << f_lo << ", f(hi)=" << f_hi;
    throw SolverError(ErrorCode::NoRoot, msg.str());
  }
  // orient so that f(neg) < 0 < f(pos)
  double neg = f_lo < 0.0 ? lo : hi;
  double pos = f_lo < 0.0 ? hi : lo;

  double x = 0.5 * (lo + hi);
  double dx_old = std::abs(hi - lo);
  double dx = dx_old;
  auto [fx, dfx] = f(x);
  for (int it = 0; it < opt.max_iter; ++it) {
    const bool newton_leaves_bracket =
        ((x - pos) * dfx - fx) * ((x - neg) * dfx - fx) > 0.0;
    const bool newton_too_slow = std::abs(2.0 * fx) > std::abs(dx_old * dfx);
    dx_old = dx;
    if (newton_leaves_bracket || newton_too_slow || dfx == 0.0) {
      dx = 0.5 * (pos - neg);
      x = neg + dx;
    } else {
      dx = fx / dfx;
      x -= dx;
    }
    if (std::abs(dx) < opt.x_tol) return x;
    std::tie(fx, dfx) = f(x);
    if (fx == 0.0) return x;
    if (fx < 0.0) {
      neg = x;
    } else {
      pos = x;
    }
    if (std::abs(pos - neg) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x)) {
      return x;
    }
  }
  return x;
}

}  // namespace ecodrive
