#pragma once

#include "ecodrive/kernels/gk15.hpp"

namespace ecodrive {

struct QuadratureOptions {
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
  int max_panels = 400;
};

/// first = int_a^b v/den(v) dv, second = int_a^b v^2/den(v) dv.
struct MomentIntegrals {
  double first = 0.0;
  double second = 0.0;
  double error = 0.0;  // estimated absolute error (max over the two)
};

/**
 * @brief Globally adaptive G7-K15 quadrature of both moments at once.
 *
 * The panel with the largest error estimate is bisected until the summed
 * estimate meets max(abs_tol, rel_tol * |I|) for both moments. `a > b` returns
 * the negated integrals. The denominator must not vanish on (a, b).
 */
MomentIntegrals integrate_moments(const kernels::CubicDenominator& den, double a, double b,
                                  const QuadratureOptions& opt = {});

}  // namespace ecodrive
