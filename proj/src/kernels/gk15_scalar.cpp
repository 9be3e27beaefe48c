#include "ecodrive/kernels/gk15.hpp"

#include "gk15_tables.hpp"

namespace ecodrive::kernels {

PanelSums gk15_panel_scalar(const CubicDenominator& den, double a, double b) {
  using namespace detail;
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  PanelSums s;
  for (int i = 0; i < kPaddedNodes; ++i) {
    const double v = center + half * kNodes[i];
    const double q = v / den(v);
    s.kronrod_first += kKronrodWeights[i] * q;
    s.kronrod_second += kKronrodWeights[i] * q * v;
    s.gauss_first += kGaussWeights[i] * q;
    s.gauss_second += kGaussWeights[i] * q * v;
  }
  s.kronrod_first *= half;
  s.kronrod_second *= half;
  s.gauss_first *= half;
  s.gauss_second *= half;
  return s;
}

}  // namespace ecodrive::kernels
