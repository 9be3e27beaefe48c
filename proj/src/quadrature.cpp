#include "ecodrive/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace ecodrive {

namespace {

struct Panel {
  double a;
  double b;
  kernels::PanelSums sums;
  double error;  // max of the two moment error estimates

  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel make_panel(const kernels::CubicDenominator& den, double a, double b) {
  Panel p{a, b, kernels::gk15_panel(den, a, b), 0.0};
  p.error = std::max(std::abs(p.sums.kronrod_first - p.sums.gauss_first),
                     std::abs(p.sums.kronrod_second - p.sums.gauss_second));
  return p;
}

}  // namespace

MomentIntegrals integrate_moments(const kernels::CubicDenominator& den, double a, double b,
                                  const QuadratureOptions& opt) {
  if (a == b) return {};
  if (a > b) {
    MomentIntegrals r = integrate_moments(den, b, a, opt);
    r.first = -r.first;
    r.second = -r.second;
    return r;
  }

  std::priority_queue<Panel> panels;
  Panel root = make_panel(den, a, b);
  double first = root.sums.kronrod_first;
  double second = root.sums.kronrod_second;
  double error = root.error;
  panels.push(root);

  auto target = [&] {
    return std::max(opt.abs_tol, opt.rel_tol * std::min(std::abs(first), std::abs(second)));
  };

  int count = 1;
  while (error > target() && count < opt.max_panels) {
    Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) break;  // interval exhausted
    Panel left = make_panel(den, worst.a, mid);
    Panel right = make_panel(den, mid, worst.b);
    first += left.sums.kronrod_first + right.sums.kronrod_first - worst.sums.kronrod_first;
    second += left.sums.kronrod_second + right.sums.kronrod_second - worst.sums.kronrod_second;
    error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    ++count;
  }

  // Recompute from the leaves to drop the running-update rounding.
  MomentIntegrals out;
  while (!panels.empty()) {
    const Panel& p = panels.top();
    out.first += p.sums.kronrod_first;
    out.second += p.sums.kronrod_second;
    out.error += p.error;
    panels.pop();
  }
  return out;
}

}  // namespace ecodrive
