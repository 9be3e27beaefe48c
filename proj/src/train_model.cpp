#include "ecodrive/train_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ecodrive/errors.hpp"
#include "ecodrive/roots.hpp"

namespace ecodrive {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput:
      return "InvalidInput";
    case ErrorCode::SpeedCapExceeded:
      return "SpeedCapExceeded";
    case ErrorCode::InvalidPhase:
      return "InvalidPhase";
    case ErrorCode::WeightTooLarge:
      return "WeightTooLarge";
    case ErrorCode::NoRoot:
      return "NoRoot";
    case ErrorCode::InfeasibleTiming:
      return "InfeasibleTiming";
    case ErrorCode::NonConvergence:
      return "NonConvergence";
    case ErrorCode::Infeasible:
      return "Infeasible";
    case ErrorCode::ControlInfeasible:
      return "ControlInfeasible";
  }
  return "Unknown";
}

void TrainParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw SolverError(ErrorCode::InvalidInput, what);
  };
  require(std::isfinite(r0) && r0 > 0.0, "r0 must be > 0");
  require(std::isfinite(r2) && r2 >= 0.0, "r2 must be >= 0");
  require(std::isfinite(traction_A) && traction_A > 0.0, "traction constant A must be > 0");
  require(std::isfinite(brake_bound) && brake_bound > 0.0, "brake bound must be > 0");
  require(std::isfinite(mass) && mass > 0.0, "mass must be > 0");
}

TrackProfile::TrackProfile() : segments_{TrackSegment{0.0, 0.0}} {}

TrackProfile::TrackProfile(std::vector<TrackSegment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) segments_.push_back(TrackSegment{0.0, 0.0});
  if (segments_.front().start != 0.0) {
    throw SolverError(ErrorCode::InvalidInput, "first track segment must start at 0");
  }
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (!(segments_[i].start > segments_[i - 1].start)) {
      throw SolverError(ErrorCode::InvalidInput, "track segments must be strictly ordered");
    }
  }
}

double TrackProfile::gradient_at(double x) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), x,
                             [](double pos, const TrackSegment& s) { return pos < s.start; });
  if (it == segments_.begin()) return segments_.front().gradient;
  return std::prev(it)->gradient;
}

bool TrackProfile::is_level() const {
  return std::all_of(segments_.begin(), segments_.end(),
                     [](const TrackSegment& s) { return s.gradient == 0.0; });
}

double resistance(const TrainParams& p, double v) { return p.r0 + p.r2 * v * v; }
double resistance_prime(const TrainParams& p, double v) { return 2.0 * p.r2 * v; }

double phi(const TrainParams& p, double v) { return v * (p.r0 + p.r2 * v * v); }
double phi_prime(const TrainParams& p, double v) { return p.r0 + 3.0 * p.r2 * v * v; }
double phi_second(const TrainParams& p, double v) { return 6.0 * p.r2 * v; }
double psi(const TrainParams& p, double v) { return 2.0 * p.r2 * v * v * v; }

double tangent_L(const TrainParams& p, double V, double v) {
  return phi(p, V) + phi_prime(p, V) * (v - V);
}

double traction_bound(const TrainParams& p, double v) {
  return v > 0.0 ? p.traction_A / v : std::numeric_limits<double>::infinity();
}

double max_sustainable_speed(const TrainParams& p) {
  if (p.r2 == 0.0) return p.traction_A / p.r0;
  // phi(v) >= r0 v, so phi(A / r0) >= A brackets the root.
  const double hi = p.traction_A / p.r0;
  return bracketed_newton(
      [&](double v) { return std::pair{phi(p, v) - p.traction_A, phi_prime(p, v)}; }, 0.0, hi);
}

double speed_cap(const TrainParams& p) { return 0.99 * max_sustainable_speed(p); }

double optimal_braking_speed(const TrainParams& p, double V) {
  return psi(p, V) / phi_prime(p, V);
}

Steepness classify_steep(const TrainParams& p, const TrackProfile& track, double W,
                         double x_begin, double x_end) {
  if (x_end < x_begin) std::swap(x_begin, x_end);
  const auto segs = track.segments();
  // gradients present anywhere in [x_begin, x_end]
  double g_min = std::numeric_limits<double>::infinity();
  double g_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const double seg_begin = segs[i].start;
    const double seg_end = i + 1 < segs.size() ? segs[i + 1].start
                                               : std::numeric_limits<double>::infinity();
    const bool overlaps = seg_begin < x_end && seg_end > x_begin;
    const bool covers_point = x_begin == x_end && seg_begin <= x_begin && x_begin < seg_end;
    if (overlaps || covers_point) {
      g_min = std::min(g_min, segs[i].gradient);
      g_max = std::max(g_max, segs[i].gradient);
    }
  }
  if (!std::isfinite(g_min)) return Steepness::Neither;
  if (traction_bound(p, W) - resistance(p, W) + g_max < 0.0) return Steepness::SteepUphill;
  if (-resistance(p, W) + g_min > 0.0) return Steepness::SteepDownhill;
  return Steepness::Neither;
}

}  // namespace ecodrive
