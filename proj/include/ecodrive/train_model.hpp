#pragma once

#include <span>
#include <vector>

namespace ecodrive {

/**
 * @brief Point-mass train with Davis resistance r(v) = r0 + r2 v^2,
 * traction bound H_a(v) = A / v and a constant brake bound H_b.
 *
 * All forces are per unit mass (m s^-2); mass only scales reported energies.
 */
struct TrainParams {
  double r0 = 6.75e-3;         // m s^-2
  double r2 = 5e-5;            // m^-1
  double traction_A = 3.0;     // m^2 s^-3
  double brake_bound = 0.3;    // m s^-2
  double mass = 1.0;           // kg

  /// Throws SolverError(InvalidInput) if any invariant is violated.
  void validate() const;
};

struct TrackSegment {
  double start = 0.0;     // m
  double gradient = 0.0;  // m s^-2, positive values push the train forward
};

/// Piecewise-constant gradient g(x).
class TrackProfile {
 public:
  TrackProfile();  // level track
  explicit TrackProfile(std::vector<TrackSegment> segments);

  static TrackProfile level() { return TrackProfile(); }

  double gradient_at(double x) const;
  bool is_level() const;
  std::span<const TrackSegment> segments() const { return segments_; }

 private:
  std::vector<TrackSegment> segments_;
};

double resistance(const TrainParams& p, double v);
double resistance_prime(const TrainParams& p, double v);

/// Resistive power per unit mass, phi(v) = v r(v).
double phi(const TrainParams& p, double v);
double phi_prime(const TrainParams& p, double v);
double phi_second(const TrainParams& p, double v);
/// psi(v) = v^2 r'(v).
double psi(const TrainParams& p, double v);

/// Tangent line to phi at V, evaluated at v.
double tangent_L(const TrainParams& p, double V, double v);

/// Traction bound H_a(v) = A / v (infinite at rest).
double traction_bound(const TrainParams& p, double v);

/// Unique v > 0 with phi(v) = A.
double max_sustainable_speed(const TrainParams& p);

/// Hard ceiling on every speed a profile may reach: 0.99 of the sustainable maximum.
double speed_cap(const TrainParams& p);

/// U = psi(V) / phi'(V) = V - phi(V) / phi'(V).
double optimal_braking_speed(const TrainParams& p, double V);

enum class Steepness { SteepUphill, SteepDownhill, Neither };

/// Classifies the track over [x_begin, x_end] at speed W. A label is returned
/// only when it holds at every position of the range.
Steepness classify_steep(const TrainParams& p, const TrackProfile& track, double W,
                         double x_begin, double x_end);

}  // namespace ecodrive
