#pragma once

// 15-point Gauss-Kronrod panel for integrands of the form v^p / den(v), p = 1, 2,
// where den is a cubic. Every phase integral of the level-track model has this
// shape, so the panel is the inner loop of all quadrature in the library.

namespace ecodrive::kernels {

struct CubicDenominator {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;

  double operator()(double v) const { return ((c3 * v + c2) * v + c1) * v + c0; }
};

/// Kronrod (15-point) and embedded Gauss (7-point) estimates of
/// first = int v/den dv and second = int v^2/den dv over [a, b].
struct PanelSums {
  double kronrod_first = 0.0;
  double kronrod_second = 0.0;
  double gauss_first = 0.0;
  double gauss_second = 0.0;
};

enum class Backend { Scalar, Avx2 };

const char* to_string(Backend backend) noexcept;

PanelSums gk15_panel_scalar(const CubicDenominator& den, double a, double b);

#if defined(ECODRIVE_HAVE_AVX2_KERNEL)
PanelSums gk15_panel_avx2(const CubicDenominator& den, double a, double b);
#endif

/// True when the backend was compiled in and the running CPU supports it.
bool backend_available(Backend backend) noexcept;

/// Backend picked at first use: AVX2 when available, scalar otherwise.
Backend active_backend() noexcept;

/// Overrides dispatch (tests and benchmarks). Throws std::invalid_argument if
/// the backend is not available on this machine.
void force_backend(Backend backend);

/// Dispatched panel evaluation.
PanelSums gk15_panel(const CubicDenominator& den, double a, double b);

}  // namespace ecodrive::kernels
