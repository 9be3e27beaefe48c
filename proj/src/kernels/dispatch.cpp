#include <atomic>
#include <stdexcept>

#include "ecodrive/kernels/gk15.hpp"

namespace ecodrive::kernels {

namespace {

using PanelFn = PanelSums (*)(const CubicDenominator&, double, double);

bool cpu_has_avx2() noexcept {
#if defined(ECODRIVE_HAVE_AVX2_KERNEL) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect() noexcept { return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar; }

std::atomic<Backend>& selected() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

const char* to_string(Backend backend) noexcept {
  switch (backend) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend backend) noexcept {
  return backend == Backend::Scalar || (backend == Backend::Avx2 && cpu_has_avx2());
}

Backend active_backend() noexcept { return selected().load(std::memory_order_relaxed); }

void force_backend(Backend backend) {
  if (!backend_available(backend)) {
    throw std::invalid_argument(std::string("quadrature backend not available: ") +
                                to_string(backend));
  }
  selected().store(backend, std::memory_order_relaxed);
}

PanelSums gk15_panel(const CubicDenominator& den, double a, double b) {
#if defined(ECODRIVE_HAVE_AVX2_KERNEL)
  if (active_backend() == Backend::Avx2) return gk15_panel_avx2(den, a, b);
#endif
  return gk15_panel_scalar(den, a, b);
}

}  // namespace ecodrive::kernels
