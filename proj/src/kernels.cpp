#include "saflab/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace saflab::kern {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sumsq_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

namespace {

struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sumsq)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  Isa isa;
};

constexpr KernelTable kScalarTable{dot_scalar, sumsq_scalar, axpy_scalar,
                                   scale_scalar, Isa::scalar};

#if defined(SAFLAB_HAVE_AVX2_TU)
constexpr KernelTable kAvx2Table{dot_avx2, sumsq_avx2, axpy_avx2, scale_avx2,
                                 Isa::avx2};
bool avx2_supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

#if defined(SAFLAB_HAVE_NEON_TU)
constexpr KernelTable kNeonTable{dot_neon, sumsq_neon, axpy_neon, scale_neon,
                                 Isa::neon};
#endif

KernelTable resolve() {
  const char* forced = std::getenv("SAFLAB_SIMD");
  if (forced != nullptr) {
    if (std::strcmp(forced, "scalar") == 0) return kScalarTable;
#if defined(SAFLAB_HAVE_AVX2_TU)
    if (std::strcmp(forced, "avx2") == 0 && avx2_supported()) return kAvx2Table;
#endif
#if defined(SAFLAB_HAVE_NEON_TU)
    if (std::strcmp(forced, "neon") == 0) return kNeonTable;
#endif
    if (std::strcmp(forced, "auto") != 0) return kScalarTable;
  }
#if defined(SAFLAB_HAVE_AVX2_TU)
  if (avx2_supported()) return kAvx2Table;
#endif
#if defined(SAFLAB_HAVE_NEON_TU)
  return kNeonTable;
#endif
  return kScalarTable;
}

const KernelTable& table() {
  static const KernelTable t = resolve();
  return t;
}

}  // namespace

Isa active_isa() { return table().isa; }

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
    default:
      return "scalar";
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  return table().dot(a, b, n);
}

double sumsq(const double* x, std::size_t n) { return table().sumsq(x, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  table().axpy(alpha, x, y, n);
}

void scale(double alpha, double* x, std::size_t n) {
  table().scale(alpha, x, n);
}

}  // namespace saflab::kern
