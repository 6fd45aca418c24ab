#pragma once

#include <cstddef>

// Data-parallel kernels behind the dense linear algebra and the adaptive
// filter inner loops. A plain scalar implementation is the reference; AVX2
// and NEON variants are compiled when the target architecture has them and
// selected at runtime. The environment variable SAFLAB_SIMD=scalar|avx2|neon
// forces a particular implementation (unavailable choices fall back to
// scalar).
namespace saflab::kern {

enum class Isa { scalar, avx2, neon };

// Implementation the dispatched entry points resolve to. Resolved once per
// process on first use.
Isa active_isa();
const char* isa_name(Isa isa);

// Dispatched entry points.
double dot(const double* a, const double* b, std::size_t n);
double sumsq(const double* x, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);

// Scalar reference implementations (always available; equivalence-tested
// against the SIMD variants).
double dot_scalar(const double* a, const double* b, std::size_t n);
double sumsq_scalar(const double* x, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
void scale_scalar(double alpha, double* x, std::size_t n);

#if defined(SAFLAB_HAVE_AVX2_TU)
double dot_avx2(const double* a, const double* b, std::size_t n);
double sumsq_avx2(const double* x, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
void scale_avx2(double alpha, double* x, std::size_t n);
#endif

#if defined(SAFLAB_HAVE_NEON_TU)
double dot_neon(const double* a, const double* b, std::size_t n);
double sumsq_neon(const double* x, std::size_t n);
void axpy_neon(double alpha, const double* x, double* y, std::size_t n);
void scale_neon(double alpha, double* x, std::size_t n);
#endif

}  // namespace saflab::kern
