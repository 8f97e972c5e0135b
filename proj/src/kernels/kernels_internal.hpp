#pragma once

// Per-ISA entry points. Translation units compiled with ISA-specific flags
// must not instantiate shared inline templates (ODR), so these are plain
// functions over raw pointers.

#include <cstddef>

namespace dpdopt::kernels::detail {

// Reductions over samples use this many interleaved partial sums.
inline constexpr std::size_t kReduceLanes = 4;

namespace scalar {
void mix(const double* w, std::size_t m, const double* in, double* out,
         std::size_t width);
void descent_message(const double* x, const double* g, const double* n,
                     double step, double* out, std::size_t len);
double quartic_moments(const double* samples, std::size_t d, std::size_t n,
                       std::size_t stride, const double* u, double* grad_sum,
                       double* proj);
double deviation_sq(const double* x, std::size_t m, std::size_t width,
                    double* mean);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define DPDOPT_HAVE_AVX2_KERNELS 1
namespace avx2 {
void mix(const double* w, std::size_t m, const double* in, double* out,
         std::size_t width);
void descent_message(const double* x, const double* g, const double* n,
                     double step, double* out, std::size_t len);
double quartic_moments(const double* samples, std::size_t d, std::size_t n,
                       std::size_t stride, const double* u, double* grad_sum,
                       double* proj);
double deviation_sq(const double* x, std::size_t m, std::size_t width,
                    double* mean);
}  // namespace avx2
#endif

#if defined(__aarch64__)
#define DPDOPT_HAVE_NEON_KERNELS 1
namespace neon {
void mix(const double* w, std::size_t m, const double* in, double* out,
         std::size_t width);
void descent_message(const double* x, const double* g, const double* n,
                     double step, double* out, std::size_t len);
double quartic_moments(const double* samples, std::size_t d, std::size_t n,
                       std::size_t stride, const double* u, double* grad_sum,
                       double* proj);
double deviation_sq(const double* x, std::size_t m, std::size_t width,
                    double* mean);
}  // namespace neon
#endif

}  // namespace dpdopt::kernels::detail
