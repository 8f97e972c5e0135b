// AArch64 variants. NEON is baseline on AArch64, so no runtime probe.

#include "kernels_internal.hpp"

#if defined(DPDOPT_HAVE_NEON_KERNELS)

#include <arm_neon.h>

namespace dpdopt::kernels::detail::neon {

namespace {
constexpr std::size_t kLanes = 2;
}  // namespace

void mix(const double* w, std::size_t m, const double* in, double* out,
         std::size_t width) {
  const std::size_t wide = width - width % kLanes;
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out + i * width;
    for (std::size_t c = 0; c < wide; c += kLanes) {
      float64x2_t acc = vdupq_n_f64(0.0);
      for (std::size_t j = 0; j < m; ++j) {
        const double wij = w[i * m + j];
        if (wij == 0.0) continue;
        acc = vaddq_f64(acc, vmulq_f64(vdupq_n_f64(wij),
                                       vld1q_f64(in + j * width + c)));
      }
      vst1q_f64(row + c, acc);
    }
    for (std::size_t c = wide; c < width; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double wij = w[i * m + j];
        if (wij == 0.0) continue;
        acc = acc + wij * in[j * width + c];
      }
      row[c] = acc;
    }
  }
}

void descent_message(const double* x, const double* g, const double* n,
                     double step, double* out, std::size_t len) {
  const std::size_t wide = len - len % kLanes;
  const float64x2_t vstep = vdupq_n_f64(step);
  for (std::size_t i = 0; i < wide; i += kLanes) {
    float64x2_t drive = vld1q_f64(g + i);
    if (n != nullptr) drive = vaddq_f64(drive, vld1q_f64(n + i));
    vst1q_f64(out + i, vsubq_f64(vld1q_f64(x + i), vmulq_f64(vstep, drive)));
  }
  for (std::size_t i = wide; i < len; ++i)
    out[i] = x[i] - step * (n == nullptr ? g[i] : g[i] + n[i]);
}

double quartic_moments(const double* samples, std::size_t d, std::size_t n,
                       std::size_t stride, const double* u, double* grad_sum,
                       double* proj) {
  const std::size_t blocked = n - n % kReduceLanes;

  for (std::size_t s = 0; s < blocked; s += kLanes) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t c = 0; c < d; ++c)
      acc = vaddq_f64(acc, vmulq_f64(vdupq_n_f64(u[c]),
                                     vld1q_f64(samples + c * stride + s)));
    vst1q_f64(proj + s, acc);
  }
  for (std::size_t s = blocked; s < n; ++s) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc = acc + u[c] * samples[c * stride + s];
    proj[s] = acc;
  }

  // Lanes {0,1} and {2,3} of the four-lane reduction live in lo and hi.
  for (std::size_t c = 0; c < d; ++c) {
    const double* row = samples + c * stride;
    float64x2_t lo = vdupq_n_f64(0.0);
    float64x2_t hi = vdupq_n_f64(0.0);
    for (std::size_t s = 0; s < blocked; s += kReduceLanes) {
      const float64x2_t p0 = vld1q_f64(proj + s);
      const float64x2_t p1 = vld1q_f64(proj + s + 2);
      const float64x2_t c0 = vmulq_f64(vmulq_f64(p0, p0), p0);
      const float64x2_t c1 = vmulq_f64(vmulq_f64(p1, p1), p1);
      lo = vaddq_f64(lo, vmulq_f64(c0, vld1q_f64(row + s)));
      hi = vaddq_f64(hi, vmulq_f64(c1, vld1q_f64(row + s + 2)));
    }
    double total = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
                   (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
    for (std::size_t s = blocked; s < n; ++s) {
      const double p = proj[s];
      total = total + ((p * p) * p) * row[s];
    }
    grad_sum[c] = total;
  }

  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  for (std::size_t s = 0; s < blocked; s += kReduceLanes) {
    const float64x2_t p0 = vld1q_f64(proj + s);
    const float64x2_t p1 = vld1q_f64(proj + s + 2);
    const float64x2_t q0 = vmulq_f64(p0, p0);
    const float64x2_t q1 = vmulq_f64(p1, p1);
    lo = vaddq_f64(lo, vmulq_f64(q0, q0));
    hi = vaddq_f64(hi, vmulq_f64(q1, q1));
  }
  double quartic = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
                   (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (std::size_t s = blocked; s < n; ++s) {
    const double sq = proj[s] * proj[s];
    quartic = quartic + sq * sq;
  }
  return quartic;
}

double deviation_sq(const double* x, std::size_t m, std::size_t width,
                    double* mean) {
  const std::size_t wide = width - width % kLanes;
  const double count = static_cast<double>(m);
  double total = 0.0;
  for (std::size_t c = 0; c < wide; c += kLanes) {
    float64x2_t sum = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < m; ++i)
      sum = vaddq_f64(sum, vld1q_f64(x + i * width + c));
    const float64x2_t mu = vdivq_f64(sum, vdupq_n_f64(count));
    vst1q_f64(mean + c, mu);
    float64x2_t col = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const float64x2_t dev = vsubq_f64(vld1q_f64(x + i * width + c), mu);
      col = vaddq_f64(col, vmulq_f64(dev, dev));
    }
    total = total + vgetq_lane_f64(col, 0);
    total = total + vgetq_lane_f64(col, 1);
  }
  for (std::size_t c = wide; c < width; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum = sum + x[i * width + c];
    mean[c] = sum / count;
    double col = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double dev = x[i * width + c] - mean[c];
      col = col + dev * dev;
    }
    total = total + col;
  }
  return total;
}

}  // namespace dpdopt::kernels::detail::neon

#endif  // DPDOPT_HAVE_NEON_KERNELS
