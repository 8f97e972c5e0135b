// Compiled with -mavx2 (and without FMA); called only after a CPUID check.

#include "kernels_internal.hpp"

#include <immintrin.h>

namespace dpdopt::kernels::detail::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

inline double fold_lanes(__m256d v) {
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

void mix(const double* w, std::size_t m, const double* in, double* out,
         std::size_t width) {
  const std::size_t wide = width - width % kLanes;
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out + i * width;
    for (std::size_t c = 0; c < wide; c += kLanes) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t j = 0; j < m; ++j) {
        const double wij = w[i * m + j];
        if (wij == 0.0) continue;
        const __m256d src = _mm256_loadu_pd(in + j * width + c);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(wij), src));
      }
      _mm256_storeu_pd(row + c, acc);
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
  const __m256d vstep = _mm256_set1_pd(step);
  if (n == nullptr) {
    for (std::size_t i = 0; i < wide; i += kLanes) {
      const __m256d vg = _mm256_loadu_pd(g + i);
      _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i),
                                              _mm256_mul_pd(vstep, vg)));
    }
    for (std::size_t i = wide; i < len; ++i) out[i] = x[i] - step * g[i];
    return;
  }
  for (std::size_t i = 0; i < wide; i += kLanes) {
    const __m256d drive =
        _mm256_add_pd(_mm256_loadu_pd(g + i), _mm256_loadu_pd(n + i));
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i),
                                            _mm256_mul_pd(vstep, drive)));
  }
  for (std::size_t i = wide; i < len; ++i) out[i] = x[i] - step * (g[i] + n[i]);
}

double quartic_moments(const double* samples, std::size_t d, std::size_t n,
                       std::size_t stride, const double* u, double* grad_sum,
                       double* proj) {
  const std::size_t blocked = n - n % kLanes;

  for (std::size_t s = 0; s < blocked; s += kLanes) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t c = 0; c < d; ++c) {
      const __m256d y = _mm256_loadu_pd(samples + c * stride + s);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(u[c]), y));
    }
    _mm256_storeu_pd(proj + s, acc);
  }
  for (std::size_t s = blocked; s < n; ++s) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc = acc + u[c] * samples[c * stride + s];
    proj[s] = acc;
  }

  for (std::size_t c = 0; c < d; ++c) {
    const double* row = samples + c * stride;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t s = 0; s < blocked; s += kLanes) {
      const __m256d p = _mm256_loadu_pd(proj + s);
      const __m256d cube = _mm256_mul_pd(_mm256_mul_pd(p, p), p);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(cube, _mm256_loadu_pd(row + s)));
    }
    double total = fold_lanes(acc);
    for (std::size_t s = blocked; s < n; ++s) {
      const double p = proj[s];
      total = total + ((p * p) * p) * row[s];
    }
    grad_sum[c] = total;
  }

  __m256d acc = _mm256_setzero_pd();
  for (std::size_t s = 0; s < blocked; s += kLanes) {
    const __m256d p = _mm256_loadu_pd(proj + s);
    const __m256d sq = _mm256_mul_pd(p, p);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(sq, sq));
  }
  double quartic = fold_lanes(acc);
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
  const __m256d vcount = _mm256_set1_pd(count);
  double total = 0.0;

  for (std::size_t c = 0; c < wide; c += kLanes) {
    __m256d sum = _mm256_setzero_pd();
    for (std::size_t i = 0; i < m; ++i)
      sum = _mm256_add_pd(sum, _mm256_loadu_pd(x + i * width + c));
    const __m256d mu = _mm256_div_pd(sum, vcount);
    _mm256_storeu_pd(mean + c, mu);

    __m256d col = _mm256_setzero_pd();
    for (std::size_t i = 0; i < m; ++i) {
      const __m256d dev = _mm256_sub_pd(_mm256_loadu_pd(x + i * width + c), mu);
      col = _mm256_add_pd(col, _mm256_mul_pd(dev, dev));
    }
    alignas(32) double lanes[kLanes];
    _mm256_store_pd(lanes, col);
    for (std::size_t l = 0; l < kLanes; ++l) total = total + lanes[l];
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

}  // namespace dpdopt::kernels::detail::avx2
