#include "kernels_internal.hpp"

namespace dpdopt::kernels::detail::scalar {

void mix(const double* w, std::size_t m, const double* in, double* out,
         std::size_t width) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out + i * width;
    for (std::size_t c = 0; c < width; ++c) row[c] = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double wij = w[i * m + j];
      if (wij == 0.0) continue;
      const double* src = in + j * width;
      for (std::size_t c = 0; c < width; ++c) row[c] = row[c] + wij * src[c];
    }
  }
}

void descent_message(const double* x, const double* g, const double* n,
                     double step, double* out, std::size_t len) {
  if (n == nullptr) {
    for (std::size_t i = 0; i < len; ++i) out[i] = x[i] - step * g[i];
    return;
  }
  for (std::size_t i = 0; i < len; ++i) out[i] = x[i] - step * (g[i] + n[i]);
}

double quartic_moments(const double* samples, std::size_t d, std::size_t n,
                       std::size_t stride, const double* u, double* grad_sum,
                       double* proj) {
  for (std::size_t s = 0; s < n; ++s) proj[s] = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double* row = samples + c * stride;
    for (std::size_t s = 0; s < n; ++s) proj[s] = proj[s] + u[c] * row[s];
  }

  const std::size_t blocked = n - n % kReduceLanes;
  for (std::size_t c = 0; c < d; ++c) {
    const double* row = samples + c * stride;
    double acc[kReduceLanes] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t s = 0; s < blocked; s += kReduceLanes) {
      for (std::size_t l = 0; l < kReduceLanes; ++l) {
        const double p = proj[s + l];
        acc[l] = acc[l] + ((p * p) * p) * row[s + l];
      }
    }
    double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (std::size_t s = blocked; s < n; ++s) {
      const double p = proj[s];
      total = total + ((p * p) * p) * row[s];
    }
    grad_sum[c] = total;
  }

  double acc[kReduceLanes] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t s = 0; s < blocked; s += kReduceLanes) {
    for (std::size_t l = 0; l < kReduceLanes; ++l) {
      const double sq = proj[s + l] * proj[s + l];
      acc[l] = acc[l] + sq * sq;
    }
  }
  double quartic = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t s = blocked; s < n; ++s) {
    const double sq = proj[s] * proj[s];
    quartic = quartic + sq * sq;
  }
  return quartic;
}

double deviation_sq(const double* x, std::size_t m, std::size_t width,
                    double* mean) {
  for (std::size_t c = 0; c < width; ++c) mean[c] = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t c = 0; c < width; ++c) mean[c] = mean[c] + x[i * width + c];
  const double count = static_cast<double>(m);
  for (std::size_t c = 0; c < width; ++c) mean[c] = mean[c] / count;

  double total = 0.0;
  for (std::size_t c = 0; c < width; ++c) {
    double col = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double dev = x[i * width + c] - mean[c];
      col = col + dev * dev;
    }
    total = total + col;
  }
  return total;
}

}  // namespace dpdopt::kernels::detail::scalar
