#pragma once

// Data-parallel inner loops of the simulator.
//
// Every kernel has a scalar reference implementation and vector variants
// (AVX2 on x86-64, NEON on AArch64) selected once at runtime. All variants
// follow the same operation order, so their results are bitwise identical:
// element-wise kernels vectorize across independent lanes, and reductions
// use a fixed four-lane blocked order that the scalar code reproduces.
//
// The environment variable DPDOPT_ISA (scalar | avx2 | neon) pins the
// selection; an unavailable request falls back to scalar.

#include <cstddef>
#include <span>
#include <string_view>

namespace dpdopt::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

// Raw kernel signatures. Matrices are dense row-major.
struct KernelTable {
  Isa isa;
  // out[i, :] = sum_j w[i, j] * in[j, :], j ascending, zero weights skipped.
  void (*mix)(const double* w, std::size_t m, const double* in, double* out,
              std::size_t width);
  // out = x - step * (g + n); n may be null (treated as zero).
  void (*descent_message)(const double* x, const double* g, const double* n,
                          double step, double* out, std::size_t len);
  // For samples stored coordinate-major (row c holds coordinate c of all n
  // samples, rows `stride` apart): proj[s] = u . y_s,
  // grad_sum[c] = sum_s proj[s]^3 y_s[c]; returns sum_s proj[s]^4.
  double (*quartic_moments)(const double* samples, std::size_t d,
                            std::size_t n, std::size_t stride, const double* u,
                            double* grad_sum, double* proj);
  // mean[c] = column mean over the m rows; returns sum_i ||x_i - mean||^2.
  double (*deviation_sq)(const double* x, std::size_t m, std::size_t width,
                         double* mean);
};

bool available(Isa isa);

// Table for a specific ISA; throws std::invalid_argument if unavailable.
const KernelTable& table(Isa isa);

// Best available table (or the DPDOPT_ISA override), resolved on first use.
const KernelTable& active();

// Span front-ends over active().
void mix(std::span<const double> w, std::size_t m, std::span<const double> in,
         std::span<double> out);
void descent_message(std::span<const double> x, std::span<const double> g,
                     std::span<const double> noise, double step,
                     std::span<double> out);
double deviation_sq(std::span<const double> x, std::size_t m,
                    std::span<double> mean);

}  // namespace dpdopt::kernels
