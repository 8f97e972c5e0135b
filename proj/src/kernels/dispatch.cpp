#include "dpdopt/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace dpdopt::kernels {

namespace {

constexpr KernelTable kScalarTable{
    Isa::kScalar,
    detail::scalar::mix,
    detail::scalar::descent_message,
    detail::scalar::quartic_moments,
    detail::scalar::deviation_sq,
};

#if defined(DPDOPT_HAVE_AVX2_KERNELS)
constexpr KernelTable kAvx2Table{
    Isa::kAvx2,
    detail::avx2::mix,
    detail::avx2::descent_message,
    detail::avx2::quartic_moments,
    detail::avx2::deviation_sq,
};
#endif

#if defined(DPDOPT_HAVE_NEON_KERNELS)
constexpr KernelTable kNeonTable{
    Isa::kNeon,
    detail::neon::mix,
    detail::neon::descent_message,
    detail::neon::quartic_moments,
    detail::neon::deviation_sq,
};
#endif

const KernelTable& resolve() {
  if (const char* forced = std::getenv("DPDOPT_ISA")) {
    const std::string name(forced);
    for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
      if (name == isa_name(isa)) return available(isa) ? table(isa) : kScalarTable;
    }
  }
  if (available(Isa::kAvx2)) return table(Isa::kAvx2);
  if (available(Isa::kNeon)) return table(Isa::kNeon);
  return kScalarTable;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(DPDOPT_HAVE_AVX2_KERNELS)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(DPDOPT_HAVE_NEON_KERNELS)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!available(isa))
    throw std::invalid_argument("kernel ISA not available: " +
                                std::string(isa_name(isa)));
  switch (isa) {
#if defined(DPDOPT_HAVE_AVX2_KERNELS)
    case Isa::kAvx2: return kAvx2Table;
#endif
#if defined(DPDOPT_HAVE_NEON_KERNELS)
    case Isa::kNeon: return kNeonTable;
#endif
    default: return kScalarTable;
  }
}

const KernelTable& active() {
  static const KernelTable& selected = resolve();
  return selected;
}

void mix(std::span<const double> w, std::size_t m, std::span<const double> in,
         std::span<double> out) {
  const std::size_t width = m == 0 ? 0 : in.size() / m;
  active().mix(w.data(), m, in.data(), out.data(), width);
}

void descent_message(std::span<const double> x, std::span<const double> g,
                     std::span<const double> noise, double step,
                     std::span<double> out) {
  active().descent_message(x.data(), g.data(),
                           noise.empty() ? nullptr : noise.data(), step,
                           out.data(), x.size());
}

double deviation_sq(std::span<const double> x, std::size_t m,
                    std::span<double> mean) {
  return active().deviation_sq(x.data(), m, m == 0 ? 0 : x.size() / m,
                               mean.data());
}

}  // namespace dpdopt::kernels
