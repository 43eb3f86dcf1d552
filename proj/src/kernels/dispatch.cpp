#include <algorithm>
#include <cstdlib>
#include <string>

#include "stochmed/kernels.hpp"

namespace stochmed::kernels {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(STOCHMED_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
#if defined(STOCHMED_HAVE_AVX2)
  if (isa == Isa::Avx2 && available(Isa::Avx2)) return detail::avx2_table();
#else
  (void)isa;
#endif
  return detail::scalar_table();
}

namespace {
const KernelTable& select() {
  if (const char* env = std::getenv("STOCHMED_ISA")) {
    const std::string want(env);
    if (want == "scalar") return table(Isa::Scalar);
    if (want == "avx2") return table(Isa::Avx2);
  }
  return available(Isa::Avx2) ? table(Isa::Avx2) : table(Isa::Scalar);
}
}  // namespace

const KernelTable& active() {
  static const KernelTable& chosen = select();
  return chosen;
}

double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

double mean(std::span<const double> x) {
  return x.empty() ? 0.0 : sum(x) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double mu = mean(x);
  return active().sum_sq_dev(x.data(), mu, x.size()) / static_cast<double>(x.size());
}

double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), std::min(x.size(), y.size()));
}

}  // namespace stochmed::kernels
