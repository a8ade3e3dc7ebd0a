#include "gmmssl/kernels/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace gmmssl::kernels {

#if defined(GMMSSL_HAVE_AVX2)
namespace detail {
const Ops& avx2_ops();
}
const Ops* avx2() {
  static const Ops* ptr =
      (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
          ? &detail::avx2_ops()
          : nullptr;
  return ptr;
}
#else
const Ops* avx2() { return nullptr; }
#endif

const Ops& active() {
  static const Ops& chosen = []() -> const Ops& {
    if (const char* env = std::getenv("GMMSSL_KERNELS")) {
      std::string_view want(env);
      if (want == "scalar") return scalar();
      if (want == "avx2" && avx2()) return *avx2();
    }
    if (const Ops* best = avx2()) return *best;
    return scalar();
  }();
  return chosen;
}

}  // namespace gmmssl::kernels
