#include <atomic>
#include <cstdlib>
#include <string>

#include "timepred/simd/kernels.hpp"

namespace timepred::simd {

#if defined(TIMEPRED_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
const KernelTable& avx512_kernel_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(TIMEPRED_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

bool cpu_has_avx512() {
#if defined(TIMEPRED_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return cpu_has_avx2() && __builtin_cpu_supports("avx512f");
#else
  return false;
#endif
}

// TIMEPRED_SIMD=scalar|avx2|avx512 caps the ISA; unset picks the widest.
const KernelTable* initial_table() {
  const char* env = std::getenv("TIMEPRED_SIMD");
  const std::string cap = env != nullptr ? env : "";
  if (cap == "scalar") return &scalar_kernels();
  if (cap != "avx2") {
    if (const KernelTable* t = avx512_kernels()) return t;
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const char* to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Avx512: return "avx512";
  }
  return "unknown";
}

const KernelTable* avx2_kernels() {
#if defined(TIMEPRED_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  if (supported) return &avx2_kernel_table();
#endif
  return nullptr;
}

const KernelTable* avx512_kernels() {
#if defined(TIMEPRED_HAVE_AVX2)
  static const bool supported = cpu_has_avx512();
  if (supported) return &avx512_kernel_table();
#endif
  return nullptr;
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

bool select_isa(Isa isa) {
  const KernelTable* t = isa == Isa::Scalar ? &scalar_kernels()
                         : isa == Isa::Avx2 ? avx2_kernels()
                                            : avx512_kernels();
  if (t == nullptr) return false;
  active().store(t, std::memory_order_release);
  return true;
}

Isa active_isa() { return kernels().isa; }

}  // namespace timepred::simd
