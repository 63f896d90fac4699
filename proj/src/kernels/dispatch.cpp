#include <atomic>
#include <cstdlib>
#include <string>

#include "vje/error.hpp"
#include "vje/kernels.hpp"

namespace vje::kernels {

namespace {

const Table* compiled(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &detail::scalar_table();
    case Isa::avx2:
#if defined(VJE_HAVE_AVX2)
      return detail::avx2_table();
#else
      return nullptr;
#endif
    case Isa::neon:
#if defined(VJE_HAVE_NEON)
      return detail::neon_table();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(VJE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(VJE_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa from_env_or_detect() {
  if (const char* env = std::getenv("VJE_ISA")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && available(Isa::avx2)) return Isa::avx2;
    if (v == "neon" && available(Isa::neon)) return Isa::neon;
  }
  return detect_best();
}

std::atomic<const Table*>& active_slot() {
  static std::atomic<const Table*> slot{compiled(from_env_or_detect())};
  return slot;
}

}  // namespace

bool available(Isa isa) { return compiled(isa) != nullptr && cpu_supports(isa); }

Isa detect_best() {
  if (available(Isa::avx2)) return Isa::avx2;
  if (available(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

const Table& table(Isa isa) {
  if (!available(isa)) throw Error("kernel ISA '" + std::string(isa_name(isa)) + "' is not available");
  return *compiled(isa);
}

const Table& active() { return *active_slot().load(std::memory_order_relaxed); }

void select(Isa isa) { active_slot().store(&table(isa), std::memory_order_relaxed); }

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace vje::kernels
