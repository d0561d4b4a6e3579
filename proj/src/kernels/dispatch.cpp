#include <atomic>
#include <cstdlib>
#include <string>

#include "sdpg/error.hpp"
#include "sdpg/kernels.hpp"

namespace sdpg::kernels {

#ifdef SDPG_HAVE_AVX2
const KernelTable& avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#ifdef SDPG_HAVE_AVX2
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const auto* t = avx2_table()) out.push_back(t);
  return out;
}

namespace {

const KernelTable* by_name(std::string_view name) {
  if (name == "scalar") return &scalar_table();
  if (name == "avx2") {
    if (const auto* t = avx2_table()) return t;
    throw UsageError("avx2 kernels are not supported on this machine/build");
  }
  throw UsageError("unknown kernel variant '" + std::string(name) + "'");
}

const KernelTable* initial_choice() {
  if (const char* env = std::getenv("SDPG_KERNELS"); env != nullptr && *env != '\0') {
    return by_name(env);
  }
  if (const auto* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_choice()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(std::string_view name) { current().store(by_name(name), std::memory_order_release); }

}  // namespace sdpg::kernels
