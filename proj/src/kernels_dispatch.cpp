// SPDX-License-Identifier: Apache-2.0
#include "protoseq/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace protoseq::kernels {

#if defined(PROTOSEQ_HAVE_AVX2)
const KernelTable &avx2_table_unchecked();
#endif

const KernelTable *avx2_table() {
#if defined(PROTOSEQ_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable *initial_choice() {
  if (const char *env = std::getenv("PROTOSEQ_KERNELS")) {
    if (std::string_view(env) == "scalar")
      return &scalar_table();
  }
  if (const KernelTable *t = avx2_table())
    return t;
  return &scalar_table();
}

std::atomic<const KernelTable *> &current() {
  static std::atomic<const KernelTable *> table{initial_choice()};
  return table;
}

} // namespace

const KernelTable &active() { return *current().load(std::memory_order_acquire); }

bool select(std::string_view name) {
  if (name == "scalar") {
    current().store(&scalar_table(), std::memory_order_release);
    return true;
  }
  if (name == "avx2") {
    if (const KernelTable *t = avx2_table()) {
      current().store(t, std::memory_order_release);
      return true;
    }
  }
  return false;
}

} // namespace protoseq::kernels
