#include <cstdlib>
#include <iostream>
#include <string_view>

#include "transgen/simd/kernels.hpp"

namespace transgen::simd {

#ifndef TRANSGEN_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif

namespace {

const KernelTable& select_kernels() {
  const KernelTable* best = avx2_kernels();
  if (best == nullptr) best = &scalar_kernels();

  const char* env = std::getenv("TRANSGEN_SIMD");
  if (env == nullptr || *env == '\0') return *best;
  const std::string_view want(env);
  if (want == "scalar") return scalar_kernels();
  if (want == "avx2") {
    if (const KernelTable* k = avx2_kernels()) return *k;
    std::cerr << "transgen: TRANSGEN_SIMD=avx2 not supported here, using " << best->name << "\n";
    return *best;
  }
  std::cerr << "transgen: unknown TRANSGEN_SIMD value '" << want << "', using " << best->name
            << "\n";
  return *best;
}

}  // namespace

const KernelTable& active_kernels() {
  static const KernelTable& table = select_kernels();
  return table;
}

}  // namespace transgen::simd
