// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>

int main() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx512f") && __builtin_cpu_supports("avx512bw") &&
      __builtin_cpu_supports("avx512vl") && __builtin_cpu_supports("avx512dq")) {
    std::printf("SkylakeX");
  } else if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    std::printf("Haswell");
  }
#endif
  return 0;
}
