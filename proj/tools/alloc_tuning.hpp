#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace wmr::cli {

// Training allocates and frees multi-megabyte activations every step. glibc
// serves those with mmap by default, so each one costs page faults; keeping
// them on the heap cuts system time to near zero.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
}

}  // namespace wmr::cli
