// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#include "fpq/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fpq {

void init_threads_from_env() {
#ifdef _OPENMP
    const char* v = std::getenv("FPQ_THREADS");
    if (!v || !*v) return;
    try {
        int n = std::stoi(v);
        if (n >= 1) omp_set_num_threads(n);
    } catch (...) {
        // unparsable value: keep the runtime default
    }
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace fpq
