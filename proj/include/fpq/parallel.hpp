// Copyright (C) 2026 fpq project
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace fpq {

/// Caps the OpenMP thread pool from the FPQ_THREADS environment variable.
/// A missing or unparsable value leaves the runtime default untouched.
void init_threads_from_env();

/// Number of threads the parallel kernels will use (1 in serial builds).
int max_threads();

}  // namespace fpq
