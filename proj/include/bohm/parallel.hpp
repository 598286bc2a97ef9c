#pragma once

namespace bohm {

/// Worker threads for the OpenMP kernels: BOHM_WORKERS when set to a
/// positive integer, otherwise the OpenMP default.
int worker_count();

}  // namespace bohm
