#pragma once

namespace releff {

// Kernels take an execution policy so the serial path stays available as a
// reference; both paths write per-index results and reduce in index order,
// so they agree bit for bit.
enum class Exec { serial, parallel };

void set_threads(int n);  // n <= 0 leaves the OpenMP default
int max_threads();

}  // namespace releff
