#pragma once

#include <cstddef>

namespace slab {

/// Selects the kernel variant. Both variants produce bit-identical results:
/// the parallel kernels partition work by output row (or group) and keep the
/// serial reduction order inside each partition.
enum class Exec {
    serial,
    parallel,
};

/// Number of OpenMP threads the parallel kernels will use (1 when built
/// without OpenMP).
int max_threads() noexcept;

/// Caps the OpenMP thread count for subsequent parallel regions.
void set_threads(int n) noexcept;

}  // namespace slab
