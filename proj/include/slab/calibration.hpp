#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "slab/parallel.hpp"
#include "slab/tensor.hpp"

namespace slab {

/// Streaming per-column sum of squared activations. finalize() yields the
/// column L2 norms used to weight pruning scores.
///
/// Not thread-safe: callers serialize accumulate() on one instance.
class ActivationStats {
public:
    explicit ActivationStats(std::size_t cols);

    /// sumsq[j] += sum_r batch(r, j)^2, rows consumed top to bottom.
    /// The parallel variant splits columns across threads and keeps the same
    /// per-column order, so both variants agree bitwise.
    void accumulate(const DenseMatrix& batch, Exec exec = Exec::parallel);

    /// S_X[j] = sqrt(sumsq[j]); no normalization by the sample count.
    std::vector<double> finalize() const;

    std::size_t cols() const noexcept { return sumsq_.size(); }
    std::uint64_t samples_seen() const noexcept { return samples_seen_; }
    const std::vector<double>& sumsq() const noexcept { return sumsq_; }

private:
    std::vector<double> sumsq_;
    std::uint64_t samples_seen_ = 0;
};

/// Convenience: column norms of a single activation matrix.
std::vector<double> column_norms(const DenseMatrix& x, Exec exec = Exec::parallel);

}  // namespace slab
