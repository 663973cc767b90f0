#include "slab/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slab/error.hpp"

namespace slab {

namespace {

constexpr std::size_t kColumnBlock = 64;

void sumsq_columns(const DenseMatrix& batch, std::size_t c0, std::size_t c1, double* acc) {
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        const auto row = batch.row(r);
        for (std::size_t c = c0; c < c1; ++c) acc[c] += row[c] * row[c];
    }
}

}  // namespace

ActivationStats::ActivationStats(std::size_t cols) : sumsq_(cols, 0.0) {
    if (cols == 0) throw Error(ErrorKind::invalid_argument, "ActivationStats: cols must be >= 1");
}

void ActivationStats::accumulate(const DenseMatrix& batch, Exec exec) {
    if (batch.cols() != sumsq_.size())
        throw Error(ErrorKind::shape_mismatch, "accumulate: batch has " + std::to_string(batch.cols()) +
                                                   " columns, stats expect " +
                                                   std::to_string(sumsq_.size()));
    require_finite(batch, "accumulate");

    const std::size_t cols = sumsq_.size();
    double* acc = sumsq_.data();
    if (exec == Exec::serial) {
        sumsq_columns(batch, 0, cols, acc);
    } else {
        const auto blocks = static_cast<std::ptrdiff_t>((cols + kColumnBlock - 1) / kColumnBlock);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t b = 0; b < blocks; ++b) {
            const std::size_t c0 = static_cast<std::size_t>(b) * kColumnBlock;
            sumsq_columns(batch, c0, std::min(cols, c0 + kColumnBlock), acc);
        }
    }
    samples_seen_ += batch.rows();
}

std::vector<double> ActivationStats::finalize() const {
    std::vector<double> s(sumsq_.size());
    std::transform(sumsq_.begin(), sumsq_.end(), s.begin(), [](double x) { return std::sqrt(x); });
    return s;
}

std::vector<double> column_norms(const DenseMatrix& x, Exec exec) {
    ActivationStats stats(x.cols());
    stats.accumulate(x, exec);
    return stats.finalize();
}

}  // namespace slab
