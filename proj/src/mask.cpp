#include <algorithm>
#include <cmath>
#include <string>

#include "slab/decompose.hpp"
#include "slab/error.hpp"

namespace slab {

namespace {

// Strict total order: higher score first, lower flat index on ties.
struct ScoreOrder {
    const double* s;
    bool operator()(std::size_t a, std::size_t b) const noexcept {
        return s[a] > s[b] || (s[a] == s[b] && a < b);
    }
};

// Marks the top-N of every aligned M-block of row r in `alive`.
void nm_row(const DenseMatrix& scores, const NmPattern& nm, std::size_t r,
            std::vector<std::uint8_t>& alive) {
    const std::size_t cols = scores.cols();
    std::vector<std::size_t> block(nm.m);
    const ScoreOrder order{scores.data().data()};
    for (std::size_t c0 = 0; c0 < cols; c0 += nm.m) {
        for (std::size_t k = 0; k < nm.m; ++k) block[k] = r * cols + c0 + k;
        std::nth_element(block.begin(), block.begin() + static_cast<std::ptrdiff_t>(nm.n) - 1,
                         block.end(), order);
        for (std::size_t k = 0; k < nm.n; ++k) alive[block[k]] = 1;
    }
}

void select_group(const DenseMatrix& scores, const SparsityBudget& b, std::size_t g,
                  const std::vector<std::uint8_t>* alive, std::vector<std::uint8_t>& keep) {
    const std::size_t cols = scores.cols();
    const std::size_t groups_per_band = cols / b.group_cols;
    const std::size_t r0 = (g / groups_per_band) * b.group_rows;
    const std::size_t c0 = (g % groups_per_band) * b.group_cols;

    std::vector<std::size_t> cand;
    cand.reserve(b.group_size);
    for (std::size_t r = r0; r < r0 + b.group_rows; ++r)
        for (std::size_t c = c0; c < c0 + b.group_cols; ++c) {
            const std::size_t flat = r * cols + c;
            if (!alive || (*alive)[flat]) cand.push_back(flat);
        }

    const std::size_t k = std::min(b.keep_per_group, cand.size());
    if (k == 0) return;
    if (k < cand.size())
        std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k) - 1, cand.end(),
                         ScoreOrder{scores.data().data()});
    for (std::size_t i = 0; i < k; ++i) keep[cand[i]] = 1;
}

}  // namespace

DenseMatrix score(const DenseMatrix& residual, std::span<const double> s_x, Exec exec) {
    if (s_x.size() != residual.cols())
        throw Error(ErrorKind::shape_mismatch, "score: s_x has " + std::to_string(s_x.size()) +
                                                   " entries, residual has " +
                                                   std::to_string(residual.cols()) + " columns");
    DenseMatrix s(residual.rows(), residual.cols());
    const auto rows = static_cast<std::ptrdiff_t>(residual.rows());
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const auto in = residual.row(static_cast<std::size_t>(r));
        auto out = s.row(static_cast<std::size_t>(r));
        for (std::size_t c = 0; c < in.size(); ++c) out[c] = std::fabs(in[c]) * s_x[c];
    }
    return s;
}

BitPlane select_mask(const DenseMatrix& scores, const SparsityBudget& b, const CompressConfig& cfg,
                     Exec exec) {
    const std::size_t rows = scores.rows();
    const std::size_t cols = scores.cols();
    if (b.group_rows == 0 || b.group_cols == 0 || rows % b.group_rows != 0 ||
        cols % b.group_cols != 0 || b.group_size != b.group_rows * b.group_cols)
        throw Error(ErrorKind::invalid_argument, "select_mask: comparison group " +
                                                     std::to_string(b.group_rows) + "x" +
                                                     std::to_string(b.group_cols) +
                                                     " does not tile the score matrix");
    if (cfg.nm && (cfg.nm->n < 1 || cfg.nm->n >= cfg.nm->m || cols % cfg.nm->m != 0))
        throw Error(ErrorKind::invalid_argument, "select_mask: N:M pattern does not tile the rows");

    const bool par = exec == Exec::parallel;
    std::vector<std::uint8_t> alive;
    if (cfg.nm) {
        alive.assign(rows * cols, 0);
        const auto nrows = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (par)
        for (std::ptrdiff_t r = 0; r < nrows; ++r)
            nm_row(scores, *cfg.nm, static_cast<std::size_t>(r), alive);
    }

    std::vector<std::uint8_t> keep(rows * cols, 0);
    const auto ngroups = static_cast<std::ptrdiff_t>((rows / b.group_rows) * (cols / b.group_cols));
#pragma omp parallel for schedule(dynamic, 4) if (par)
    for (std::ptrdiff_t g = 0; g < ngroups; ++g)
        select_group(scores, b, static_cast<std::size_t>(g), cfg.nm ? &alive : nullptr, keep);

    BitPlane mask(rows, cols);
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) mask.set(i, true);
    return mask;
}

}  // namespace slab
