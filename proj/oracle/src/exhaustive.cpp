#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "slab/oracle.hpp"

namespace slab::oracle {

namespace {

double masked_error(const DenseMatrix& residual, std::span<const double> s_x, const std::vector<bool>& mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < residual.rows(); ++i)
        for (std::size_t j = 0; j < residual.cols(); ++j) {
            if (mask[i * residual.cols() + j]) continue;
            const double e = residual(i, j) * s_x[j];
            s += e * e;
        }
    return std::sqrt(s);
}

// sign(W) (.) (sqrt(s) u)(sqrt(s) v)^T from the reference SVD of |W|.
DenseMatrix binary_lowrank_residual(const DenseMatrix& w) {
    DenseMatrix mag(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.size(); ++i) mag.data()[i] = std::fabs(w.data()[i]);
    const SvdResult svd = reference_svd(mag);
    double orient = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) orient += svd.u(i, 0);
    const double flip = orient < 0.0 ? -1.0 : 1.0;

    DenseMatrix r(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) {
            const double l = svd.sigma[0] * (flip * svd.u(i, 0)) * (flip * svd.v(j, 0));
            const double sign = w(i, j) >= 0.0 ? 1.0 : -1.0;
            r(i, j) = w(i, j) - l * sign;
        }
    return r;
}

}  // namespace

std::vector<bool> sort_topk_mask(const DenseMatrix& scores, std::size_t group_rows, std::size_t group_cols,
                                 std::size_t keep) {
    const std::size_t rows = scores.rows(), cols = scores.cols();
    if (group_rows == 0 || group_cols == 0 || rows % group_rows || cols % group_cols)
        throw std::invalid_argument("sort_topk_mask: group does not tile the matrix");
    std::vector<bool> mask(rows * cols, false);
    for (std::size_t r0 = 0; r0 < rows; r0 += group_rows)
        for (std::size_t c0 = 0; c0 < cols; c0 += group_cols) {
            std::vector<std::size_t> idx;
            for (std::size_t r = r0; r < r0 + group_rows; ++r)
                for (std::size_t c = c0; c < c0 + group_cols; ++c) idx.push_back(r * cols + c);
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return scores.data()[a] > scores.data()[b];
            });
            for (std::size_t k = 0; k < std::min(keep, idx.size()); ++k) mask[idx[k]] = true;
        }
    return mask;
}

TinyMaskResult exhaustive_tiny_mask(const DenseMatrix& residual, std::span<const double> s_x, std::size_t keep,
                                    std::size_t group_rows, std::size_t group_cols) {
    const std::size_t n = residual.size();
    if (n > 20) throw std::invalid_argument("exhaustive_tiny_mask: at most 20 entries");
    if (s_x.size() != residual.cols()) throw std::invalid_argument("exhaustive_tiny_mask: s_x length mismatch");
    const std::size_t rows = residual.rows(), cols = residual.cols();
    if (group_rows == 0 || group_cols == 0 || rows % group_rows || cols % group_cols)
        throw std::invalid_argument("exhaustive_tiny_mask: group does not tile the matrix");
    if (keep > group_rows * group_cols) throw std::invalid_argument("exhaustive_tiny_mask: keep exceeds group size");

    const std::size_t groups_per_band = cols / group_cols;
    const std::size_t ngroups = (rows / group_rows) * groups_per_band;
    std::vector<std::size_t> group_of(n);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            group_of[r * cols + c] = (r / group_rows) * groups_per_band + c / group_cols;

    TinyMaskResult best;
    bool have = false;
    std::vector<std::size_t> count(ngroups);
    std::vector<bool> mask(n);
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        if (static_cast<std::size_t>(std::popcount(bits)) != keep * ngroups) continue;
        std::fill(count.begin(), count.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            mask[i] = bits >> i & 1u;
            if (mask[i]) ++count[group_of[i]];
        }
        if (std::any_of(count.begin(), count.end(), [&](std::size_t c) { return c != keep; })) continue;
        const double err = masked_error(residual, s_x, mask);
        if (!have || err < best.error) {
            best = {mask, err};
            have = true;
        }
    }
    return best;
}

TinyMaskResult exhaustive_tiny_slab(const DenseMatrix& w, std::span<const double> s_x, double density) {
    if (w.size() > 20) throw std::invalid_argument("exhaustive_tiny_slab: at most 20 entries");
    if (!(density >= 0.0 && density <= 1.0)) throw std::invalid_argument("exhaustive_tiny_slab: density in [0, 1]");
    const auto keep = static_cast<std::size_t>(std::floor(density * double(w.size()) + 1e-9));
    return exhaustive_tiny_mask(binary_lowrank_residual(w), s_x, keep, w.rows(), w.cols());
}

double naive_single_iteration_error(const DenseMatrix& w, std::span<const double> s_x, std::size_t keep_per_row) {
    const DenseMatrix r = binary_lowrank_residual(w);
    DenseMatrix scores(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) scores(i, j) = std::fabs(r(i, j)) * s_x[j];
    return masked_error(r, s_x, sort_topk_mask(scores, 1, w.cols(), keep_per_row));
}

SlabDecomposition random_decomposition(std::mt19937_64& rng, std::size_t d_out, std::size_t d_in,
                                       double density, bool binary_plane) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    BitPlane mask(d_out, d_in);
    BitPlane signs(d_out, d_in);
    std::vector<double> values;
    for (std::size_t i = 0; i < d_out * d_in; ++i) {
        if (unit(rng) < density) {
            mask.set(i, true);
            values.push_back(normal(rng));
        }
        signs.set(i, unit(rng) < 0.5);
    }
    SlabDecomposition d;
    d.d_out = d_out;
    d.d_in = d_in;
    d.sparse = SparsePlane(std::move(mask), std::move(values));
    d.u.resize(d_out);
    d.v.resize(d_in);
    for (auto& x : d.u) x = unit(rng);
    for (auto& x : d.v) x = unit(rng);
    d.binary_plane = binary_plane;
    d.b_plane = binary_plane ? SignMatrix(std::move(signs)) : SignMatrix(d_out, d_in);
    d.meta.binary_plane = binary_plane;
    d.k_target = d.sparse.nnz();
    return d;
}

}  // namespace slab::oracle
