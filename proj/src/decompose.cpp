#include "slab/decompose.hpp"

#include <cmath>
#include <string>

#include "slab/error.hpp"

namespace slab {

// --- SparsePlane -----------------------------------------------------------

SparsePlane::SparsePlane(std::size_t rows, std::size_t cols) : mask_(rows, cols) { index_rows(); }

SparsePlane::SparsePlane(BitPlane mask, const DenseMatrix& dense) : mask_(std::move(mask)) {
    if (dense.rows() != mask_.rows() || dense.cols() != mask_.cols())
        throw Error(ErrorKind::shape_mismatch, "SparsePlane: mask and matrix shapes differ");
    values_.reserve(mask_.popcount());
    for (std::size_t i = 0; i < dense.size(); ++i)
        if (mask_.test(i)) values_.push_back(dense.data()[i]);
    index_rows();
}

SparsePlane::SparsePlane(BitPlane mask, std::vector<double> values)
    : mask_(std::move(mask)), values_(std::move(values)) {
    if (values_.size() != mask_.popcount())
        throw Error(ErrorKind::shape_mismatch, "SparsePlane: " + std::to_string(values_.size()) +
                                                   " values for " +
                                                   std::to_string(mask_.popcount()) + " mask bits");
    index_rows();
}

void SparsePlane::index_rows() {
    row_offsets_.assign(mask_.rows() + 1, 0);
    for (std::size_t r = 0; r < mask_.rows(); ++r)
        row_offsets_[r + 1] = row_offsets_[r] + mask_.popcount_row(r);
}

DenseMatrix SparsePlane::to_dense() const {
    DenseMatrix d(rows(), cols());
    std::size_t k = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (mask_.test(i)) d.data()[i] = values_[k++];
    return d;
}

// --- binary + low-rank -----------------------------------------------------

namespace {

void append_scaled(std::vector<double>& dst, const std::vector<double>& src, double scale) {
    for (double e : src) dst.push_back(scale * e);
}

// Signed rank-r factors of `m` (no binary plane), sqrt(sigma) on each side.
void lowrank_factors(const DenseMatrix& m, std::size_t rank, std::vector<double>& u,
                     std::vector<double>& v) {
    u.clear();
    v.clear();
    for (const auto& t : truncated_svd(m, rank)) {
        const double s = std::sqrt(t.sigma);
        append_scaled(u, t.u, s);
        append_scaled(v, t.v, s);
    }
}

}  // namespace

BinaryLowRank build_binary_lowrank(const DenseMatrix& y_bl, std::size_t rank) {
    BinaryLowRank out;
    out.b_plane = sign_matrix(y_bl);
    const DenseMatrix mag = abs(y_bl);
    if (rank == 1) {
        auto res = power_iterate(mag);
        out.converged = res.converged;
        const double s = std::sqrt(res.triplet.sigma);
        append_scaled(out.u, res.triplet.u, s);
        append_scaled(out.v, res.triplet.v, s);
    } else {
        lowrank_factors(mag, rank, out.u, out.v);
    }
    return out;
}

BinaryLowRank refine_binary_lowrank(const DenseMatrix& y_bl, const BinaryLowRank& current) {
    const std::size_t rows = y_bl.rows();
    const std::size_t cols = y_bl.cols();
    if (current.b_plane.rows() != rows || current.b_plane.cols() != cols ||
        current.u.size() != rows || current.v.size() != cols)
        throw Error(ErrorKind::shape_mismatch, "refine_binary_lowrank: expects rank-1 factors matching y_bl");

    // Sign step: argmin_B ||Y - L (.) B|| is sign(Y * L) wherever L != 0.
    BinaryLowRank out;
    out.b_plane = current.b_plane;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double l = current.u[r] * current.v[c];
            if (l != 0.0) out.b_plane.set(r, c, y_bl(r, c) * l >= 0.0 ? 1 : -1);
        }

    // Low-rank step: best rank-1 approximation of Y (.) B.
    auto res = power_iterate(hadamard(y_bl, out.b_plane));
    out.converged = res.converged;
    const double s = std::sqrt(res.triplet.sigma);
    // Fix the sign ambiguity so the product is comparable with `current`.
    double dot = 0.0;
    for (std::size_t r = 0; r < rows; ++r) dot += res.triplet.u[r] * current.u[r];
    const double flip = dot < 0.0 ? -1.0 : 1.0;
    append_scaled(out.u, res.triplet.u, flip * s);
    append_scaled(out.v, res.triplet.v, flip * s);
    return out;
}

// --- decomposition ---------------------------------------------------------

DenseMatrix reconstruct(const SlabDecomposition& d) {
    DenseMatrix lb = outer_sum(d.u, d.v, d.d_out, d.d_in);
    if (d.binary_plane) lb = hadamard(lb, d.b_plane);
    return d.sparse.to_dense() + lb;
}

double weighted_error(const DenseMatrix& w, const SlabDecomposition& d,
                      std::span<const double> s_x) {
    return weighted_frobenius_norm(w - reconstruct(d), s_x);
}

SlabDecomposition slab_decompose(const DenseMatrix& w, std::span<const double> s_x,
                                 const CompressConfig& cfg, Exec exec,
                                 DecomposeDiagnostics* diag) {
    require_finite(w, "slab_decompose");
    if (s_x.size() != w.cols())
        throw Error(ErrorKind::shape_mismatch, "slab_decompose: s_x has " +
                                                   std::to_string(s_x.size()) + " entries for " +
                                                   std::to_string(w.cols()) + " input columns");
    for (double s : s_x)
        if (!(s >= 0.0) || !std::isfinite(s))
            throw Error(ErrorKind::invalid_argument, "slab_decompose: s_x must be finite and >= 0");

    const SparsityBudget budget = sparsity_budget(cfg, w.rows(), w.cols());
    const std::size_t rank = cfg.lowrank_rank;
    if (rank > std::min(w.rows(), w.cols()))
        throw Error(ErrorKind::invalid_argument, "slab_decompose: rank " + std::to_string(rank) +
                                                     " exceeds min(d_out, d_in)");

    SlabDecomposition d;
    d.d_out = w.rows();
    d.d_in = w.cols();
    d.sparse = SparsePlane(w.rows(), w.cols());
    d.b_plane = SignMatrix(w.rows(), w.cols());
    d.binary_plane = cfg.binary_plane;
    d.meta = cfg;
    d.k_target = budget.k_target;

    DenseMatrix w_s(w.rows(), w.cols());
    for (int it = 0; it < cfg.iters; ++it) {
        const DenseMatrix y_bl = w - w_s;
        DenseMatrix lb;
        if (cfg.binary_plane) {
            auto bl = build_binary_lowrank(y_bl, rank);
            if (!bl.converged && diag) ++diag->svd_stalls;
            d.b_plane = std::move(bl.b_plane);
            d.u = std::move(bl.u);
            d.v = std::move(bl.v);
            lb = hadamard(outer_sum(d.u, d.v, d.d_out, d.d_in), d.b_plane);
        } else {
            lowrank_factors(y_bl, rank, d.u, d.v);
            lb = outer_sum(d.u, d.v, d.d_out, d.d_in);
        }

        const DenseMatrix residual = w - lb;
        const BitPlane mask = select_mask(score(residual, s_x, exec), budget, cfg, exec);
        d.sparse = SparsePlane(mask, residual);
        w_s = d.sparse.to_dense();

        if (diag) diag->weighted_error_trace.push_back(weighted_frobenius_norm(residual - w_s, s_x));
    }
    return d;
}

}  // namespace slab
