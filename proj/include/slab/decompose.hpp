#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slab/parallel.hpp"
#include "slab/tensor.hpp"

namespace slab {

/// Comparison group: g_rows consecutive rows by g_cols consecutive columns.
/// cols == 0 stands for the full input dimension.
struct GroupShape {
    std::size_t rows = 1;
    std::size_t cols = 0;
};

/// At most `n` nonzeros in every aligned run of `m` input-dimension entries.
struct NmPattern {
    std::size_t n = 2;
    std::size_t m = 4;
};

struct CompressConfig {
    double cr = 0.5;
    int bit_width = 16;
    int iters = 20;
    GroupShape group{};
    std::optional<NmPattern> nm;
    /// Bypasses the CR-derived density (tiny test matrices cannot satisfy it).
    std::optional<double> density_override;
    /// false: sparse + low-rank only, the binary plane is fixed at +1.
    bool binary_plane = true;
    /// Rank of the non-negative factor. 0 (binary plane off) is plain
    /// activation-weighted magnitude pruning.
    std::size_t lowrank_rank = 1;

    /// Range checks that do not depend on the layer shape.
    void validate() const;
};

/// Retained density of the sparse plane at a fixed total bit budget:
///   1 - cr - [binary]/b - rank * (1/d_out + 1/d_in).
/// With rank 1 and the binary plane on this is the SLaB budget.
double retained_density(double cr, int bit_width, std::size_t d_out, std::size_t d_in,
                        std::size_t rank, bool binary_plane);

struct SparsityBudget {
    double density = 0.0;
    std::size_t group_rows = 1;
    std::size_t group_cols = 0;
    std::size_t group_size = 0;  // N_g
    std::size_t num_groups = 0;
    std::size_t keep_per_group = 0;
    std::size_t k_total = 0;   // keep_per_group * num_groups, what the mask holds
    std::size_t k_target = 0;  // round(density * d_out * d_in)
    /// Set when density > 0 but flooring leaves nothing to keep per group.
    std::optional<std::string> warning;
};

/// Throws ErrorKind::infeasible_budget when the density is not positive and
/// ErrorKind::invalid_argument when the group shape or N:M pattern does not
/// tile the matrix.
SparsityBudget sparsity_budget(const CompressConfig& cfg, std::size_t d_out, std::size_t d_in);

/// S(i, j) = |residual(i, j)| * s_x[j].
DenseMatrix score(const DenseMatrix& residual, std::span<const double> s_x,
                  Exec exec = Exec::parallel);

/// Keep-mask from a score matrix. Ties go to the lower row-major index, so
/// the serial and parallel variants return the same plane.
BitPlane select_mask(const DenseMatrix& scores, const SparsityBudget& budget,
                     const CompressConfig& cfg, Exec exec = Exec::parallel);

/// Mask bit plane plus the retained values in row-major mask order.
class SparsePlane {
public:
    SparsePlane() = default;
    SparsePlane(std::size_t rows, std::size_t cols);  // empty plane

    /// Gathers dense(i, j) at every set bit of `mask`.
    SparsePlane(BitPlane mask, const DenseMatrix& dense);

    /// Adopts packed values; throws ErrorKind::shape_mismatch unless
    /// values.size() == popcount(mask).
    SparsePlane(BitPlane mask, std::vector<double> values);

    std::size_t rows() const noexcept { return mask_.rows(); }
    std::size_t cols() const noexcept { return mask_.cols(); }
    std::size_t nnz() const noexcept { return values_.size(); }

    const BitPlane& mask() const noexcept { return mask_; }
    std::span<const double> values() const noexcept { return values_; }
    /// values()[row_offsets()[r] .. row_offsets()[r+1]) belong to row r.
    std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }

    DenseMatrix to_dense() const;

    bool operator==(const SparsePlane&) const = default;

private:
    void index_rows();

    BitPlane mask_;
    std::vector<double> values_;
    std::vector<std::size_t> row_offsets_;
};

/// W ~= W_S + (sum_k u_k v_k^T) (.) B.
struct SlabDecomposition {
    std::size_t d_out = 0;
    std::size_t d_in = 0;
    SparsePlane sparse;
    /// Factors stored component-major: u[k*d_out + i], v[k*d_in + j].
    std::vector<double> u;
    std::vector<double> v;
    SignMatrix b_plane;
    bool binary_plane = true;
    CompressConfig meta;
    std::size_t k_target = 0;

    std::size_t rank() const noexcept { return d_out ? u.size() / d_out : 0; }
};

/// Binary plane and non-negative factors fitted to one residual.
struct BinaryLowRank {
    SignMatrix b_plane;
    std::vector<double> u;
    std::vector<double> v;
    /// false when the power iteration stalled; the iterate is still a
    /// valid (tied) rank-1 minimizer.
    bool converged = true;
};

/// b_plane = sign(y_bl); factors from the truncated SVD of |y_bl| scaled by
/// sqrt(sigma_k). At rank 1 both factors are elementwise non-negative.
BinaryLowRank build_binary_lowrank(const DenseMatrix& y_bl, std::size_t rank = 1);

/// One explicit alternation from `current`: the sign step against the fixed
/// product u v^T (positions where the product is 0 keep their sign), then the
/// rank-1 fit of y_bl (.) B_new. Used to check that the joint initialization
/// is already a fixed point.
BinaryLowRank refine_binary_lowrank(const DenseMatrix& y_bl, const BinaryLowRank& current);

struct DecomposeDiagnostics {
    /// Number of iterations where the rank-1 fit did not reach tolerance.
    std::size_t svd_stalls = 0;
    /// Weighted error after each iteration's sparse update.
    std::vector<double> weighted_error_trace;
};

/// Alternating SLaB decomposition of one weight matrix. Per iteration:
/// binary plane and factors from W - W_S, scores on the remaining residual,
/// then W_S = mask (.) residual.
SlabDecomposition slab_decompose(const DenseMatrix& w, std::span<const double> s_x,
                                 const CompressConfig& cfg, Exec exec = Exec::parallel,
                                 DecomposeDiagnostics* diag = nullptr);

/// Dense W_S + (u v^T) (.) B.
DenseMatrix reconstruct(const SlabDecomposition& d);

/// ||(w - reconstruct(d)) diag(s_x)||_F.
double weighted_error(const DenseMatrix& w, const SlabDecomposition& d,
                      std::span<const double> s_x);

}  // namespace slab
