#pragma once

// Independent brute-force references used to check the slab library. Nothing
// here calls into the code it verifies beyond the DenseMatrix carrier and the
// plain fields of SlabDecomposition; bit planes are decoded locally.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "slab/decompose.hpp"
#include "slab/tensor.hpp"

namespace slab::oracle {

/// Two-level quantizer of a real sample: levels a <= b, elements up to
/// sorted index t go to a.
struct TwoLevelSolution {
    double a = 0.0;
    double b = 0.0;
    std::size_t t = 0;
    double objective = 0.0;
    /// w_t <= (a+b)/2 <= w_{t+1} held at the returned split.
    bool midpoint_ok = true;
};

/// f(a, b) = sum_k min{(w_k - a)^2, (w_k - b)^2}.
double two_level_objective(std::span<const double> values, double a, double b);

/// Scans the n-1 contiguous splits of ascending `sorted`, levels are the
/// prefix / suffix means. Throws for n < 2 or unsorted input.
TwoLevelSolution best_two_level_split(std::span<const double> sorted);

/// Global optimum over all 2^n assignments, levels = cluster means.
/// Requires 2 <= n <= 12.
TwoLevelSolution best_two_level_exhaustive(std::span<const double> values);

enum class Distribution { normal, exponential };

/// Mean over `trials` of |a + b - 2*shift| / (b - a) for the best two-level
/// split of `sample_size` draws (plus `shift`). Near 0 for symmetric laws.
double symmetric_levels_check(std::size_t sample_size, std::size_t trials, std::uint64_t seed,
                              Distribution dist = Distribution::normal, double shift = 0.0);

/// Thin SVD by one-sided Jacobi rotations. sigma descending; u is rows x p,
/// v is cols x p with p = min(rows, cols).
struct SvdResult {
    std::vector<double> sigma;
    DenseMatrix u;
    DenseMatrix v;
};

SvdResult reference_svd(const DenseMatrix& m);

/// Naive row-by-column product.
std::vector<double> dense_matvec(const DenseMatrix& w, std::span<const double> x);

/// Triple-sum evaluation of W_S + (sum_k u_k v_k^T) (.) B straight from the
/// stored bytes and vectors.
DenseMatrix naive_reconstruct(const SlabDecomposition& d);

/// Sort-based top-`keep` per (group_rows x group_cols) tile; ties to the
/// lower row-major index. Returns one flag per entry.
std::vector<bool> sort_topk_mask(const DenseMatrix& scores, std::size_t group_rows, std::size_t group_cols,
                                 std::size_t keep);

struct TinyMaskResult {
    std::vector<bool> mask;
    double error = 0.0;  // ||(R - mask (.) R) diag(s_x)||_F
};

/// Enumerates every mask over `residual` holding exactly `keep` entries in
/// each group tile and returns the one with the least weighted error.
/// At most 20 entries.
TinyMaskResult exhaustive_tiny_mask(const DenseMatrix& residual, std::span<const double> s_x,
                                    std::size_t keep, std::size_t group_rows, std::size_t group_cols);

/// Binary plane and rank-1 factors of W from the reference SVD, then the
/// exhaustive best unstructured mask of floor(density * n) entries.
TinyMaskResult exhaustive_tiny_slab(const DenseMatrix& w, std::span<const double> s_x, double density);

/// One decomposition iteration written out directly: sign plane, rank-1 of
/// |W| via reference_svd, row-wise sort-based masking with `keep_per_row`.
/// Returns the weighted reconstruction error.
double naive_single_iteration_error(const DenseMatrix& w, std::span<const double> s_x,
                                    std::size_t keep_per_row);

/// Random rank-1 decomposition for kernel and format checks: Gaussian
/// sparse values at `density`, factors uniform in [0, 1), random signs.
SlabDecomposition random_decomposition(std::mt19937_64& rng, std::size_t d_out, std::size_t d_in,
                                       double density, bool binary_plane = true);

}  // namespace slab::oracle
