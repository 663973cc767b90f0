#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "slab/parallel.hpp"

namespace slab {

/// Row-major real matrix at 64-bit precision. Entries are checked for
/// finiteness when the matrix is built from external data.
class DenseMatrix {
public:
    DenseMatrix() = default;

    /// Zero-filled rows x cols matrix.
    DenseMatrix(std::size_t rows, std::size_t cols);

    /// Takes ownership of row-major `data`; throws on a length mismatch or a
    /// non-finite entry.
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    DenseMatrix transpose() const;

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// One bit per matrix entry, row-major, LSB-first within each byte.
class BitPlane {
public:
    BitPlane() = default;
    BitPlane(std::size_t rows, std::size_t cols, bool fill = false);

    /// Adopts packed bytes; throws if the byte count is not ceil(rows*cols/8).
    /// Padding bits in the final byte are cleared.
    BitPlane(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> bytes);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t bit_count() const noexcept { return rows_ * cols_; }

    bool test(std::size_t flat) const noexcept { return (bytes_[flat >> 3] >> (flat & 7)) & 1u; }
    bool test(std::size_t r, std::size_t c) const noexcept { return test(r * cols_ + c); }

    void set(std::size_t flat, bool on) noexcept {
        const auto m = static_cast<std::uint8_t>(1u << (flat & 7));
        if (on)
            bytes_[flat >> 3] |= m;
        else
            bytes_[flat >> 3] &= static_cast<std::uint8_t>(~m);
    }
    void set(std::size_t r, std::size_t c, bool on) noexcept { set(r * cols_ + c, on); }

    std::size_t popcount() const noexcept;
    std::size_t popcount_row(std::size_t r) const noexcept;

    std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

    bool operator==(const BitPlane&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> bytes_;
};

/// A {+1, -1} matrix stored as a bit plane: bit 1 is +1, bit 0 is -1.
class SignMatrix {
public:
    SignMatrix() = default;

    /// All entries +1.
    SignMatrix(std::size_t rows, std::size_t cols) : bits_(rows, cols, true) {}
    explicit SignMatrix(BitPlane bits) : bits_(std::move(bits)) {}

    std::size_t rows() const noexcept { return bits_.rows(); }
    std::size_t cols() const noexcept { return bits_.cols(); }

    int operator()(std::size_t r, std::size_t c) const noexcept { return bits_.test(r, c) ? 1 : -1; }
    int at_flat(std::size_t flat) const noexcept { return bits_.test(flat) ? 1 : -1; }
    void set(std::size_t r, std::size_t c, int sign) noexcept { bits_.set(r, c, sign >= 0); }

    const BitPlane& bits() const noexcept { return bits_; }

    DenseMatrix to_dense() const;

    bool operator==(const SignMatrix&) const = default;

private:
    BitPlane bits_;
};

/// Dominant singular triplet. u and v are unit vectors unless sigma == 0, in
/// which case both are zero.
struct SingularTriplet {
    double sigma = 0.0;
    std::vector<double> u;
    std::vector<double> v;
};

struct PowerIterationResult {
    SingularTriplet triplet;
    bool converged = false;
    int iterations = 0;
    /// ||M^T u - sigma v||_2 / sigma at the returned iterate.
    double residual = 0.0;
};

inline constexpr double kDefaultSvdTol = 1e-10;
inline constexpr int kDefaultSvdMaxIters = 1000;

/// Power iteration on M^T M from the normalized all-ones vector. Stops once
/// the relative singular-vector residual drops to `tol`. Never throws on
/// non-convergence; the best iterate is returned with converged = false.
PowerIterationResult power_iterate(const DenseMatrix& m, double tol = kDefaultSvdTol,
                                   int max_iters = kDefaultSvdMaxIters);

/// Same as power_iterate but raises ErrorKind::degenerate_spectrum when the
/// iteration stalls (typically two near-equal leading singular values).
SingularTriplet top_singular_triplet(const DenseMatrix& m, double tol = kDefaultSvdTol,
                                     int max_iters = kDefaultSvdMaxIters);

/// Leading `rank` singular triplets, sigma descending. Rank 1 goes through
/// power_iterate; larger ranks use a dense SVD.
std::vector<SingularTriplet> truncated_svd(const DenseMatrix& m, std::size_t rank);

/// +1 where m >= 0, -1 where m < 0.
SignMatrix sign_matrix(const DenseMatrix& m);

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hadamard(const DenseMatrix& a, const SignMatrix& b);

DenseMatrix abs(const DenseMatrix& m);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& m);

/// Sum over k of u_k v_k^T for factors stored component-major
/// (u has rows*rank entries, v has cols*rank entries).
DenseMatrix outer_sum(std::span<const double> u, std::span<const double> v,
                      std::size_t rows, std::size_t cols);

double frobenius_norm(const DenseMatrix& m);

/// ||m diag(col_weight)||_F.
double weighted_frobenius_norm(const DenseMatrix& m, std::span<const double> col_weight);

/// Throws ErrorKind::non_finite if any entry is NaN or infinite.
void require_finite(const DenseMatrix& m, const char* what);

}  // namespace slab
