#include "slab/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "slab/error.hpp"

namespace slab {

namespace {

std::string dims(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

void require_same_shape(std::size_t ar, std::size_t ac, std::size_t br, std::size_t bc,
                        const char* op) {
    if (ar != br || ac != bc)
        throw Error(ErrorKind::shape_mismatch,
                    std::string(op) + ": shape mismatch " + dims(ar, ac) + " vs " + dims(br, bc));
}

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    return std::sqrt(s);
}

// y = M x
void mul(const DenseMatrix& m, std::span<const double> x, std::span<double> y) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

// y = M^T x
void mul_t(const DenseMatrix& m, std::span<const double> x, std::span<double> y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        const double xr = x[r];
        for (std::size_t c = 0; c < m.cols(); ++c) y[c] += row[c] * xr;
    }
}

}  // namespace

// --- DenseMatrix -----------------------------------------------------------

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw Error(ErrorKind::shape_mismatch, "DenseMatrix: data length " +
                                                   std::to_string(data_.size()) +
                                                   " does not match " + dims(rows_, cols_));
    require_finite(*this, "DenseMatrix");
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw Error(ErrorKind::shape_mismatch, "from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

void require_finite(const DenseMatrix& m, const char* what) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!std::isfinite(m.data()[i]))
            throw Error(ErrorKind::non_finite, std::string(what) + ": non-finite entry at flat index " +
                                                   std::to_string(i));
    }
}

// --- BitPlane / SignMatrix -------------------------------------------------

BitPlane::BitPlane(std::size_t rows, std::size_t cols, bool fill)
    : rows_(rows), cols_(cols), bytes_((rows * cols + 7) / 8, fill ? 0xFF : 0x00) {
    if (fill && (rows * cols) % 8 != 0)
        bytes_.back() = static_cast<std::uint8_t>((1u << ((rows * cols) % 8)) - 1u);
}

BitPlane::BitPlane(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> bytes)
    : rows_(rows), cols_(cols), bytes_(std::move(bytes)) {
    if (bytes_.size() != (rows * cols + 7) / 8)
        throw Error(ErrorKind::shape_mismatch, "BitPlane: expected " +
                                                   std::to_string((rows * cols + 7) / 8) +
                                                   " bytes, got " + std::to_string(bytes_.size()));
    if ((rows * cols) % 8 != 0)
        bytes_.back() &= static_cast<std::uint8_t>((1u << ((rows * cols) % 8)) - 1u);
}

std::size_t BitPlane::popcount() const noexcept {
    std::size_t n = 0;
    for (auto b : bytes_) n += static_cast<std::size_t>(std::popcount(b));
    return n;
}

std::size_t BitPlane::popcount_row(std::size_t r) const noexcept {
    std::size_t n = 0;
    const std::size_t begin = r * cols_;
    for (std::size_t i = begin; i < begin + cols_; ++i) n += test(i);
    return n;
}

DenseMatrix SignMatrix::to_dense() const {
    DenseMatrix d(rows(), cols());
    for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] = at_flat(i);
    return d;
}

// --- singular triplets -----------------------------------------------------

PowerIterationResult power_iterate(const DenseMatrix& m, double tol, int max_iters) {
    if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "power_iterate: tol must be > 0");
    if (max_iters < 1) throw Error(ErrorKind::invalid_argument, "power_iterate: max_iters must be >= 1");
    require_finite(m, "power_iterate");

    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();
    PowerIterationResult out;
    out.triplet.u.assign(rows, 0.0);
    out.triplet.v.assign(cols, 0.0);
    if (rows == 0 || cols == 0 || frobenius_norm(m) == 0.0) {
        out.converged = true;
        return out;
    }

    std::vector<double> v(cols, 1.0 / std::sqrt(static_cast<double>(cols)));
    std::vector<double> u(rows);
    std::vector<double> z(cols);

    mul(m, v, u);
    if (norm2(u) == 0.0) {
        // The all-ones start is in the null space; restart from the
        // heaviest column's unit vector.
        std::vector<double> colsq(cols, 0.0);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) colsq[c] += m(r, c) * m(r, c);
        const auto j = static_cast<std::size_t>(
            std::max_element(colsq.begin(), colsq.end()) - colsq.begin());
        std::fill(v.begin(), v.end(), 0.0);
        v[j] = 1.0;
        mul(m, v, u);
    }

    double change = 0.0;
    int it = 0;
    for (; it < max_iters; ++it) {
        const double su = norm2(u);
        for (auto& e : u) e /= su;
        mul_t(m, u, z);
        const double sz = norm2(z);
        change = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double nv = z[c] / sz;
            change += (nv - v[c]) * (nv - v[c]);
            v[c] = nv;
        }
        change = std::sqrt(change);
        mul(m, v, u);
        if (change <= tol) {
            ++it;
            out.converged = true;
            break;
        }
    }

    const double sigma = norm2(u);
    for (auto& e : u) e /= sigma;
    out.triplet.sigma = sigma;
    out.triplet.u = std::move(u);
    out.triplet.v = std::move(v);
    out.iterations = it;
    out.residual = change;
    return out;
}

SingularTriplet top_singular_triplet(const DenseMatrix& m, double tol, int max_iters) {
    auto res = power_iterate(m, tol, max_iters);
    if (!res.converged)
        throw Error(ErrorKind::degenerate_spectrum,
                    "top_singular_triplet: no convergence after " + std::to_string(res.iterations) +
                        " iterations (residual " + std::to_string(res.residual) +
                        "); leading singular values are (nearly) tied");
    return std::move(res.triplet);
}

std::vector<SingularTriplet> truncated_svd(const DenseMatrix& m, std::size_t rank) {
    if (rank == 0) return {};
    const std::size_t limit = std::min(m.rows(), m.cols());
    if (rank > limit)
        throw Error(ErrorKind::invalid_argument, "truncated_svd: rank " + std::to_string(rank) +
                                                     " exceeds min(rows, cols) = " +
                                                     std::to_string(limit));
    if (rank == 1) return {power_iterate(m).triplet};

    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMajor> em(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                                        static_cast<Eigen::Index>(m.cols()));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(em, Eigen::ComputeThinU | Eigen::ComputeThinV);
    std::vector<SingularTriplet> out(rank);
    for (std::size_t k = 0; k < rank; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        out[k].sigma = svd.singularValues()(kk);
        out[k].u.resize(m.rows());
        out[k].v.resize(m.cols());
        for (std::size_t i = 0; i < m.rows(); ++i)
            out[k].u[i] = svd.matrixU()(static_cast<Eigen::Index>(i), kk);
        for (std::size_t j = 0; j < m.cols(); ++j)
            out[k].v[j] = svd.matrixV()(static_cast<Eigen::Index>(j), kk);
    }
    return out;
}

// --- elementwise -----------------------------------------------------------

SignMatrix sign_matrix(const DenseMatrix& m) {
    BitPlane bits(m.rows(), m.cols());
    const auto d = m.data();
    for (std::size_t i = 0; i < d.size(); ++i) bits.set(i, d[i] >= 0.0);
    return SignMatrix(std::move(bits));
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a.rows(), a.cols(), b.rows(), b.cols(), "hadamard");
    DenseMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    return out;
}

DenseMatrix hadamard(const DenseMatrix& a, const SignMatrix& b) {
    require_same_shape(a.rows(), a.cols(), b.rows(), b.cols(), "hadamard");
    DenseMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.data()[i] = b.bits().test(i) ? a.data()[i] : -a.data()[i];
    return out;
}

DenseMatrix abs(const DenseMatrix& m) {
    DenseMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = std::fabs(m.data()[i]);
    return out;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a.rows(), a.cols(), b.rows(), b.cols(), "subtract");
    DenseMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    return out;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a.rows(), a.cols(), b.rows(), b.cols(), "add");
    DenseMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    return out;
}

DenseMatrix operator*(double s, const DenseMatrix& m) {
    DenseMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = s * m.data()[i];
    return out;
}

DenseMatrix outer_sum(std::span<const double> u, std::span<const double> v, std::size_t rows,
                      std::size_t cols) {
    const std::size_t rank = rows ? u.size() / rows : 0;
    if (u.size() != rank * rows || v.size() != rank * cols)
        throw Error(ErrorKind::shape_mismatch, "outer_sum: factor lengths do not match " +
                                                   dims(rows, cols));
    DenseMatrix out(rows, cols);
    for (std::size_t k = 0; k < rank; ++k) {
        const double* uk = u.data() + k * rows;
        const double* vk = v.data() + k * cols;
        for (std::size_t r = 0; r < rows; ++r) {
            auto row = out.row(r);
            for (std::size_t c = 0; c < cols; ++c) row[c] += uk[r] * vk[c];
        }
    }
    return out;
}

double frobenius_norm(const DenseMatrix& m) { return norm2(m.data()); }

double weighted_frobenius_norm(const DenseMatrix& m, std::span<const double> col_weight) {
    if (col_weight.size() != m.cols())
        throw Error(ErrorKind::shape_mismatch, "weighted_frobenius_norm: weight length " +
                                                   std::to_string(col_weight.size()) + " vs " +
                                                   std::to_string(m.cols()) + " columns");
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double e = row[c] * col_weight[c];
            s += e * e;
        }
    }
    return std::sqrt(s);
}

}  // namespace slab
