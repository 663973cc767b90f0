#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "slab/oracle.hpp"

namespace slab::oracle {

namespace {

// One-sided Jacobi on a tall (rows >= cols) matrix.
SvdResult jacobi_tall(const DenseMatrix& m) {
    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();
    DenseMatrix a = m;
    DenseMatrix v(cols, cols);
    for (std::size_t i = 0; i < cols; ++i) v(i, i) = 1.0;

    constexpr double eps = 1e-15;
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < cols; ++p) {
            for (std::size_t q = p + 1; q < cols; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < rows; ++i) {
                    alpha += a(i, p) * a(i, p);
                    beta += a(i, q) * a(i, q);
                    gamma += a(i, p) * a(i, q);
                }
                if (gamma == 0.0 || std::fabs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double ap = a(i, p), aq = a(i, q);
                    a(i, p) = c * ap - s * aq;
                    a(i, q) = s * ap + c * aq;
                }
                for (std::size_t i = 0; i < cols; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += a(i, j) * a(i, j);
        sigma[j] = std::sqrt(s);
    }
    std::vector<std::size_t> order(cols);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return sigma[x] > sigma[y]; });

    SvdResult out;
    out.sigma.resize(cols);
    out.u = DenseMatrix(rows, cols);
    out.v = DenseMatrix(cols, cols);
    for (std::size_t k = 0; k < cols; ++k) {
        const std::size_t j = order[k];
        out.sigma[k] = sigma[j];
        for (std::size_t i = 0; i < rows; ++i) out.u(i, k) = sigma[j] > 0.0 ? a(i, j) / sigma[j] : 0.0;
        for (std::size_t i = 0; i < cols; ++i) out.v(i, k) = v(i, j);
    }
    return out;
}

}  // namespace

SvdResult reference_svd(const DenseMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("reference_svd: empty matrix");
    if (m.rows() >= m.cols()) return jacobi_tall(m);
    SvdResult t = jacobi_tall(m.transpose());
    std::swap(t.u, t.v);
    return t;
}

std::vector<double> dense_matvec(const DenseMatrix& w, std::span<const double> x) {
    if (x.size() != w.cols()) throw std::invalid_argument("dense_matvec: length mismatch");
    std::vector<double> y(w.rows(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = 0; c < w.cols(); ++c) y[r] += w(r, c) * x[c];
    return y;
}

DenseMatrix naive_reconstruct(const SlabDecomposition& d) {
    const auto bit = [](std::span<const std::uint8_t> bytes, std::size_t flat) {
        return (bytes[flat / 8] >> (flat % 8)) & 1;
    };
    const auto mask = d.sparse.mask().bytes();
    const auto signs = d.b_plane.bits().bytes();
    const auto values = d.sparse.values();
    const std::size_t rank = d.d_out ? d.u.size() / d.d_out : 0;

    DenseMatrix out(d.d_out, d.d_in);
    std::size_t next = 0;
    for (std::size_t i = 0; i < d.d_out; ++i) {
        for (std::size_t j = 0; j < d.d_in; ++j) {
            const std::size_t flat = i * d.d_in + j;
            double lr = 0.0;
            for (std::size_t k = 0; k < rank; ++k) lr += d.u[k * d.d_out + i] * d.v[k * d.d_in + j];
            const double sign = !d.binary_plane || bit(signs, flat) ? 1.0 : -1.0;
            const double sparse = bit(mask, flat) ? values[next++] : 0.0;
            out(i, j) = sparse + lr * sign;
        }
    }
    return out;
}

}  // namespace slab::oracle
