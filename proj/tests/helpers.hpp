#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "slab/tensor.hpp"

namespace slab::test {

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    DenseMatrix m(rows, cols);
    for (auto& x : m.data()) x = dist(rng);
    return m;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

inline double rel_inf(std::span<const double> y, std::span<const double> ref) {
    double scale = 0.0;
    for (double r : ref) scale = std::max(scale, std::fabs(r));
    const double d = max_abs_diff(y, ref);
    return scale > 0.0 ? d / scale : d;
}

}  // namespace slab::test
