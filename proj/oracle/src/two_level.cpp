#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "slab/oracle.hpp"

namespace slab::oracle {

double two_level_objective(std::span<const double> values, double a, double b) {
    double f = 0.0;
    for (double w : values) f += std::min((w - a) * (w - a), (w - b) * (w - b));
    return f;
}

TwoLevelSolution best_two_level_split(std::span<const double> sorted) {
    const std::size_t n = sorted.size();
    if (n < 2) throw std::invalid_argument("best_two_level_split: need at least 2 values");
    if (!std::is_sorted(sorted.begin(), sorted.end()))
        throw std::invalid_argument("best_two_level_split: values must be sorted ascending");

    double total = 0.0, total_sq = 0.0;
    for (double w : sorted) {
        total += w;
        total_sq += w * w;
    }

    // Splits are ranked by within-cluster sum of squares (O(1) each from
    // prefix sums); the reported objective is f evaluated directly.
    std::size_t best_t = 0;
    double best_ss = 0.0;
    double prefix = 0.0, prefix_sq = 0.0;
    for (std::size_t t = 0; t + 1 < n; ++t) {
        prefix += sorted[t];
        prefix_sq += sorted[t] * sorted[t];
        const double suffix = total - prefix;
        const double ss = prefix_sq - prefix * prefix / double(t + 1) + (total_sq - prefix_sq) -
                          suffix * suffix / double(n - t - 1);
        if (t == 0 || ss < best_ss) {
            best_ss = ss;
            best_t = t;
        }
    }

    TwoLevelSolution best;
    best.t = best_t;
    double head = 0.0;
    for (std::size_t k = 0; k <= best_t; ++k) head += sorted[k];
    double tail = 0.0;
    for (std::size_t k = best_t + 1; k < n; ++k) tail += sorted[k];
    best.a = head / double(best_t + 1);
    best.b = tail / double(n - best_t - 1);
    best.objective = two_level_objective(sorted, best.a, best.b);
    const double mid = 0.5 * (best.a + best.b);
    // Equality is allowed at both ends; leave room for rounding in the means.
    const double slack = 1e-12 * (1.0 + std::fabs(mid));
    best.midpoint_ok = sorted[best.t] <= mid + slack && mid <= sorted[best.t + 1] + slack;
    return best;
}

TwoLevelSolution best_two_level_exhaustive(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2 || n > 12) throw std::invalid_argument("best_two_level_exhaustive: need 2 <= n <= 12");

    TwoLevelSolution best;
    bool have = false;
    for (std::uint32_t assign = 0; assign < (1u << n); ++assign) {
        double s0 = 0.0, s1 = 0.0;
        std::size_t n0 = 0, n1 = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (assign >> k & 1u) {
                s1 += values[k];
                ++n1;
            } else {
                s0 += values[k];
                ++n0;
            }
        }
        double a = n0 ? s0 / double(n0) : s1 / double(n1);
        double b = n1 ? s1 / double(n1) : a;
        if (a > b) std::swap(a, b);
        const double f = two_level_objective(values, a, b);
        if (!have || f < best.objective) {
            std::size_t below = 0;
            for (double w : values) below += (w - a) * (w - a) <= (w - b) * (w - b);
            best = {a, b, below ? below - 1 : 0, f, true};
            have = true;
        }
    }
    return best;
}

double symmetric_levels_check(std::size_t sample_size, std::size_t trials, std::uint64_t seed,
                              Distribution dist, double shift) {
    if (sample_size < 100) throw std::invalid_argument("symmetric_levels_check: sample_size must be >= 100");
    if (trials == 0) throw std::invalid_argument("symmetric_levels_check: trials must be >= 1");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> sample(sample_size);
    double acc = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        for (auto& x : sample) x = (dist == Distribution::normal ? normal(rng) : expo(rng)) + shift;
        std::sort(sample.begin(), sample.end());
        const auto sol = best_two_level_split(sample);
        acc += std::fabs(sol.a + sol.b - 2.0 * shift) / (sol.b - sol.a);
    }
    return acc / static_cast<double>(trials);
}

}  // namespace slab::oracle
