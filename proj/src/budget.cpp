#include <cmath>
#include <sstream>

#include "slab/decompose.hpp"
#include "slab/error.hpp"

namespace slab {

void CompressConfig::validate() const {
    auto bad = [](const std::string& msg) { throw Error(ErrorKind::invalid_argument, msg); };
    if (!(cr >= 0.0 && cr < 1.0)) bad("cr must lie in [0, 1), got " + std::to_string(cr));
    if (bit_width < 1) bad("bit width must be positive, got " + std::to_string(bit_width));
    if (iters < 1) bad("iteration count must be >= 1, got " + std::to_string(iters));
    if (group.rows < 1) bad("group rows must be >= 1");
    if (nm) {
        if (nm->n < 1 || nm->n >= nm->m)
            bad("N:M pattern needs 1 <= N < M, got " + std::to_string(nm->n) + ":" +
                std::to_string(nm->m));
    }
    if (density_override && !(*density_override >= 0.0 && *density_override <= 1.0))
        bad("density override must lie in [0, 1], got " + std::to_string(*density_override));
    if (lowrank_rank == 0 && binary_plane)
        bad("rank 0 is only meaningful with the binary plane disabled");
}

double retained_density(double cr, int bit_width, std::size_t d_out, std::size_t d_in,
                        std::size_t rank, bool binary_plane) {
    const double r = static_cast<double>(rank);
    double density = 1.0 - cr;
    if (binary_plane && rank > 0) density -= 1.0 / bit_width;
    density -= r / static_cast<double>(d_out) + r / static_cast<double>(d_in);
    return density;
}

SparsityBudget sparsity_budget(const CompressConfig& cfg, std::size_t d_out, std::size_t d_in) {
    cfg.validate();
    if (d_out < 1 || d_in < 1)
        throw Error(ErrorKind::invalid_argument, "sparsity_budget: dimensions must be positive");

    SparsityBudget b;
    if (cfg.density_override) {
        b.density = *cfg.density_override;
    } else {
        b.density = retained_density(cfg.cr, cfg.bit_width, d_out, d_in, cfg.lowrank_rank,
                                     cfg.binary_plane);
        if (b.density <= 0.0) {
            std::ostringstream os;
            os.precision(10);
            os << "infeasible cr: retained density 1 - cr";
            if (cfg.binary_plane && cfg.lowrank_rank > 0) os << " - 1/b";
            if (cfg.lowrank_rank > 0) os << " - rank*(1/d_out + 1/d_in)";
            os << " = " << b.density << " <= 0 (cr=" << cfg.cr;
            if (cfg.binary_plane && cfg.lowrank_rank > 0) os << ", 1/b=" << 1.0 / cfg.bit_width;
            if (cfg.lowrank_rank > 0)
                os << ", rank/d_out=" << double(cfg.lowrank_rank) / d_out
                   << ", rank/d_in=" << double(cfg.lowrank_rank) / d_in;
            os << ")";
            throw Error(ErrorKind::infeasible_budget, os.str());
        }
    }

    b.group_rows = cfg.group.rows;
    b.group_cols = cfg.group.cols == 0 ? d_in : cfg.group.cols;
    if (d_out % b.group_rows != 0 || d_in % b.group_cols != 0)
        throw Error(ErrorKind::invalid_argument,
                    "comparison group " + std::to_string(b.group_rows) + "x" +
                        std::to_string(b.group_cols) + " does not tile " + std::to_string(d_out) +
                        "x" + std::to_string(d_in));
    if (cfg.nm) {
        if (d_in % cfg.nm->m != 0)
            throw Error(ErrorKind::invalid_argument, "N:M pattern: d_in " + std::to_string(d_in) +
                                                         " is not divisible by M = " +
                                                         std::to_string(cfg.nm->m));
        if (b.group_cols % cfg.nm->m != 0)
            throw Error(ErrorKind::invalid_argument,
                        "N:M pattern: group width must be a multiple of M");
    }

    b.group_size = b.group_rows * b.group_cols;
    b.num_groups = (d_out / b.group_rows) * (d_in / b.group_cols);
    const double per_group = b.density * static_cast<double>(b.group_size);
    b.keep_per_group = static_cast<std::size_t>(std::floor(per_group + 1e-9));
    if (b.keep_per_group > b.group_size) b.keep_per_group = b.group_size;
    if (cfg.nm) {
        const std::size_t survivors = b.group_size / cfg.nm->m * cfg.nm->n;
        if (b.keep_per_group > survivors) b.keep_per_group = survivors;
    }
    b.k_total = b.keep_per_group * b.num_groups;
    b.k_target = static_cast<std::size_t>(
        std::llround(b.density * static_cast<double>(d_out) * static_cast<double>(d_in)));
    if (b.keep_per_group == 0 && b.density > 0.0)
        b.warning = "density " + std::to_string(b.density) + " floors to 0 entries per group of " +
                    std::to_string(b.group_size);
    return b;
}

}  // namespace slab
