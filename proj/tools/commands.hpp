#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slab/decompose.hpp"
#include "slab/error.hpp"
#include "slab/pipeline.hpp"

namespace slab::cli {

enum ExitCode : int {
    kOk = 0,
    kCheckFailed = 1,
    kConfigError = 2,
    kIoError = 3,
    kInfeasible = 4,
};

struct RunConfig {
    std::string manifest;
    std::string tensors;
    std::string out = ".";
    std::string input;  // .slab file (matvec-bench, unpack)
    std::string name;   // tensor stem (pack)

    CompressConfig compress;
    std::string nm;  // "N:M" as given
    Mode mode = Mode::sequential;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string report = "json";

    // synthetic suite
    std::size_t layers = 4;
    std::size_t d_out = 64;
    std::size_t d_in = 64;
    std::size_t calib_rows = 256;

    std::vector<std::size_t> ranks{0, 1, 2, 4};
    std::size_t vectors = 100;
    int reps = 20;
    double tolerance = 1e-5;
};

int cmd_decompose(const RunConfig& run);
int cmd_sweep_rank(const RunConfig& run);
int cmd_pack(const RunConfig& run);
int cmd_unpack(const RunConfig& run);
int cmd_matvec_bench(const RunConfig& run);
int cmd_oracle_check(const RunConfig& run);

/// Maps a library error onto the exit-code taxonomy.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace slab::cli
