#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "slab/error.hpp"
#include "slab/parallel.hpp"

using namespace slab;
using namespace slab::cli;

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("slab");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("SLAB_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to off; only honor real level names.
        if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
    }
}

// One line, key=value, reason last so it may contain spaces.
int fail(const char* kind, const std::string& reason, int code) {
    std::cerr << "slab: error kind=" << kind << " exit=" << code << " reason=" << reason << '\n';
    return code;
}

NmPattern parse_nm(const std::string& text) {
    const auto colon = text.find(':');
    std::size_t n = 0, m = 0;
    try {
        if (colon == std::string::npos) throw std::invalid_argument("");
        std::size_t used = 0;
        n = std::stoul(text.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument("");
        m = std::stoul(text.substr(colon + 1), &used);
        if (used != text.size() - colon - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw Error(ErrorKind::invalid_argument, "--nm expects N:M, got '" + text + "'");
    }
    return {n, m};
}

void add_compress_flags(CLI::App* cmd, RunConfig& run, bool* no_binary) {
    cmd->add_option("--cr", run.compress.cr, "target compression ratio in [0, 1)");
    cmd->add_option("--bits", run.compress.bit_width, "storage bit width b (16 or 32 for .slab)");
    cmd->add_option("--iters", run.compress.iters, "decomposition iterations");
    cmd->add_option("--group-rows", run.compress.group.rows, "comparison group rows");
    cmd->add_option("--group-cols", run.compress.group.cols, "comparison group columns (0 = d_in)");
    cmd->add_option("--nm", run.nm, "N:M structured sparsity, e.g. 2:4");
    cmd->add_flag("--no-binary", *no_binary, "disable the binary plane");
    cmd->add_option("--rank", run.compress.lowrank_rank, "rank of the non-negative factor");
}

void add_source_flags(CLI::App* cmd, RunConfig& run, std::string& mode) {
    cmd->add_option("--manifest", run.manifest, "model manifest JSON (omit for the synthetic suite)");
    cmd->add_option("--tensors", run.tensors, "SLTN tensor file (overrides the manifest's tensor_file)");
    cmd->add_option("--mode", mode, "sequential or offline")->check(CLI::IsMember({"sequential", "offline"}));
    cmd->add_option("--seed", run.seed, "seed for synthetic data");
    cmd->add_option("--jobs", run.jobs, "offline-mode worker threads");
    cmd->add_option("--layers", run.layers, "synthetic layer count");
    cmd->add_option("--d-out", run.d_out, "synthetic layer rows");
    cmd->add_option("--d-in", run.d_in, "synthetic layer columns");
    cmd->add_option("--calib-rows", run.calib_rows, "synthetic calibration rows");
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    RunConfig run;
    std::string mode = "sequential";
    bool no_binary = false;

    CLI::App app{"SLaB weight decomposition toolkit"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "expand all subcommand help");

    auto* decompose = app.add_subcommand("decompose", "decompose every linear layer into .slab files");
    add_source_flags(decompose, run, mode);
    add_compress_flags(decompose, run, &no_binary);
    decompose->add_option("--out", run.out, "output directory");
    decompose->add_option("--report", run.report, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    auto* sweep = app.add_subcommand("sweep-rank", "average weighted error against factor rank");
    add_source_flags(sweep, run, mode);
    add_compress_flags(sweep, run, &no_binary);
    sweep->add_option("--out", run.out, "output directory");
    sweep->add_option("--report", run.report, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sweep->add_option("--ranks", run.ranks, "ranks to sweep, ascending, starting at 0")->delimiter(',');

    auto* packc = app.add_subcommand("pack", "pack <name>.{w_s,u,v,mask,b} tensors into a .slab file");
    packc->add_option("--tensors", run.tensors, "SLTN tensor file")->required();
    packc->add_option("--name", run.name, "tensor name stem")->required();
    packc->add_option("--bits", run.compress.bit_width, "storage bit width (16 or 32)");
    packc->add_option("--out", run.out, "output directory");

    auto* unpackc = app.add_subcommand("unpack", "expand a .slab file into an SLTN tensor file");
    unpackc->add_option("--in", run.input, "input .slab file")->required();
    unpackc->add_option("--name", run.name, "tensor name stem (default: file stem)");
    unpackc->add_option("--out", run.out, "output directory");

    auto* bench = app.add_subcommand("matvec-bench", "time the decomposed kernel against a dense reference");
    add_source_flags(bench, run, mode);
    add_compress_flags(bench, run, &no_binary);
    bench->add_option("--in", run.input, "benchmark a single .slab file instead");
    bench->add_option("--vectors", run.vectors, "random input vectors per layer");
    bench->add_option("--reps", run.reps, "timing repetitions");
    bench->add_option("--tolerance", run.tolerance, "max relative infinity-norm deviation");

    auto* oracle = app.add_subcommand("oracle-check", "run the brute-force oracle agreement checks");
    oracle->add_option("--seed", run.seed, "seed for random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("invalid_argument", e.what(), kConfigError);
    }

    try {
        run.mode = mode == "offline" ? Mode::offline : Mode::sequential;
        run.compress.binary_plane = !no_binary;
        if (!run.nm.empty()) run.compress.nm = parse_nm(run.nm);
        if (run.jobs < 1) throw Error(ErrorKind::invalid_argument, "--jobs must be >= 1");

        if (*decompose) return cmd_decompose(run);
        if (*sweep) {
            // Factor bits are charged against the sparse budget, so tiny
            // layers make higher ranks look worse; sweep at a wider default.
            if (sweep->count("--d-out") == 0) run.d_out = 256;
            if (sweep->count("--d-in") == 0) run.d_in = 256;
            return cmd_sweep_rank(run);
        }
        if (*packc) return cmd_pack(run);
        if (*unpackc) return cmd_unpack(run);
        if (*bench) return cmd_matvec_bench(run);
        if (*oracle) return cmd_oracle_check(run);
    } catch (const FormatError& e) {
        return fail(to_string(e.fault()), e.what(), kIoError);
    } catch (const Error& e) {
        return fail(to_string(e.kind()), e.what(), exit_code_for(e.kind()));
    } catch (const std::exception& e) {
        return fail("internal", e.what(), kConfigError);
    }
    return kConfigError;
}
