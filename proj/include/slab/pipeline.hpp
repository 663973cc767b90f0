#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "slab/decompose.hpp"
#include "slab/slabfmt.hpp"
#include "slab/tensorfile.hpp"

namespace slab {

enum class LayerKind { linear, elementwise };
enum class Activation { identity, relu, gelu };

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::linear;
    Activation activation = Activation::identity;  // elementwise only
    std::size_t d_out = 0;                         // linear only
    std::size_t d_in = 0;
    std::string weight_ref;
};

/// Ordered description of a model's layers. Parsed from JSON:
///
///   { "tensor_file": "model.sltn",
///     "input_spec": { "d_in": 64, "calibration_ref": "calib.input" },
///     "layers": [ { "name": "fc1", "kind": "linear", "d_out": 128,
///                   "d_in": 64, "weight_ref": "fc1.weight" },
///                 { "name": "act1", "kind": "elementwise",
///                   "activation": "relu" }, ... ] }
///
/// tensor_file is resolved relative to the manifest's directory.
struct ModelManifest {
    std::vector<LayerSpec> layers;
    std::filesystem::path tensor_file;
    std::size_t input_d_in = 0;
    std::optional<std::string> calibration_ref;
    std::optional<std::string> calibration_source;

    static ModelManifest parse(const std::string& json_text, const std::filesystem::path& base_dir = {});
    static ModelManifest load(const std::filesystem::path& path);
    std::string to_json() const;

    /// Throws ErrorKind::chain_violation naming both layers when a linear
    /// layer's d_in does not match the previous linear layer's d_out.
    void check_chain() const;

    /// Cross-checks against the tensor file: every weight_ref resolves with
    /// matching shape (errors), entries nothing references (warnings).
    std::vector<std::string> validate(const TensorFile& tf) const;
};

enum class Mode { sequential, offline };

struct LayerReport {
    std::string name;
    double weighted_error = 0.0;
    double unweighted_error = 0.0;
    double cr_paper = 0.0;
    double cr_actual = 0.0;
    std::size_t k_target = 0;
    std::size_t k_achieved = 0;

    std::string to_json_line() const;
    static std::string csv_header();
    std::string to_csv_row() const;
};

LayerReport make_report(const std::string& name, const DenseMatrix& w, const SlabDecomposition& d,
                        std::span<const double> s_x);

struct CompressedLayer {
    std::string name;
    SlabDecomposition decomposition;
};

struct CompressionResult {
    std::vector<CompressedLayer> layers;
    std::vector<LayerReport> reports;
};

/// Layer-wise compression. Sequential mode forwards `calib_inputs` through
/// the already-compressed prefix to get each layer's activations; offline
/// mode reads "<layer>.act" from the tensor file and may spread layers over
/// `jobs` threads (results are identical for any job count).
CompressionResult compress_model(const ModelManifest& manifest, const TensorFile& tensors,
                                 const DenseMatrix* calib_inputs, const CompressConfig& cfg, Mode mode,
                                 int jobs = 1);

DenseMatrix apply_activation(const DenseMatrix& x, Activation act);

/// X W^T.
DenseMatrix linear_forward(const DenseMatrix& x, const DenseMatrix& w);

struct RankPoint {
    std::size_t rank = 0;
    double weighted_error = 0.0;
};

/// Weighted error against the factor rank at a constant total bit budget.
/// Rank 0 is plain activation-weighted magnitude pruning at density 1 - CR;
/// rank r >= 1 couples the binary plane with a rank-r non-negative factor and
/// charges b*r*(d_out + d_in) bits for it.
std::vector<RankPoint> rank_sweep(const DenseMatrix& w, std::span<const double> s_x,
                                  const CompressConfig& cfg, const std::vector<std::size_t>& ranks);

struct BaselineResult {
    LayerReport report;
    SlabDecomposition decomposition;
};

/// Sparse + rank-r decomposition with the binary plane disabled, at the same
/// total bit budget as full SLaB (its bitmap bits go to the sparse plane).
BaselineResult baseline_sparse_lowrank(const DenseMatrix& w, std::span<const double> s_x,
                                       const CompressConfig& cfg, std::size_t rank);

/// Deterministic synthetic data for runs without external assets.
DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double stddev = 1.0);

struct SyntheticLayer {
    std::string name;
    DenseMatrix weight;
    DenseMatrix activations;  // calibration inputs, calib_rows x d_in
};

/// Gaussian weights N(0, 1) and Gaussian activations with per-column scales
/// drawn from [0.5, 1.5], all from one seed.
std::vector<SyntheticLayer> synthetic_layers(std::uint64_t seed, std::size_t count, std::size_t d_out,
                                             std::size_t d_in, std::size_t calib_rows);

}  // namespace slab
