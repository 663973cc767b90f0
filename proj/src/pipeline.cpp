#include "slab/pipeline.hpp"

#include <cmath>
#include <exception>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "slab/calibration.hpp"
#include "slab/error.hpp"

namespace slab {

// --- reports ---------------------------------------------------------------

LayerReport make_report(const std::string& name, const DenseMatrix& w, const SlabDecomposition& d,
                        std::span<const double> s_x) {
    const DenseMatrix diff = w - reconstruct(d);
    const CrReport cr = cr_report(d);
    LayerReport r;
    r.name = name;
    r.weighted_error = weighted_frobenius_norm(diff, s_x);
    r.unweighted_error = frobenius_norm(diff);
    r.cr_paper = cr.cr_paper;
    r.cr_actual = cr.cr_actual;
    r.k_target = cr.k_target;
    r.k_achieved = cr.k_achieved;
    return r;
}

std::string LayerReport::to_json_line() const {
    nlohmann::ordered_json j;
    j["layer"] = name;
    j["weighted_error"] = weighted_error;
    j["unweighted_error"] = unweighted_error;
    j["cr_paper"] = cr_paper;
    j["cr_actual"] = cr_actual;
    j["k_target"] = k_target;
    j["k_achieved"] = k_achieved;
    return j.dump();
}

std::string LayerReport::csv_header() {
    return "layer,weighted_error,unweighted_error,cr_paper,cr_actual,k_target,k_achieved";
}

std::string LayerReport::to_csv_row() const {
    std::ostringstream os;
    os << std::setprecision(17) << name << ',' << weighted_error << ',' << unweighted_error << ','
       << cr_paper << ',' << cr_actual << ',' << k_target << ',' << k_achieved;
    return os.str();
}

// --- forward ---------------------------------------------------------------

DenseMatrix apply_activation(const DenseMatrix& x, Activation act) {
    if (act == Activation::identity) return x;
    DenseMatrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x.data()[i];
        out.data()[i] = act == Activation::relu ? (v > 0.0 ? v : 0.0)
                                                : 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
    }
    return out;
}

DenseMatrix linear_forward(const DenseMatrix& x, const DenseMatrix& w) {
    if (x.cols() != w.cols())
        throw Error(ErrorKind::shape_mismatch, "linear_forward: input width " + std::to_string(x.cols()) +
                                                   " vs weight d_in " + std::to_string(w.cols()));
    DenseMatrix y(x.rows(), w.rows());
    const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t rr = 0; rr < n; ++rr) {
        const auto r = static_cast<std::size_t>(rr);
        const auto xr = x.row(r);
        auto yr = y.row(r);
        for (std::size_t o = 0; o < w.rows(); ++o) {
            const auto wo = w.row(o);
            double acc = 0.0;
            for (std::size_t c = 0; c < w.cols(); ++c) acc += xr[c] * wo[c];
            yr[o] = acc;
        }
    }
    return y;
}

// --- compression -----------------------------------------------------------

namespace {

CompressedLayer compress_layer(const LayerSpec& spec, const DenseMatrix& w, const DenseMatrix& acts,
                               const CompressConfig& cfg, LayerReport& report) {
    if (acts.cols() != spec.d_in)
        throw Error(ErrorKind::shape_mismatch, "layer '" + spec.name + "': activations have " +
                                                   std::to_string(acts.cols()) + " columns, expected " +
                                                   std::to_string(spec.d_in));
    const auto s_x = column_norms(acts);
    CompressedLayer out{spec.name, slab_decompose(w, s_x, cfg)};
    report = make_report(spec.name, w, out.decomposition, s_x);
    return out;
}

}  // namespace

CompressionResult compress_model(const ModelManifest& manifest, const TensorFile& tensors,
                                 const DenseMatrix* calib_inputs, const CompressConfig& cfg, Mode mode,
                                 int jobs) {
    manifest.check_chain();
    CompressionResult res;

    if (mode == Mode::sequential) {
        if (!calib_inputs) throw Error(ErrorKind::invalid_argument, "sequential mode needs calibration inputs");
        if (calib_inputs->cols() != manifest.input_d_in)
            throw Error(ErrorKind::shape_mismatch, "calibration inputs have " + std::to_string(calib_inputs->cols()) +
                                                       " columns, model input is " +
                                                       std::to_string(manifest.input_d_in));
        DenseMatrix x = *calib_inputs;
        for (const auto& spec : manifest.layers) {
            if (spec.kind == LayerKind::elementwise) {
                x = apply_activation(x, spec.activation);
                continue;
            }
            const DenseMatrix w = tensors.get(spec.weight_ref);
            LayerReport report;
            auto layer = compress_layer(spec, w, x, cfg, report);
            x = linear_forward(x, reconstruct(layer.decomposition));
            res.layers.push_back(std::move(layer));
            res.reports.push_back(std::move(report));
        }
        return res;
    }

    std::vector<const LayerSpec*> linear;
    for (const auto& spec : manifest.layers)
        if (spec.kind == LayerKind::linear) {
            if (!tensors.contains(spec.name + ".act"))
                throw Error(ErrorKind::missing_entry, "offline mode: no activation entry '" + spec.name + ".act'");
            linear.push_back(&spec);
        }

    res.layers.resize(linear.size());
    res.reports.resize(linear.size());
    std::vector<std::exception_ptr> errors(linear.size());
    const auto n = static_cast<std::ptrdiff_t>(linear.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs > 0 ? jobs : 1) if (jobs > 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            const LayerSpec& spec = *linear[k];
            res.layers[k] = compress_layer(spec, tensors.get(spec.weight_ref), tensors.get(spec.name + ".act"),
                                           cfg, res.reports[k]);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return res;
}

// --- sweeps and baselines --------------------------------------------------

std::vector<RankPoint> rank_sweep(const DenseMatrix& w, std::span<const double> s_x, const CompressConfig& cfg,
                                  const std::vector<std::size_t>& ranks) {
    if (ranks.empty() || ranks.front() != 0)
        throw Error(ErrorKind::invalid_argument, "rank_sweep: ranks must start at 0");
    for (std::size_t i = 1; i < ranks.size(); ++i)
        if (ranks[i] <= ranks[i - 1])
            throw Error(ErrorKind::invalid_argument, "rank_sweep: ranks must be strictly ascending");
    const std::size_t limit = std::min(w.rows(), w.cols());
    if (ranks.back() > limit)
        throw Error(ErrorKind::invalid_argument, "rank_sweep: rank " + std::to_string(ranks.back()) +
                                                     " exceeds min(d_out, d_in) = " + std::to_string(limit));

    std::vector<RankPoint> out;
    for (std::size_t r : ranks) {
        CompressConfig c = cfg;
        c.lowrank_rank = r;
        c.binary_plane = r > 0;
        const auto d = slab_decompose(w, s_x, c);
        out.push_back({r, weighted_error(w, d, s_x)});
    }
    return out;
}

BaselineResult baseline_sparse_lowrank(const DenseMatrix& w, std::span<const double> s_x,
                                       const CompressConfig& cfg, std::size_t rank) {
    if (rank > std::min(w.rows(), w.cols()))
        throw Error(ErrorKind::invalid_argument, "baseline: rank exceeds min(d_out, d_in)");
    CompressConfig c = cfg;
    c.binary_plane = false;
    c.lowrank_rank = rank;
    BaselineResult out;
    out.decomposition = slab_decompose(w, s_x, c);
    out.report = make_report("baseline_rank" + std::to_string(rank), w, out.decomposition, s_x);
    return out;
}

// --- synthetic data --------------------------------------------------------

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> data(rows * cols);
    for (auto& x : data) x = dist(rng);
    return DenseMatrix(rows, cols, std::move(data));
}

std::vector<SyntheticLayer> synthetic_layers(std::uint64_t seed, std::size_t count, std::size_t d_out,
                                             std::size_t d_in, std::size_t calib_rows) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> scale(0.5, 1.5);
    std::vector<SyntheticLayer> out;
    for (std::size_t i = 0; i < count; ++i) {
        SyntheticLayer l;
        l.name = "layer" + std::to_string(i);
        l.weight = gaussian_matrix(d_out, d_in, rng);
        l.activations = gaussian_matrix(calib_rows, d_in, rng);
        std::vector<double> col_scale(d_in);
        for (auto& s : col_scale) s = scale(rng);
        for (std::size_t r = 0; r < calib_rows; ++r)
            for (std::size_t c = 0; c < d_in; ++c) l.activations(r, c) *= col_scale[c];
        out.push_back(std::move(l));
    }
    return out;
}

}  // namespace slab
