#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "slab/bytes.hpp"
#include "slab/calibration.hpp"
#include "slab/error.hpp"
#include "slab/oracle.hpp"
#include "slab/slabfmt.hpp"
#include "slab/tensorfile.hpp"

namespace fs = std::filesystem;

namespace slab::cli {

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument:
        case ErrorKind::shape_mismatch:
        case ErrorKind::chain_violation:
        case ErrorKind::missing_entry:
        case ErrorKind::degenerate_spectrum:
            return kConfigError;
        case ErrorKind::io:
        case ErrorKind::format:
        case ErrorKind::non_finite:
        case ErrorKind::value_overflow:
            return kIoError;
        case ErrorKind::infeasible_budget:
            return kInfeasible;
    }
    return kConfigError;
}

namespace {

struct LayerInput {
    std::string name;
    DenseMatrix weight;
    std::vector<double> s_x;
};

// Layer names may carry path separators ("model/fc1"); keep files flat.
std::string file_stem(const std::string& layer) {
    std::string s = layer;
    std::replace(s.begin(), s.end(), '/', '_');
    std::replace(s.begin(), s.end(), '\\', '_');
    return s;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw Error(ErrorKind::io, "write failed: " + path.string());
}

void check_report_format(const RunConfig& run) {
    if (run.report != "json" && run.report != "csv")
        throw Error(ErrorKind::invalid_argument, "--report must be json or csv, got '" + run.report + "'");
}

ModelManifest load_manifest(const RunConfig& run) {
    ModelManifest m = ModelManifest::load(run.manifest);
    if (!run.tensors.empty()) m.tensor_file = run.tensors;
    m.check_chain();
    return m;
}

std::vector<const LayerSpec*> linear_layers(const ModelManifest& m) {
    std::vector<const LayerSpec*> out;
    for (const auto& l : m.layers)
        if (l.kind == LayerKind::linear) out.push_back(&l);
    return out;
}

// Every layer's budget is checked up front so nothing is written for a run
// that cannot finish.
void check_budgets(const CompressConfig& cfg, const std::vector<std::pair<std::size_t, std::size_t>>& shapes) {
    cfg.validate();
    for (auto [d_out, d_in] : shapes) {
        const auto b = sparsity_budget(cfg, d_out, d_in);
        if (b.warning) spdlog::warn("{}", *b.warning);
    }
}

const DenseMatrix* calibration_for(const RunConfig& run, const ModelManifest& m, const TensorFile& tf,
                                   DenseMatrix& storage) {
    if (run.mode != Mode::sequential) return nullptr;
    if (!m.calibration_ref)
        throw Error(ErrorKind::invalid_argument, "sequential mode needs input_spec.calibration_ref in the manifest");
    storage = tf.get(*m.calibration_ref);
    return &storage;
}

CompressionResult decompose_all(const RunConfig& run) {
    if (!run.manifest.empty()) {
        const ModelManifest m = load_manifest(run);
        std::vector<std::pair<std::size_t, std::size_t>> shapes;
        for (const auto* l : linear_layers(m)) shapes.emplace_back(l->d_out, l->d_in);
        check_budgets(run.compress, shapes);

        const TensorFile tf = TensorFile::load(m.tensor_file);
        for (const auto& w : m.validate(tf)) spdlog::warn("{}", w);
        DenseMatrix calib;
        const DenseMatrix* calib_ptr = calibration_for(run, m, tf, calib);
        spdlog::info("compressing {} linear layers ({} mode)", shapes.size(),
                     run.mode == Mode::sequential ? "sequential" : "offline");
        return compress_model(m, tf, calib_ptr, run.compress, run.mode, run.jobs);
    }

    check_budgets(run.compress, {{run.d_out, run.d_in}});
    spdlog::info("synthetic suite: {} layers {}x{}, seed {}", run.layers, run.d_out, run.d_in, run.seed);
    CompressionResult out;
    for (auto& l : synthetic_layers(run.seed, run.layers, run.d_out, run.d_in, run.calib_rows)) {
        const auto s_x = column_norms(l.activations);
        auto d = slab_decompose(l.weight, s_x, run.compress);
        out.reports.push_back(make_report(l.name, l.weight, d, s_x));
        out.layers.push_back({l.name, std::move(d)});
    }
    return out;
}

// Weights and activation norms per linear layer, without compressing
// anything. Sequential mode forwards calibration inputs through the original
// layers so every rank in a sweep sees the same statistics.
std::vector<LayerInput> layer_inputs(const RunConfig& run) {
    std::vector<LayerInput> out;
    if (run.manifest.empty()) {
        for (auto& l : synthetic_layers(run.seed, run.layers, run.d_out, run.d_in, run.calib_rows))
            out.push_back({l.name, std::move(l.weight), column_norms(l.activations)});
        return out;
    }
    const ModelManifest m = load_manifest(run);
    const TensorFile tf = TensorFile::load(m.tensor_file);
    for (const auto& w : m.validate(tf)) spdlog::warn("{}", w);
    DenseMatrix calib;
    const DenseMatrix* x = calibration_for(run, m, tf, calib);
    DenseMatrix acts = x ? *x : DenseMatrix();
    for (const auto& l : m.layers) {
        if (l.kind == LayerKind::elementwise) {
            if (x) acts = apply_activation(acts, l.activation);
            continue;
        }
        DenseMatrix w = tf.get(l.weight_ref);
        if (x) {
            out.push_back({l.name, w, column_norms(acts)});
            acts = linear_forward(acts, w);
        } else {
            out.push_back({l.name, std::move(w), column_norms(tf.get(l.name + ".act"))});
        }
    }
    return out;
}

std::string render_reports(const std::vector<LayerReport>& reports, const std::string& format) {
    std::ostringstream os;
    if (format == "csv") os << LayerReport::csv_header() << '\n';
    for (const auto& r : reports) os << (format == "csv" ? r.to_csv_row() : r.to_json_line()) << '\n';
    return os.str();
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& e : x) e = dist(rng);
    return x;
}

double relative_inf_deviation(std::span<const double> y, std::span<const double> ref) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        diff = std::max(diff, std::fabs(y[i] - ref[i]));
        scale = std::max(scale, std::fabs(ref[i]));
    }
    return scale > 0.0 ? diff / scale : diff;
}

template <class F>
double time_per_call_us(int reps, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::micro>(t1 - t0).count() / std::max(reps, 1);
}

}  // namespace

int cmd_decompose(const RunConfig& run) {
    check_report_format(run);
    const CompressionResult result = decompose_all(run);

    // Pack everything before touching the output directory.
    std::vector<std::pair<fs::path, std::vector<std::uint8_t>>> files;
    for (const auto& l : result.layers)
        files.emplace_back(fs::path(run.out) / (file_stem(l.name) + ".slab"), pack(l.decomposition));

    ensure_dir(run.out);
    for (const auto& [path, bytes] : files) {
        write_file(path, bytes);
        spdlog::info("wrote {} ({} bytes)", path.string(), bytes.size());
    }
    const std::string text = render_reports(result.reports, run.report);
    write_text(fs::path(run.out) / (run.report == "csv" ? "report.csv" : "report.jsonl"), text);
    std::cout << text;
    return kOk;
}

int cmd_sweep_rank(const RunConfig& run) {
    check_report_format(run);
    run.compress.validate();
    const auto inputs = layer_inputs(run);
    if (inputs.empty()) throw Error(ErrorKind::invalid_argument, "sweep-rank: no linear layers");

    std::vector<double> mean(run.ranks.size(), 0.0);
    for (const auto& in : inputs) {
        const auto points = rank_sweep(in.weight, in.s_x, run.compress, run.ranks);
        for (std::size_t i = 0; i < points.size(); ++i) mean[i] += points[i].weighted_error;
        spdlog::debug("swept {}", in.name);
    }
    for (auto& m : mean) m /= double(inputs.size());

    std::ostringstream os;
    os << std::setprecision(17);
    if (run.report == "csv") os << "rank,avg_weighted_error,layers\n";
    for (std::size_t i = 0; i < mean.size(); ++i) {
        if (run.report == "csv")
            os << run.ranks[i] << ',' << mean[i] << ',' << inputs.size() << '\n';
        else
            os << "{\"rank\":" << run.ranks[i] << ",\"avg_weighted_error\":" << mean[i]
               << ",\"layers\":" << inputs.size() << "}\n";
    }
    ensure_dir(run.out);
    write_text(fs::path(run.out) / (run.report == "csv" ? "rank_sweep.csv" : "rank_sweep.jsonl"), os.str());
    std::cout << os.str();
    return kOk;
}

// SLTN entries <name>.w_s, <name>.u, <name>.v are required; <name>.mask
// defaults to the nonzeros of w_s and a missing <name>.b means no binary
// plane.
int cmd_pack(const RunConfig& run) {
    if (run.tensors.empty() || run.name.empty())
        throw Error(ErrorKind::invalid_argument, "pack needs --tensors and --name");
    run.compress.validate();
    const TensorFile tf = TensorFile::load(run.tensors);
    const DenseMatrix w_s = tf.get(run.name + ".w_s");
    const DenseMatrix u = tf.get(run.name + ".u");
    const DenseMatrix v = tf.get(run.name + ".v");
    const std::size_t d_out = w_s.rows(), d_in = w_s.cols();
    if (u.size() != d_out || v.size() != d_in)
        throw Error(ErrorKind::shape_mismatch, "pack: u must hold d_out and v d_in values");

    BitPlane mask(d_out, d_in);
    if (tf.contains(run.name + ".mask")) {
        const DenseMatrix m = tf.get(run.name + ".mask");
        if (m.rows() != d_out || m.cols() != d_in) throw Error(ErrorKind::shape_mismatch, "pack: mask shape");
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m.data()[i] != 0.0 && m.data()[i] != 1.0)
                throw Error(ErrorKind::invalid_argument, "pack: mask entries must be 0 or 1");
            mask.set(i, m.data()[i] == 1.0);
        }
    } else {
        for (std::size_t i = 0; i < w_s.size(); ++i) mask.set(i, w_s.data()[i] != 0.0);
    }

    SlabDecomposition d;
    d.d_out = d_out;
    d.d_in = d_in;
    d.sparse = SparsePlane(std::move(mask), w_s);
    d.u.assign(u.data().begin(), u.data().end());
    d.v.assign(v.data().begin(), v.data().end());
    d.binary_plane = tf.contains(run.name + ".b");
    d.b_plane = SignMatrix(d_out, d_in);
    if (d.binary_plane) {
        const DenseMatrix b = tf.get(run.name + ".b");
        if (b.rows() != d_out || b.cols() != d_in) throw Error(ErrorKind::shape_mismatch, "pack: b shape");
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (b.data()[i] != 1.0 && b.data()[i] != -1.0)
                throw Error(ErrorKind::invalid_argument, "pack: b entries must be +1 or -1");
        }
        d.b_plane = sign_matrix(b);
    }
    d.meta = run.compress;
    d.meta.binary_plane = d.binary_plane;
    d.k_target = d.sparse.nnz();

    const auto bytes = pack(d);
    ensure_dir(run.out);
    const fs::path path = fs::path(run.out) / (file_stem(run.name) + ".slab");
    write_file(path, bytes);
    const auto cr = cr_report(d);
    std::cout << "packed " << path.string() << " bytes=" << bytes.size() << " nnz=" << d.sparse.nnz()
              << std::setprecision(17) << " cr_paper=" << cr.cr_paper << " cr_actual=" << cr.cr_actual << '\n';
    return kOk;
}

int cmd_unpack(const RunConfig& run) {
    if (run.input.empty()) throw Error(ErrorKind::invalid_argument, "unpack needs --in <file.slab>");
    const std::string name = run.name.empty() ? fs::path(run.input).stem().string() : run.name;
    const SlabDecomposition d = unpack(read_file(run.input));

    DenseMatrix mask(d.d_out, d.d_in);
    for (std::size_t i = 0; i < mask.size(); ++i) mask.data()[i] = d.sparse.mask().test(i) ? 1.0 : 0.0;
    const DType dt = d.meta.bit_width == 16 ? DType::f16 : DType::f32;

    TensorFileWriter w;
    w.add(name + ".mask", mask, DType::f16);
    w.add(name + ".w_s", d.sparse.to_dense(), dt);
    w.add(name + ".u", DenseMatrix(d.d_out, 1, d.u), dt);
    w.add(name + ".v", DenseMatrix(1, d.d_in, d.v), dt);
    if (d.binary_plane) w.add(name + ".b", d.b_plane.to_dense(), DType::f16);
    w.add(name + ".w_hat", reconstruct(d), DType::f32);

    ensure_dir(run.out);
    const fs::path path = fs::path(run.out) / (file_stem(name) + ".sltn");
    w.write(path);
    std::cout << "unpacked " << path.string() << " d_out=" << d.d_out << " d_in=" << d.d_in
              << " nnz=" << d.sparse.nnz() << " binary_plane=" << (d.binary_plane ? 1 : 0) << '\n';
    return kOk;
}

int cmd_matvec_bench(const RunConfig& run) {
    if (run.reps < 1) throw Error(ErrorKind::invalid_argument, "--reps must be >= 1");
    if (!(run.tolerance >= 0.0)) throw Error(ErrorKind::invalid_argument, "--tolerance must be >= 0");

    std::vector<CompressedLayer> layers;
    if (!run.input.empty())
        layers.push_back({fs::path(run.input).stem().string(), unpack(read_file(run.input))});
    else
        layers = decompose_all(run).layers;

    std::mt19937_64 rng(run.seed);
    std::string worst_layer;
    double worst = 0.0;
    for (const auto& l : layers) {
        const auto& d = l.decomposition;
        const DenseMatrix dense = oracle::naive_reconstruct(d);
        std::vector<std::vector<double>> xs;
        for (std::size_t k = 0; k < run.vectors; ++k) xs.push_back(random_vector(d.d_in, rng));

        double dev = 0.0;
        bool parity = true;
        for (const auto& x : xs) {
            const auto ref = oracle::dense_matvec(dense, x);
            const auto ys = slab_matvec(d, x, Exec::serial);
            const auto yp = slab_matvec(d, x, Exec::parallel);
            parity = parity && ys == yp;
            dev = std::max({dev, relative_inf_deviation(ys, ref), relative_inf_deviation(yp, ref)});
        }
        const auto& x0 = xs.empty() ? random_vector(d.d_in, rng) : xs.front();
        const double t_serial = time_per_call_us(run.reps, [&] { (void)slab_matvec(d, x0, Exec::serial); });
        const double t_parallel = time_per_call_us(run.reps, [&] { (void)slab_matvec(d, x0, Exec::parallel); });
        const double t_dense = time_per_call_us(run.reps, [&] { (void)oracle::dense_matvec(dense, x0); });

        std::cout << std::setprecision(6) << "{\"layer\":\"" << l.name << "\",\"d_out\":" << d.d_out
                  << ",\"d_in\":" << d.d_in << ",\"serial_us\":" << t_serial << ",\"parallel_us\":" << t_parallel
                  << ",\"dense_us\":" << t_dense << ",\"threads\":" << max_threads()
                  << ",\"max_rel_dev\":" << std::setprecision(3) << dev
                  << ",\"serial_parallel_identical\":" << (parity ? "true" : "false") << "}\n";
        if (dev > worst || worst_layer.empty()) {
            worst = dev;
            worst_layer = l.name;
        }
        if (!parity) {
            std::cerr << "slab: check failed layer=" << l.name << " reason=serial and parallel kernels differ\n";
            return kCheckFailed;
        }
    }
    if (worst > run.tolerance) {
        std::cerr << "slab: check failed layer=" << worst_layer << " max_rel_dev=" << worst
                  << " tolerance=" << run.tolerance << '\n';
        return kCheckFailed;
    }
    return kOk;
}

namespace {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(3) << x;
    return os.str();
}

CheckResult check_two_level(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> size(2, 12);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    bool midpoint = true;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> w(size(rng));
        for (auto& x : w) x = normal(rng);
        std::sort(w.begin(), w.end());
        const auto split = oracle::best_two_level_split(w);
        const auto full = oracle::best_two_level_exhaustive(w);
        worst = std::max(worst, std::fabs(split.objective - full.objective));
        midpoint = midpoint && split.midpoint_ok;
    }
    return {"two-level split vs exhaustive", worst <= 1e-12 && midpoint,
            "max |f_split - f_exh| = " + fmt(worst)};
}

CheckResult check_nonnegative_factor(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dim(1, 32);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t r = dim(rng), c = dim(rng);
        DenseMatrix m = gaussian_matrix(r, c, rng);
        const auto lr = build_binary_lowrank(m);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) worst = std::min(worst, lr.u[i] * lr.v[j]);
    }
    return {"rank-1 factor of |M| non-negative", worst >= -1e-12, "min entry = " + fmt(worst)};
}

CheckResult check_symmetric_levels() {
    const double normal = oracle::symmetric_levels_check(10000, 20, 1, oracle::Distribution::normal);
    const double expo = oracle::symmetric_levels_check(10000, 20, 2, oracle::Distribution::exponential);
    return {"symmetric two-level statistic", normal < 0.05 && expo > 0.05,
            "normal " + fmt(normal) + " < 0.05, exponential " + fmt(expo) + " > 0.05"};
}

CheckResult check_mask_optimality(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> scale(0.5, 1.5);
    std::uniform_int_distribution<int> keep(1, 15);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const DenseMatrix w = gaussian_matrix(4, 4, rng);
        std::vector<double> s_x(4);
        for (auto& s : s_x) s = scale(rng);
        CompressConfig cfg;
        cfg.iters = 1;
        cfg.density_override = keep(rng) / 16.0;
        cfg.group = {4, 4};
        const auto d = slab_decompose(w, s_x, cfg);
        const DenseMatrix residual = w - hadamard(outer_sum(d.u, d.v, 4, 4), d.b_plane);
        const auto best = oracle::exhaustive_tiny_mask(residual, s_x, d.sparse.nnz(), 4, 4);
        worst = std::max(worst, std::fabs(weighted_error(w, d, s_x) - best.error));
    }
    return {"score mask vs exhaustive search", worst <= 1e-12, "max error gap = " + fmt(worst)};
}

CheckResult check_svd(std::mt19937_64& rng) {
    double sigma_gap = 0.0, product_gap = 0.0;
    for (int t = 0; t < 50; ++t) {
        const DenseMatrix m = gaussian_matrix(16, 12, rng);
        const auto mine = top_singular_triplet(m);
        const auto ref = oracle::reference_svd(m);
        sigma_gap = std::max(sigma_gap, std::fabs(mine.sigma - ref.sigma[0]) / ref.sigma[0]);
        for (std::size_t i = 0; i < 16; ++i)
            for (std::size_t j = 0; j < 12; ++j)
                product_gap = std::max(product_gap, std::fabs(mine.sigma * mine.u[i] * mine.v[j] -
                                                              ref.sigma[0] * ref.u(i, 0) * ref.v(j, 0)));
    }
    return {"power iteration vs Jacobi SVD", sigma_gap <= 1e-8 && product_gap <= 1e-6,
            "sigma rel gap " + fmt(sigma_gap) + ", rank-1 product gap " + fmt(product_gap)};
}

CheckResult check_matvec(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dim(1, 48);
    std::uniform_real_distribution<double> density(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const auto d = oracle::random_decomposition(rng, dim(rng), dim(rng), density(rng), t % 4 != 0);
        const auto x = random_vector(d.d_in, rng);
        worst = std::max(worst, relative_inf_deviation(slab_matvec(d, x),
                                                       oracle::dense_matvec(oracle::naive_reconstruct(d), x)));
    }
    return {"slab matvec vs dense reference", worst <= 1e-5, "max rel deviation = " + fmt(worst)};
}

CheckResult check_reconstruct(std::mt19937_64& rng) {
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto d = oracle::random_decomposition(rng, 8 + t % 5, 16 - t % 7, 0.3);
        const DenseMatrix a = reconstruct(d), b = oracle::naive_reconstruct(d);
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a.data()[i] - b.data()[i]));
    }
    return {"reconstruct vs triple-sum reference", worst <= 1e-12, "max abs gap = " + fmt(worst)};
}

}  // namespace

int cmd_oracle_check(const RunConfig& run) {
    std::mt19937_64 rng(run.seed);
    std::vector<CheckResult> results;
    results.push_back(check_two_level(rng));
    results.push_back(check_nonnegative_factor(rng));
    results.push_back(check_symmetric_levels());
    results.push_back(check_mask_optimality(rng));
    results.push_back(check_svd(rng));
    results.push_back(check_matvec(rng));
    results.push_back(check_reconstruct(rng));

    std::size_t failed = 0;
    for (const auto& r : results) {
        std::cout << (r.pass ? "ok     " : "FAILED ") << r.name << ": " << r.detail << '\n';
        failed += !r.pass;
    }
    if (failed) {
        std::cout << failed << " of " << results.size() << " checks failed\n";
        return kCheckFailed;
    }
    std::cout << "all checks passed\n";
    return kOk;
}

}  // namespace slab::cli
