#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "slab/calibration.hpp"
#include "slab/error.hpp"
#include "slab/oracle.hpp"
#include "slab/pipeline.hpp"

#include "json.hpp"

using namespace slab;

namespace {

LayerSpec linear(std::string name, std::size_t d_out, std::size_t d_in) {
    LayerSpec l;
    l.name = name;
    l.d_out = d_out;
    l.d_in = d_in;
    l.weight_ref = name + ".weight";
    return l;
}

LayerSpec relu(std::string name) {
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::elementwise;
    l.activation = Activation::relu;
    return l;
}

// Weights are f32-exact so values read back equal the ones kept here.
DenseMatrix f32_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    auto m = test::random_matrix(rows, cols, rng);
    for (auto& x : m.data()) x = static_cast<float>(x);
    return m;
}

bool same(const SlabDecomposition& a, const SlabDecomposition& b) {
    return a.sparse == b.sparse && a.u == b.u && a.v == b.v && a.b_plane == b.b_plane;
}

CompressConfig small_config() {
    CompressConfig cfg;
    cfg.cr = 0.5;
    cfg.iters = 5;
    return cfg;
}

}  // namespace

TEST(Pipeline, SingleLayerModesAgree) {
    std::mt19937_64 rng(1);
    const auto w = f32_matrix(32, 16, rng);
    const auto x = f32_matrix(40, 16, rng);
    TensorFileWriter tw;
    tw.add("fc1.weight", w);
    tw.add("calib", x);
    tw.add("fc1.act", x);
    const auto tf = TensorFile::parse(tw.finish());

    ModelManifest m;
    m.input_d_in = 16;
    m.calibration_ref = "calib";
    m.layers = {linear("fc1", 32, 16)};
    EXPECT_TRUE(m.validate(tf).empty());

    const auto seq = compress_model(m, tf, &x, small_config(), Mode::sequential);
    const auto off = compress_model(m, tf, nullptr, small_config(), Mode::offline);
    ASSERT_EQ(seq.layers.size(), 1u);
    EXPECT_TRUE(same(seq.layers[0].decomposition, off.layers[0].decomposition));
    EXPECT_EQ(seq.reports[0].weighted_error, off.reports[0].weighted_error);
}

TEST(Pipeline, SequentialUsesCompressedPrefix) {
    std::mt19937_64 rng(2);
    const auto w1 = f32_matrix(24, 16, rng), w2 = f32_matrix(8, 24, rng);
    const auto x = f32_matrix(64, 16, rng);
    const auto teacher = apply_activation(linear_forward(x, w1), Activation::relu);

    TensorFileWriter tw;
    tw.add("fc1.weight", w1);
    tw.add("fc2.weight", w2);
    tw.add("fc1.act", x);
    tw.add("fc2.act", teacher);
    const auto tf = TensorFile::parse(tw.finish());

    ModelManifest m;
    m.input_d_in = 16;
    m.layers = {linear("fc1", 24, 16), relu("act"), linear("fc2", 8, 24)};

    const auto cfg = small_config();
    const auto seq = compress_model(m, tf, &x, cfg, Mode::sequential);
    const auto off = compress_model(m, tf, nullptr, cfg, Mode::offline);

    // Layer 2 in sequential mode sees the compressed layer 1's output.
    const auto student = apply_activation(linear_forward(x, reconstruct(seq.layers[0].decomposition)),
                                          Activation::relu);
    const auto s_x = column_norms(student);
    EXPECT_TRUE(same(seq.layers[1].decomposition, slab_decompose(w2, s_x, cfg)));
    EXPECT_TRUE(same(seq.layers[0].decomposition, off.layers[0].decomposition));
    EXPECT_NE(seq.reports[1].weighted_error, off.reports[1].weighted_error);
}

TEST(Pipeline, OfflineIsOrderAndJobIndependent) {
    std::mt19937_64 rng(3);
    TensorFileWriter tw;
    ModelManifest m;
    m.input_d_in = 16;
    for (int i = 0; i < 5; ++i) {
        const std::string name = "l" + std::to_string(i);
        tw.add(name + ".weight", f32_matrix(16, 16, rng));
        tw.add(name + ".act", f32_matrix(20, 16, rng));
        m.layers.push_back(linear(name, 16, 16));
    }
    const auto tf = TensorFile::parse(tw.finish());
    const auto base = compress_model(m, tf, nullptr, small_config(), Mode::offline, 1);

    ModelManifest shuffled = m;
    std::reverse(shuffled.layers.begin(), shuffled.layers.end());
    const auto rev = compress_model(shuffled, tf, nullptr, small_config(), Mode::offline, 3);
    ASSERT_EQ(rev.layers.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(rev.layers[4 - i].name, base.layers[i].name);
        EXPECT_TRUE(same(rev.layers[4 - i].decomposition, base.layers[i].decomposition));
    }
}

TEST(Pipeline, Errors) {
    std::mt19937_64 rng(4);
    TensorFileWriter tw;
    tw.add("fc1.weight", f32_matrix(8, 8, rng));
    const auto tf = TensorFile::parse(tw.finish());
    ModelManifest m;
    m.input_d_in = 8;
    m.layers = {linear("fc1", 8, 8)};
    try {
        (void)compress_model(m, tf, nullptr, small_config(), Mode::offline);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::missing_entry);
    }
    m.layers.push_back(linear("fc2", 4, 6));
    try {
        (void)compress_model(m, tf, nullptr, small_config(), Mode::offline);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::chain_violation);
    }
}

TEST(Pipeline, ReportInvariants) {
    const std::string header = LayerReport::csv_header();
    for (const auto& l : synthetic_layers(9, 3, 32, 32, 64)) {
        const auto s_x = column_norms(l.activations);
        const auto d = slab_decompose(l.weight, s_x, small_config());
        const auto r = make_report(l.name, l.weight, d, s_x);
        EXPECT_GE(r.weighted_error, 0.0);
        EXPECT_TRUE(std::isfinite(r.unweighted_error));
        EXPECT_LE(r.cr_actual, r.cr_paper);
        EXPECT_EQ(r.k_achieved, d.sparse.nnz());

        const auto j = nlohmann::json::parse(r.to_json_line());
        EXPECT_EQ(j["layer"], l.name);
        EXPECT_EQ(j["k_achieved"], r.k_achieved);
        const auto row = r.to_csv_row();
        EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
    }
}

TEST(Pipeline, SyntheticLayersAreSeeded) {
    const auto a = synthetic_layers(7, 2, 8, 6, 10), b = synthetic_layers(7, 2, 8, 6, 10);
    const auto c = synthetic_layers(8, 2, 8, 6, 10);
    EXPECT_EQ(a[1].weight, b[1].weight);
    EXPECT_EQ(a[1].activations, b[1].activations);
    EXPECT_NE(a[0].weight, c[0].weight);
    EXPECT_EQ(a[0].name, "layer0");
}

TEST(RankSweep, ShapeOnGaussianLayer) {
    const auto l = synthetic_layers(21, 1, 64, 64, 128)[0];
    const auto s_x = column_norms(l.activations);
    CompressConfig cfg;
    cfg.cr = 0.5;
    const auto pts = rank_sweep(l.weight, s_x, cfg, {0, 1, 2});
    ASSERT_EQ(pts.size(), 3u);
    EXPECT_GT(pts[0].weighted_error, pts[1].weighted_error);
    EXPECT_GT(pts[0].weighted_error - pts[1].weighted_error, pts[1].weighted_error - pts[2].weighted_error);
}

TEST(RankSweep, RankZeroIsWanda) {
    std::mt19937_64 rng(6);
    const auto w = test::random_matrix(16, 32, rng);
    const auto s_x = test::random_vector(32, rng, 0.5, 1.5);
    CompressConfig cfg;
    cfg.cr = 0.5;
    const auto pts = rank_sweep(w, s_x, cfg, {0});
    ASSERT_EQ(pts.size(), 1u);

    const auto mask = oracle::sort_topk_mask(score(w, s_x), 1, 32, 16);
    double err = 0.0;
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 32; ++j)
            if (!mask[i * 32 + j]) err += std::pow(w(i, j) * s_x[j], 2);
    EXPECT_NEAR(pts[0].weighted_error, std::sqrt(err), 1e-12);
}

TEST(RankSweep, Errors) {
    std::mt19937_64 rng(7);
    const auto w = test::random_matrix(8, 8, rng);
    const std::vector<double> s_x(8, 1.0);
    CompressConfig cfg;
    cfg.density_override = 0.5;
    EXPECT_THROW(rank_sweep(w, s_x, cfg, {1, 2}), Error);
    EXPECT_THROW(rank_sweep(w, s_x, cfg, {0, 2, 2}), Error);
    EXPECT_THROW(rank_sweep(w, s_x, cfg, {0, 9}), Error);
    EXPECT_EQ(rank_sweep(w, s_x, cfg, {0, 8}).size(), 2u);
}

TEST(Baseline, FullRankWithoutSparseBudgetIsExact) {
    std::mt19937_64 rng(8);
    const auto w = test::random_matrix(10, 6, rng);
    const std::vector<double> s_x(6, 1.0);
    CompressConfig cfg;
    cfg.density_override = 0.0;
    cfg.iters = 1;
    const auto ref = oracle::reference_svd(w);
    for (std::size_t r : {1u, 3u, 6u}) {
        const auto base = baseline_sparse_lowrank(w, s_x, cfg, r);
        double tail = 0.0;
        for (std::size_t k = r; k < ref.sigma.size(); ++k) tail += ref.sigma[k] * ref.sigma[k];
        EXPECT_NEAR(base.report.weighted_error, std::sqrt(tail), 1e-9) << "rank " << r;
        EXPECT_FALSE(base.decomposition.binary_plane);
    }
}

TEST(Baseline, RankZeroIsWandaAtAdjustedDensity) {
    std::mt19937_64 rng(9);
    const auto w = test::random_matrix(16, 16, rng);
    const auto s_x = test::random_vector(16, rng, 0.5, 1.5);
    CompressConfig cfg;
    cfg.cr = 0.5;
    const auto base = baseline_sparse_lowrank(w, s_x, cfg, 0);
    EXPECT_EQ(base.decomposition.sparse.nnz(), 16u * 8u);
    EXPECT_NEAR(base.report.weighted_error, rank_sweep(w, s_x, cfg, {0})[0].weighted_error, 0.0);
}

TEST(Baseline, SlabBeatsSparseLowRankOnAverage) {
    CompressConfig cfg;
    cfg.cr = 0.5;
    double slab_sum = 0.0, base_sum = 0.0;
    for (const auto& l : synthetic_layers(33, 10, 64, 64, 128)) {
        const auto s_x = column_norms(l.activations);
        slab_sum += weighted_error(l.weight, slab_decompose(l.weight, s_x, cfg), s_x);
        base_sum += baseline_sparse_lowrank(l.weight, s_x, cfg, 1).report.weighted_error;
    }
    EXPECT_LE(slab_sum, base_sum);
}
