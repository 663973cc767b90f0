#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "slab/bytes.hpp"
#include "slab/pipeline.hpp"
#include "slab/slabfmt.hpp"
#include "slab/tensorfile.hpp"

namespace fs = std::filesystem;
using namespace slab;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

// Runs the CLI with stdout captured and stderr sent to a file.
Run run_cli(const std::string& args, const fs::path& dir) {
    const fs::path err_file = dir / "stderr.txt";
    const std::string cmd = std::string(SLAB_CLI_PATH) + " " + args + " 2>" + err_file.string();
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(err_file);
    std::stringstream ss;
    ss << f.rdbuf();
    r.err = ss.str();
    return r;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("slab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string p(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

std::size_t count_lines(const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_F(Cli, OneLayerManifest) {
    std::mt19937_64 rng(1);
    TensorFileWriter tw;
    auto w = gaussian_matrix(32, 32, rng);
    for (auto& x : w.data()) x = static_cast<float>(x);
    tw.add("fc.weight", w);
    tw.add("calib", gaussian_matrix(64, 32, rng));
    tw.write(p("model.sltn"));
    std::ofstream(p("model.json")) << R"({"tensor_file": "model.sltn",
        "input_spec": {"d_in": 32, "calibration_ref": "calib"},
        "layers": [{"name": "fc", "kind": "linear", "d_out": 32, "d_in": 32, "weight_ref": "fc.weight"}]})";
    const auto before = read_file(p("model.sltn"));

    const auto r = run_cli("decompose --manifest " + p("model.json") + " --out " + p("out"), dir_);
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count_lines(r.out), 1u);
    EXPECT_NE(r.out.find("\"layer\":\"fc\""), std::string::npos);
    EXPECT_TRUE(fs::exists(p("out/fc.slab")));
    EXPECT_EQ(std::distance(fs::directory_iterator(p("out")), fs::directory_iterator{}), 2);
    const auto d = unpack(read_file(p("out/fc.slab")));
    EXPECT_EQ(d.d_out, 32u);
    EXPECT_EQ(read_file(p("model.sltn")), before);

    const auto csv = run_cli("decompose --manifest " + p("model.json") + " --out " + p("csv") + " --report csv", dir_);
    EXPECT_EQ(csv.code, 0) << csv.err;
    EXPECT_EQ(count_lines(csv.out), 2u);
    EXPECT_TRUE(fs::exists(p("csv/report.csv")));

    const auto off = run_cli("decompose --manifest " + p("model.json") + " --mode offline --out " + p("off"), dir_);
    EXPECT_EQ(off.code, 2) << off.err;
    EXPECT_NE(off.err.find("fc.act"), std::string::npos);
}

TEST_F(Cli, InfeasibleBudgetExitsFour) {
    const auto r = run_cli("decompose --d-out 8 --d-in 8 --cr 0.95 --out " + p("out"), dir_);
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.err.find("kind=infeasible_budget"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("retained density"), std::string::npos) << r.err;
    EXPECT_EQ(count_lines(r.err), 1u);
    EXPECT_FALSE(fs::exists(p("out")));
}

TEST_F(Cli, ConfigErrorsExitTwo) {
    EXPECT_EQ(run_cli("decompose --bogus", dir_).code, 2);
    EXPECT_EQ(run_cli("decompose --cr 1.5 --out " + p("o"), dir_).code, 2);
    EXPECT_EQ(run_cli("decompose --nm 2-4 --out " + p("o"), dir_).code, 2);
    EXPECT_EQ(run_cli("decompose --mode later", dir_).code, 2);
    EXPECT_EQ(run_cli("decompose --report xml", dir_).code, 2);
    EXPECT_EQ(run_cli("frobnicate", dir_).code, 2);
    EXPECT_FALSE(fs::exists(p("o")));
}

TEST_F(Cli, IoErrorsExitThree) {
    const auto r = run_cli("decompose --manifest " + p("missing.json"), dir_);
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("kind=io"), std::string::npos) << r.err;
    std::ofstream(p("junk.slab")) << "not a slab file at all";
    const auto u = run_cli("unpack --in " + p("junk.slab") + " --out " + p("u"), dir_);
    EXPECT_EQ(u.code, 3);
    EXPECT_NE(u.err.find("kind=bad_magic"), std::string::npos) << u.err;
}

TEST_F(Cli, DeterministicOutputs) {
    const std::string args = "decompose --layers 2 --d-out 32 --d-in 64 --seed 5 --out ";
    ASSERT_EQ(run_cli(args + p("a"), dir_).code, 0);
    ASSERT_EQ(run_cli(args + p("b"), dir_).code, 0);
    for (const char* f : {"layer0.slab", "layer1.slab", "report.jsonl"})
        EXPECT_EQ(read_file(p(std::string("a/") + f)), read_file(p(std::string("b/") + f))) << f;
    ASSERT_EQ(run_cli("decompose --layers 2 --d-out 32 --d-in 64 --seed 6 --out " + p("c"), dir_).code, 0);
    EXPECT_NE(read_file(p("a/layer0.slab")), read_file(p("c/layer0.slab")));
}

TEST_F(Cli, NmOutputRespectsPattern) {
    ASSERT_EQ(run_cli("decompose --layers 1 --nm 2:4 --out " + p("o"), dir_).code, 0);
    const auto d = unpack(read_file(p("o/layer0.slab")));
    for (std::size_t r = 0; r < d.d_out; ++r)
        for (std::size_t c0 = 0; c0 < d.d_in; c0 += 4) {
            int n = 0;
            for (std::size_t c = c0; c < c0 + 4; ++c) n += d.sparse.mask().test(r, c);
            EXPECT_LE(n, 2);
        }
}

TEST_F(Cli, PackUnpackRoundTrip) {
    ASSERT_EQ(run_cli("decompose --layers 1 --d-out 16 --d-in 24 --out " + p("a"), dir_).code, 0);
    const auto u = run_cli("unpack --in " + p("a/layer0.slab") + " --out " + p("t"), dir_);
    ASSERT_EQ(u.code, 0) << u.err;
    const auto tf = TensorFile::load(p("t/layer0.sltn"));
    for (const char* e : {"layer0.mask", "layer0.w_s", "layer0.u", "layer0.v", "layer0.b", "layer0.w_hat"})
        EXPECT_TRUE(tf.contains(e)) << e;
    const auto pk = run_cli("pack --tensors " + p("t/layer0.sltn") + " --name layer0 --out " + p("p"), dir_);
    ASSERT_EQ(pk.code, 0) << pk.err;
    EXPECT_EQ(read_file(p("a/layer0.slab")), read_file(p("p/layer0.slab")));
    EXPECT_EQ(run_cli("pack --tensors " + p("t/layer0.sltn") + " --name nope --out " + p("p"), dir_).code, 2);
}

TEST_F(Cli, MatvecBench) {
    ASSERT_EQ(run_cli("decompose --layers 1 --out " + p("a"), dir_).code, 0);
    const auto ok = run_cli("matvec-bench --in " + p("a/layer0.slab") + " --reps 2 --vectors 20", dir_);
    EXPECT_EQ(ok.code, 0) << ok.err;
    EXPECT_NE(ok.out.find("serial_us"), std::string::npos);
    EXPECT_NE(ok.out.find("dense_us"), std::string::npos);
    EXPECT_NE(ok.out.find("max_rel_dev"), std::string::npos);

    const auto strict = run_cli("matvec-bench --layers 2 --reps 1 --vectors 5 --tolerance 0", dir_);
    EXPECT_EQ(strict.code, 1);
    EXPECT_NE(strict.err.find("layer=layer"), std::string::npos) << strict.err;
}

TEST_F(Cli, SweepRankIsMonotoneOnDefaultSuite) {
    const auto r = run_cli("sweep-rank --report csv --out " + p("s"), dir_);
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "rank,avg_weighted_error,layers");
    std::vector<double> errs;
    while (std::getline(in, line)) errs.push_back(std::stod(line.substr(line.find(',') + 1)));
    ASSERT_EQ(errs.size(), 4u);
    for (std::size_t i = 1; i < errs.size(); ++i) EXPECT_LE(errs[i], errs[i - 1]);
    EXPECT_TRUE(fs::exists(p("s/rank_sweep.csv")));
}

TEST_F(Cli, OracleCheck) {
    const auto r = run_cli("oracle-check", dir_);
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
}
