#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rdlab/harness.hpp"

using namespace rdlab;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "rdlab_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ExperimentConfig parse_text(const std::string& text) {
    KeyValueConfig kv = KeyValueConfig::parse(text);
    return ExperimentConfig::from_config(kv);
}

} // namespace

TEST_SUITE_BEGIN("harness_cli");

TEST_CASE("config parsing: values, defaults, strictness") {
    ExperimentConfig cfg = parse_text("experiment = renorm\n"
                                      "grid.dim = 3\n"
                                      "noise.eps_list = 1, 0.5, 0.25\n"
                                      "model.lambda3 = 1.0\n"
                                      "# comment\n");
    CHECK(cfg.kind == ExperimentKind::renorm_sweep);
    CHECK(cfg.eps_list.size() == 3);
    CHECK(cfg.lambda[3] == 1.0);
    CHECK(cfg.replicas == 64); // default

    CHECK_THROWS_WITH_AS(parse_text("experiment = renorm\nnot.a.key = 1\n"),
                         doctest::Contains("unknown key"), configuration_error);
    CHECK_THROWS_AS(parse_text("experiment = bogus\n"), configuration_error);
    CHECK_THROWS_AS(parse_text("experiment = renorm\nnoise.eps_list = 0.5, 1.0\n"),
                    configuration_error);
    CHECK_THROWS_AS(parse_text("experiment = renorm\nnoise.eps_list = 2.0\n"),
                    configuration_error);
    CHECK_THROWS_AS(parse_text("experiment = renorm\nexperiment = trees\n"),
                    configuration_error);
    CHECK_THROWS_AS(KeyValueConfig::parse("keywithoutvalue\n"), configuration_error);
}

TEST_CASE("empty eps list is a validation error") {
    CHECK_THROWS_AS(parse_text("experiment = renorm\nnoise.eps_list = \n"),
                    configuration_error);
}

TEST_CASE("renorm sweep: cubic family lambda column is constant at the target") {
    ExperimentConfig cfg = parse_text("experiment = renorm\n"
                                      "grid.dim = 3\n"
                                      "noise.eps_list = 1, 0.5, 0.25\n"
                                      "model.lambda0 = 0.2\n"
                                      "model.lambda1 = -0.1\n"
                                      "model.lambda2 = 0.4\n"
                                      "model.lambda3 = 1.0\n");
    cfg.out_dir = fresh_dir("renorm");
    cfg.master_seed = 11;
    RunRecord rec = run_renorm_sweep(cfg);
    CHECK(rec.all_passed);
    CHECK(rec.summary["worst_lambda_error"] < 1e-6);
    CHECK(fs::exists(cfg.out_dir / "renorm.csv"));
    CHECK(fs::exists(cfg.out_dir / "renorm_manifest.json"));

    // byte-identical rerun
    const std::string first = read_file(cfg.out_dir / "renorm.csv");
    RunRecord rec2 = run_renorm_sweep(cfg);
    CHECK(read_file(cfg.out_dir / "renorm.csv") == first);
}

TEST_CASE("paratest run: all-pass report and determinism across workers") {
    ExperimentConfig cfg = parse_text("experiment = paratest\n"
                                      "grid.dim = 1\n"
                                      "grid.n = 64\n"
                                      "paratest.pairs = 50\n");
    cfg.out_dir = fresh_dir("paratest1");
    cfg.master_seed = 5;
    cfg.workers = 1;
    RunRecord rec = run_paratest(cfg);
    CHECK(rec.all_passed);
    const std::string csv1 = read_file(cfg.out_dir / "paratest.csv");

    cfg.out_dir = fresh_dir("paratest4");
    cfg.workers = 4;
    RunRecord rec4 = run_paratest(cfg);
    CHECK(rec4.all_passed);
    CHECK(read_file(cfg.out_dir / "paratest.csv") == csv1);
}

TEST_CASE("trees run: cubic-null check passes and CSV schema holds") {
    ExperimentConfig cfg = parse_text("experiment = trees\n"
                                      "grid.dim = 3\n"
                                      "grid.n = 16\n"
                                      "noise.eps = 1.0\n"
                                      "noise.min_cells_per_corr = 2\n"
                                      "mc.replicas = 64\n"
                                      "model.kind = cubic\n");
    cfg.out_dir = fresh_dir("trees");
    cfg.master_seed = 3;
    cfg.workers = 4;
    RunRecord rec = run_trees(cfg);
    CHECK(rec.all_passed);
    CHECK(rec.summary["cubic_null_worst"] < 1e-8);
    const std::string csv = read_file(cfg.out_dir / "tree_block_norms.csv");
    CHECK(csv.rfind("tree,eps,q,p,estimate,std_error,replicas,time", 0) == 0);
    CHECK(csv.find("\nY,") != std::string::npos);
}

TEST_CASE("simulate run: snapshot round-trip and free-field check") {
    ExperimentConfig cfg = parse_text("experiment = simulate\n"
                                      "grid.dim = 1\n"
                                      "grid.n = 64\n"
                                      "noise.eps = 1.0\n"
                                      "model.kind = linear_field\n"
                                      "sim.dt = 0.05\n"
                                      "sim.horizon = 0.5\n"
                                      "sim.save_times = 0, 0.25, 0.5\n"
                                      "sim.stability_constant = 60\n"
                                      "sim.init = sampled\n"
                                      "sim.check = free_field\n"
                                      "mc.replicas = 256\n");
    cfg.out_dir = fresh_dir("simulate");
    cfg.master_seed = 77;
    cfg.workers = 4;
    RunRecord rec = run_simulate(cfg);
    CHECK(rec.all_passed);
    FieldPath fp = read_field_path(cfg.out_dir / "trajectory.dat");
    REQUIRE(fp.size() == 3);
    CHECK(fp.times[1] == doctest::Approx(0.25));
    CHECK(all_finite(fp.frames.back()));

    // byte-identical across worker counts
    const std::string traj = read_file(cfg.out_dir / "trajectory.dat");
    cfg.out_dir = fresh_dir("simulate2");
    cfg.workers = 1;
    run_simulate(cfg);
    CHECK(read_file(cfg.out_dir / "trajectory.dat") == traj);
}

TEST_CASE("universality run: identical spec gives exactly zero differences") {
    // F vs itself under common random numbers: every moment difference is 0
    ExperimentConfig cfg = parse_text("experiment = universality\n"
                                      "grid.dim = 3\n"
                                      "grid.n = 16\n"
                                      "noise.eps = 0.5\n"
                                      "noise.min_cells_per_corr = 1\n"
                                      "model.theta = 0.0\n" // partner = same family
                                      "model.lambda3 = 1.0\n"
                                      "sim.dt = 0.01\n"
                                      "sim.horizon = 0.1\n"
                                      "mc.replicas = 16\n");
    cfg.out_dir = fresh_dir("universality");
    cfg.master_seed = 9;
    cfg.workers = 4;
    RunRecord rec = run_universality(cfg);
    CHECK(rec.all_passed);
    CHECK(rec.summary["lambda_gap"] < 1e-8);
    const std::string diffs = read_file(cfg.out_dir / "universality_diffs.csv");
    // with theta = 0 both nonlinearities are the same Hermite family up to
    // coefficient assembly; differences are pure roundoff
    std::istringstream in(diffs);
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const auto c3 = line.find(',', c2 + 1);
        const auto c4 = line.find(',', c3 + 1);
        const double diff = std::stod(line.substr(c3 + 1, c4 - c3 - 1));
        REQUIRE(std::abs(diff) < 1e-8);
    }
}

TEST_CASE("universality: second-moment gap shrinks monotonically in eps") {
    // matched pairs at four correlation scales; common random numbers make
    // the paired second-moment difference resolvable at small replica counts.
    // the trend test is Spearman at the 5% level, which for four points means
    // a perfect monotone ordering.
    const std::vector<double> eps_list{0.4, 0.3, 0.2, 0.15};
    std::vector<double> gaps;
    for (double eps : eps_list) {
        NoiseSpec spec;
        spec.eps = eps;
        spec.min_cells_per_corr = 0.35;
        CovarianceModel model(spec, 3, Grid(3, 16));
        detail::MatchedPair mp =
            detail::matched_universality_pair({0, 0, 0, 1}, 0.45, model);
        SimConfig a;
        a.grid = Grid(3, 16);
        a.noise = spec;
        a.model = ModelKind::mesoscopic_general;
        a.nonlinearity = mp.a;
        a.dt = 0.025;
        a.horizon = 0.25;
        SimConfig b = a;
        b.nonlinearity = mp.b;
        Field phi(a.grid);
        for (std::size_t i = 0; i < phi.size(); ++i)
            phi.values[i] = std::cos(a.grid.site(i)[0]);
        const int replicas = 192;
        std::vector<double> d2(replicas);
        parallel_for_index(replicas, 1, [&](std::size_t r) {
            auto [pa, pb] = simulate_pair(a, b, RngStream(606, r), {a.horizon});
            const double xa = pair_with_test_function(pa.frames.back(), phi);
            const double xb = pair_with_test_function(pb.frames.back(), phi);
            d2[r] = xa * xa - xb * xb;
        });
        MeanSE ms = mean_and_se(d2);
        gaps.push_back(std::abs(ms.mean));
    }
    MESSAGE("second-moment gaps along eps: ", gaps[0], " ", gaps[1], " ", gaps[2], " ",
            gaps[3]);
    for (std::size_t i = 1; i < gaps.size(); ++i) REQUIRE(gaps[i] < gaps[i - 1]);
}

TEST_CASE("config hash feeds the manifest and responds to the seed") {
    ExperimentConfig a = parse_text("experiment = paratest\ngrid.dim = 1\ngrid.n = 64\n");
    ExperimentConfig b = a;
    b.master_seed = 2;
    CHECK(a.config_hash() != b.config_hash());
}

TEST_SUITE_END();
