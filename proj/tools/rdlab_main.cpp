// Command-line driver: experiment subcommands over the library runners.
// Exit codes: 0 all checks pass, 2 validation error, 3 numerical failure,
// 4 invariant violation.

#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "rdlab/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    int workers = 1;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "experiment config file")->required();
    sub->add_option("--seed", args.seed, "master seed (U64)");
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--workers", args.workers, "worker threads");
}

int run(rdlab::ExperimentKind kind, const CommonArgs& args) {
    rdlab::KeyValueConfig kv = rdlab::KeyValueConfig::load(args.config_path);
    rdlab::ExperimentConfig cfg = rdlab::ExperimentConfig::from_config(kv);
    if (cfg.kind != kind)
        throw rdlab::configuration_error(
            "config 'experiment' key does not match the subcommand");
    cfg.master_seed = args.seed;
    cfg.out_dir = args.out_dir;
    cfg.workers = args.workers;
    rdlab::RunRecord rec = rdlab::run_experiment(cfg);
    std::printf("%s: %s (config %016llx)\n",
                args.config_path.c_str(),
                rec.all_passed ? "all checks passed" : "INVARIANT FAILURES",
                static_cast<unsigned long long>(rec.config_hash));
    for (const auto& f : rec.failures) std::printf("  failed: %s\n", f.c_str());
    for (const auto& [k, v] : rec.summary) std::printf("  %s = %.6g\n", k.c_str(), v);
    return rec.all_passed ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for weakly nonlinear stochastic "
                 "reaction-diffusion models"};
    app.require_subcommand(1);

    std::map<std::string, rdlab::ExperimentKind> kinds{
        {"renorm", rdlab::ExperimentKind::renorm_sweep},
        {"trees", rdlab::ExperimentKind::trees},
        {"universality", rdlab::ExperimentKind::universality},
        {"paratest", rdlab::ExperimentKind::paratest},
        {"simulate", rdlab::ExperimentKind::simulate},
    };
    std::map<std::string, CommonArgs> args;
    for (auto& [name, kind] : kinds) {
        CLI::App* sub = app.add_subcommand(name, name + " experiment");
        add_common(sub, args[name]);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto& [name, kind] : kinds)
            if (app.got_subcommand(name)) return run(kind, args[name]);
        return 2;
    } catch (const rdlab::configuration_error& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const rdlab::numerical_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
