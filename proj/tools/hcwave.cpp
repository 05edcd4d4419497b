// hcwave: hierarchical boundary control of the wave equation on an expanding interval.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hcw/commands.hpp"
#include "hcw/run_config.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::string level = "fast";
    std::vector<double> ks;
};

hcw::RunConfig load(const Options& o) {
    hcw::RunConfig rc = o.config.empty() ? hcw::parse_run_config("{}") : hcw::load_run_config(o.config);
    if (o.seed) rc.seed = *o.seed;
    return rc;
}

std::filesystem::path out_dir(const Options& o, const hcw::RunConfig& rc) {
    return o.out.empty() ? std::filesystem::path(rc.output_dir) : std::filesystem::path(o.out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hcwave: Stackelberg-Nash boundary control of the wave equation on (0, 1 + k t)"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config,-c", o.config, "JSON run configuration");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out,-o", o.out, "output directory (overrides output.dir)");
        sub->add_option("--seed", o.seed, "seed override");
    };

    auto* simulate = app.add_subcommand("simulate", "forward wave solve with a prescribed boundary control");
    add_common(simulate, true);
    auto* nash = app.add_subcommand("nash", "follower Nash equilibrium for a given leader control");
    add_common(nash, true);
    auto* leader = app.add_subcommand("leader", "leader control by minimizing the dual functional");
    add_common(leader, true);
    auto* verify = app.add_subcommand("verify", "run the oracle verification suite");
    verify->add_option("--level", o.level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
    verify->add_option("--seed", o.seed, "seed for the randomized checks");
    verify->add_option("--out,-o", o.out, "output directory");
    auto* threshold = app.add_subcommand("threshold", "minimal control time T_min(k)");
    threshold->add_option("--k", o.ks, "expansion rates")->expected(1, -1);
    add_common(threshold, false);
    auto* sweep = app.add_subcommand("sweep", "parameter sweep over k, T, sigma and target radius");
    add_common(sweep, true);
    sweep->add_option("--workers,-j", o.workers, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hcw::kExitConfig;
    }

    return hcw::run_guarded(
        [&]() -> int {
            if (*verify) {
                return hcw::cmd_verify(hcw::verify_level_from_string(o.level), o.seed.value_or(12345),
                                       o.out.empty() ? "out" : o.out, std::cout);
            }
            const hcw::RunConfig rc = load(o);
            const auto out = out_dir(o, rc);
            if (*simulate) return hcw::cmd_simulate(rc, out, std::cout);
            if (*nash) return hcw::cmd_nash(rc, out, std::cout);
            if (*leader) return hcw::cmd_leader(rc, out, std::cout);
            if (*threshold) {
                std::vector<double> ks = o.ks.empty() ? rc.threshold_k : o.ks;
                if (ks.empty()) ks = {1e-4, 0.1, 0.5};
                return hcw::cmd_threshold(ks, o.out.empty() && o.config.empty() ? "" : out, std::cout);
            }
            return hcw::cmd_sweep(rc, out, o.workers, std::cout);
        },
        std::cerr);
}
