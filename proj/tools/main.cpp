#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "opcalc/errors.hpp"
#include "opcalc/experiments.hpp"

namespace {

struct CommonOpts {
    std::string config;
    std::string out;
    long seed = -1;
    double tol = -1.0;
};

opcalc::RunContext build_context(const std::string& name, const CommonOpts& opts) {
    opcalc::Config cfg;
    if (!opts.config.empty()) {
        cfg = opcalc::Config::load(opts.config);
    } else {
        const std::string fallback = "configs/demo_" + name + ".cfg";
        if (std::ifstream probe(fallback); probe) cfg = opcalc::Config::load(fallback);
    }
    opcalc::RunContext ctx = opcalc::make_context(cfg);
    if (opts.seed >= 0) ctx.seed = static_cast<uint64_t>(opts.seed);
    if (opts.tol >= 0) ctx.tol = opts.tol;
    if (!opts.out.empty()) ctx.outDir = opts.out;
    return ctx;
}

int run_one(const std::string& name, const CommonOpts& opts) {
    bool allPass = false;
    const auto rows = opcalc::run_and_emit(name, build_context(name, opts), &allPass);
    size_t passed = 0;
    for (const auto& r : rows)
        if (r.pass) ++passed;
    std::printf("%s: %zu/%zu rows pass\n", name.c_str(), passed, rows.size());
    return allPass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical experiments for the semigroup functional calculus"};
    app.require_subcommand(1);

    const std::vector<std::string> names = {"thm35", "cor310", "thm44", "stability",
                                            "eta"};
    std::map<std::string, CommonOpts> opts;
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        auto& o = opts[name];
        sub->add_option("--config", o.config, "config file path");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "rng seed override");
        sub->add_option("--tol", o.tol, "pass tolerance override");
    }
    auto* all = app.add_subcommand("all", "run every experiment");
    auto& allOpts = opts["all"];
    all->add_option("--config", allOpts.config, "config file path (applied to each)");
    all->add_option("--out", allOpts.out, "output directory");
    all->add_option("--seed", allOpts.seed, "rng seed override");
    all->add_option("--tol", allOpts.tol, "pass tolerance override");

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& name : names)
            if (app.got_subcommand(name)) return run_one(name, opts[name]);
        if (app.got_subcommand("all")) {
            int status = 0;
            for (const auto& name : names)
                status |= run_one(name, opts["all"]);
            return status;
        }
    } catch (const opcalc::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
