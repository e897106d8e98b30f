#include <iostream>

#include <CLI11.hpp>

#include "rtlab/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Return- and hitting-time statistics experiments"};
    app.require_subcommand(1);

    std::string config, out;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool no_timestamp = false;
    for (const char* name : {"simulate", "transform", "laws", "verify", "scaling"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides config)");
        sub->add_option("--seed", seed, "seed (overrides config)");
        sub->add_option("--threads", threads, "worker threads, 0 = all cores (overrides config)");
        sub->add_flag("--no-timestamp", no_timestamp, "omit the generation time from report.txt");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : rtlab::kExitError;
    }

    try {
        const auto* sub = app.get_subcommands().front();
        auto cfg = rtlab::load_config(config);
        if (sub->count("--seed")) cfg.seed = seed;
        if (sub->count("--threads")) cfg.threads = threads;
        rtlab::RunOptions opt;
        opt.out_dir = out;
        opt.timestamp = !no_timestamp;
        const int rc = rtlab::run(rtlab::parse_subcommand(sub->get_name()), cfg, opt, std::cerr);
        std::cout << sub->get_name() << ": " << (rc == rtlab::kExitPass ? "pass" : "tolerance failure") << " (report in "
                  << (out.empty() ? cfg.output : out) << "/report.txt)\n";
        return rc;
    } catch (const rtlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return rtlab::kExitError;
}
