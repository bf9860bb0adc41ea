// ksm: train, compare and analyze kernel similarity matching runs from a JSON config.

#include <iostream>

#include <CLI11.hpp>

#include "ksm/parallel.hpp"
#include "ksm_cli/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Kernel similarity matching experiments"};
    app.require_subcommand(1);

    ksm::cli::CommandOptions opts;
    opts.log = &std::cout;
    std::string config, out, checkpoint;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "Output root (default: $KSM_OUT or ./out)");
        sub->add_option("--seed", seed, "Override every run seed");
        sub->add_option("--threads", threads, "Cap on worker threads (0 = hardware)");
    };
    auto* prepare = app.add_subcommand("prepare", "Export the configured dataset as CSV");
    auto* train = app.add_subcommand("train", "Train a network and write checkpoint + log");
    auto* compare = app.add_subcommand("compare", "Sweep approximation methods over dimensionalities");
    auto* analyze = app.add_subcommand("analyze", "Run analysis tasks on a checkpoint");
    for (auto* sub : {prepare, train, compare, analyze}) common(sub);
    analyze->add_option("--checkpoint", checkpoint, "Checkpoint (default: <run dir>/checkpoint.json)")
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    opts.config = config;
    if (!out.empty()) opts.out_root = out;
    if (!checkpoint.empty()) opts.checkpoint = checkpoint;
    for (auto* sub : {prepare, train, compare, analyze}) {
        if (sub->count("--seed")) opts.seed = seed;
    }
    if (threads > 0) ksm::set_max_threads(threads);

    try {
        std::filesystem::path dir;
        if (*prepare) dir = ksm::cli::cmd_prepare(opts);
        if (*train) dir = ksm::cli::cmd_train(opts);
        if (*compare) dir = ksm::cli::cmd_compare(opts);
        if (*analyze) dir = ksm::cli::cmd_analyze(opts);
        std::cout << "wrote " << dir.string() << '\n';
    } catch (const ksm::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        const bool config_error =
            e.code() == ksm::ErrorCode::InvalidConfig || e.code() == ksm::ErrorCode::InvalidArgument;
        return config_error ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
