#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "ksm_cli/config.hpp"

namespace ksm::cli {

struct CommandOptions {
    fs::path config;
    std::optional<fs::path> out_root;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> checkpoint;  // analyze only
    std::ostream* log = nullptr;         // progress lines, if set
};

/// --out, else $KSM_OUT, else ./out.
[[nodiscard]] fs::path output_root(const std::optional<fs::path>& flag);

/// <root>/<config hash>/
[[nodiscard]] fs::path run_directory(const RunConfig& rc, const std::optional<fs::path>& out_root);

// Each command returns the run directory it wrote into.

/// Writes dataset.csv.
fs::path cmd_prepare(const CommandOptions& opts);

/// Writes checkpoint.json (plus one checkpoint per phase boundary),
/// trainlog.csv and reports/train.json.
fs::path cmd_train(const CommandOptions& opts);

/// Writes reports/compare.csv and reports/compare.json; trained models land
/// in checkpoints/.
fs::path cmd_compare(const CommandOptions& opts);

/// Runs the configured analyze tasks against a checkpoint.
fs::path cmd_analyze(const CommandOptions& opts);

}  // namespace ksm::cli
