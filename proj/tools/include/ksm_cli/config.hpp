#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ksm/data.hpp"
#include "ksm/kernels.hpp"
#include "ksm/training.hpp"

namespace ksm::cli {

namespace fs = std::filesystem;

struct DatasetSpec {
    std::string kind;  // half_moons | idx | csv
    // half_moons
    Index count = 1600;
    double noise_std = 0.1;
    std::uint64_t seed = 0;
    // idx
    fs::path images;
    std::optional<fs::path> labels;
    int crop = 4;
    Index subsample = 2000;
    bool full_scale = false;
    // csv
    fs::path path;
};

struct ModelSpec {
    Index neurons = 16;
    bool homogeneous = false;
};

struct CompareSpec {
    std::vector<Index> dims;
    std::vector<std::string> methods;
    std::vector<std::uint64_t> seeds{0};
};

struct ClassifySpec {
    std::vector<int> labels_per_class{1, 3, 10, 30, 100};
    std::vector<double> weight_decays{1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    double test_fraction = 0.25;
};

struct AnalyzeSpec {
    std::vector<std::string> tasks;
    int bins = 50;
    int n_init = 100;
    std::uint64_t seed = 0;
    ClassifySpec classify;
};

/// A fully validated run description. `raw` is the effective JSON (after the
/// seed override) and `hash` its FNV-1a digest.
struct RunConfig {
    nlohmann::json raw;
    std::string hash;
    DatasetSpec dataset;
    Kernel kernel = Kernel::linear();
    ModelSpec model;
    TrainConfig training;
    std::optional<CompareSpec> compare;
    std::optional<AnalyzeSpec> analyze;
};

inline const std::vector<std::string> kCompareMethods{"hebbian",        "nystrom_uniform", "nystrom_kmeans",
                                                      "nystrom_learned", "rff",             "kernel_pca"};
inline const std::vector<std::string> kAnalyzeTasks{"spectrum", "histogram", "rfields",
                                                    "cluster",  "classify",  "pca"};

/// 16 hex digits of FNV-1a 64 over the compact dump of `j`.
[[nodiscard]] std::string config_hash(const nlohmann::json& j);

/// Relative dataset paths are resolved against `base_dir`.
[[nodiscard]] RunConfig parse_config(nlohmann::json j, const fs::path& base_dir,
                                     std::optional<std::uint64_t> seed_override = std::nullopt);

[[nodiscard]] RunConfig load_config(const fs::path& path,
                                    std::optional<std::uint64_t> seed_override = std::nullopt);

[[nodiscard]] Dataset load_dataset(const DatasetSpec& spec);

}  // namespace ksm::cli
