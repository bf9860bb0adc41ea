#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ksm/baselines.hpp"
#include "ksm/model.hpp"

namespace ksm {

inline constexpr const char* kCheckpointFormat = "ksm-checkpoint/1";

/// Little-endian float64 payload, base64 encoded.
[[nodiscard]] std::string encode_doubles(const double* data, std::size_t count);
[[nodiscard]] std::vector<double> decode_doubles(const std::string& text);

struct Checkpoint {
    ModelState state;
    std::vector<std::uint64_t> seed_history;
    std::string config_hash;
    std::optional<LandmarkSource> landmark_source;
};

/// Matrices are stored row-major.
[[nodiscard]] nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
[[nodiscard]] Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Landmarks use the checkpoint schema with only W and the source recorded.
[[nodiscard]] nlohmann::json landmarks_to_json(const LandmarkSet& set, const Kernel& kernel);
[[nodiscard]] LandmarkSet landmarks_from_json(const nlohmann::json& j);

}  // namespace ksm
