#include "ksm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <openssl/evp.h>

#include "ksm/csv.hpp"

namespace ksm {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        v = __builtin_bswap64(v);
    }
    return v;
}

std::string encode_matrix(const Matrix& M) {
    const RowMajor rm = M;
    return encode_doubles(rm.data(), static_cast<std::size_t>(rm.size()));
}

Matrix decode_matrix(const nlohmann::json& j, const char* key, Index rows, Index cols) {
    const auto values = decode_doubles(j.at(key).get<std::string>());
    if (static_cast<Index>(values.size()) != rows * cols) {
        throw Error(ErrorCode::Format, std::string("checkpoint: field '") + key + "' holds " +
                                           std::to_string(values.size()) + " values, expected " +
                                           std::to_string(rows * cols));
    }
    return Eigen::Map<const RowMajor>(values.data(), rows, cols);
}

void check_format(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", std::string{}) != kCheckpointFormat) {
        throw Error(ErrorCode::Format, std::string("checkpoint: expected format '") + kCheckpointFormat + "'");
    }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto out = csv::open(path);
    out << j.dump(2) << '\n';
}

}  // namespace

std::string encode_doubles(const double* data, std::size_t count) {
    std::string raw(count * sizeof(double), '\0');
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(data[i]));
        std::memcpy(raw.data() + i * sizeof(double), &bits, sizeof bits);
    }
    std::string out(4 * ((raw.size() + 2) / 3), '\0');
    const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                        reinterpret_cast<const unsigned char*>(raw.data()),
                                        static_cast<int>(raw.size()));
    out.resize(static_cast<std::size_t>(written));
    return out;
}

std::vector<double> decode_doubles(const std::string& text) {
    if (text.size() % 4 != 0) {
        throw Error(ErrorCode::Format, "base64 payload length is not a multiple of 4");
    }
    std::string raw(3 * (text.size() / 4), '\0');
    const int written = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(raw.data()),
                                        reinterpret_cast<const unsigned char*>(text.data()),
                                        static_cast<int>(text.size()));
    if (written < 0) {
        throw Error(ErrorCode::Format, "invalid base64 payload");
    }
    // EVP_DecodeBlock counts padding bytes as output.
    std::size_t bytes = static_cast<std::size_t>(written);
    for (auto it = text.rbegin(); it != text.rend() && *it == '='; ++it) {
        --bytes;
    }
    if (bytes % sizeof(double) != 0) {
        throw Error(ErrorCode::Format, "base64 payload is not a whole number of float64 values");
    }
    std::vector<double> out(bytes / sizeof(double));
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, raw.data() + i * sizeof(double), sizeof bits);
        out[i] = std::bit_cast<double>(to_little_endian(bits));
    }
    return out;
}

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt) {
    const ModelState& s = ckpt.state;
    nlohmann::json j;
    j["format"] = kCheckpointFormat;
    j["N"] = s.neurons();
    j["M"] = s.input_dim();
    j["lambda"] = s.lambda;
    j["kernel"] = kernel_to_json(s.kernel);
    j["W"] = encode_matrix(s.W);
    j["q"] = encode_doubles(s.q.data(), static_cast<std::size_t>(s.q.size()));
    j["L"] = encode_matrix(s.L);
    j["seed_history"] = ckpt.seed_history;
    j["config_hash"] = ckpt.config_hash;
    if (ckpt.landmark_source) {
        j["source"] = to_string(*ckpt.landmark_source);
    }
    return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    check_format(j);
    try {
        Checkpoint c;
        const Index n = j.at("N").get<Index>();
        const Index m = j.at("M").get<Index>();
        c.state.kernel = kernel_from_json(j.at("kernel"));
        c.state.lambda = j.at("lambda").get<double>();
        c.state.W = decode_matrix(j, "W", n, m);
        c.state.q = decode_matrix(j, "q", n, 1);
        c.state.L = decode_matrix(j, "L", n, n);
        c.seed_history = j.value("seed_history", std::vector<std::uint64_t>{});
        c.config_hash = j.value("config_hash", std::string{});
        if (j.contains("source")) {
            c.landmark_source = landmark_source_from_string(j["source"].get<std::string>());
        }
        c.state.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_json(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open checkpoint '" + path.string() + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, "checkpoint '" + path.string() + "': " + e.what());
    }
    return checkpoint_from_json(j);
}

nlohmann::json landmarks_to_json(const LandmarkSet& set, const Kernel& kernel) {
    nlohmann::json j;
    j["format"] = kCheckpointFormat;
    j["N"] = set.W.rows();
    j["M"] = set.W.cols();
    j["kernel"] = kernel_to_json(kernel);
    j["W"] = encode_matrix(set.W);
    j["source"] = to_string(set.source);
    return j;
}

LandmarkSet landmarks_from_json(const nlohmann::json& j) {
    check_format(j);
    try {
        LandmarkSet set;
        set.W = decode_matrix(j, "W", j.at("N").get<Index>(), j.at("M").get<Index>());
        set.source = landmark_source_from_string(j.at("source").get<std::string>());
        return set;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, std::string("landmarks: ") + e.what());
    }
}

}  // namespace ksm
