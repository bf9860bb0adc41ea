#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ksm/types.hpp"

namespace ksm {

using Rng = std::mt19937_64;

/// Inputs as rows of X (T x M) with optional integer class labels.
struct Dataset {
    Matrix X;
    std::optional<std::vector<int>> labels;
    std::string name;

    [[nodiscard]] Index size() const noexcept { return X.rows(); }
    [[nodiscard]] Index dim() const noexcept { return X.cols(); }

    /// Throws if the invariants (non-empty, finite, label count) do not hold.
    void validate() const;

    /// Rows selected by `indices`, in that order, with matching labels.
    [[nodiscard]] Dataset subset(const std::vector<Index>& indices) const;
};

/// Two interleaving unit half circles. The upper moon is (cos t, sin t), the
/// lower one (1 - cos t, 0.5 - sin t), with t on an evenly spaced grid over
/// [0, pi] and i.i.d. Gaussian noise of std `noise_std` on every coordinate.
/// Upper moon rows come first and carry label 0; an odd count gives the upper
/// moon the extra point.
[[nodiscard]] Dataset make_half_moons(Index count, double noise_std, std::uint64_t seed);

/// Reads an IDX image file (magic 0x00000803), optionally with a label file
/// (0x00000801). Files may be gzip-compressed. Each image is center-cropped by
/// `crop` pixels per side, flattened row-major and scaled to [0, 1].
[[nodiscard]] Dataset load_idx_images(const std::filesystem::path& images_path,
                                      const std::optional<std::filesystem::path>& labels_path,
                                      int crop);

/// Writes raw uint8 images (count x rows x cols) in IDX format, uncompressed.
void write_idx_images(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

/// CSV with header `x0,...,x{M-1},label`; the label column is written only
/// when labels are present.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& d);
[[nodiscard]] Dataset read_dataset_csv(const std::filesystem::path& path);

/// `count` distinct row indices drawn uniformly from [0, population).
[[nodiscard]] std::vector<Index> sample_without_replacement(Index population, Index count, Rng& rng);

/// Minibatch of distinct rows drawn uniformly; deterministic given `rng`.
[[nodiscard]] Matrix sample_minibatch(const Dataset& d, Index batch_size, Rng& rng);

/// Deterministic random subset of `count` rows (count >= size returns a copy).
[[nodiscard]] Dataset subsample(const Dataset& d, Index count, std::uint64_t seed);

}  // namespace ksm
