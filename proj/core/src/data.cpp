#include "ksm/data.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <zlib.h>

#include "ksm/csv.hpp"

namespace ksm {

void Dataset::validate() const {
    if (X.rows() < 1 || X.cols() < 1) {
        throw Error(ErrorCode::InvalidArgument, "dataset '" + name + "': empty input matrix");
    }
    if (!X.allFinite()) {
        throw Error(ErrorCode::NonFinite, "dataset '" + name + "': non-finite entries");
    }
    if (labels && static_cast<Index>(labels->size()) != X.rows()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "dataset '" + name + "': label count does not match row count");
    }
}

Dataset Dataset::subset(const std::vector<Index>& indices) const {
    Dataset out;
    out.name = name;
    out.X.resize(static_cast<Index>(indices.size()), X.cols());
    if (labels) {
        out.labels.emplace();
        out.labels->reserve(indices.size());
    }
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const Index src = indices[r];
        if (src < 0 || src >= X.rows()) {
            throw Error(ErrorCode::InvalidArgument, "dataset subset: row index out of range");
        }
        out.X.row(static_cast<Index>(r)) = X.row(src);
        if (labels) {
            out.labels->push_back((*labels)[static_cast<std::size_t>(src)]);
        }
    }
    return out;
}

Dataset make_half_moons(Index count, double noise_std, std::uint64_t seed) {
    if (count < 2) {
        throw Error(ErrorCode::InvalidArgument, "make_half_moons: count must be at least 2");
    }
    if (!(noise_std >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "make_half_moons: noise_std must be non-negative");
    }
    const Index upper = (count + 1) / 2;
    const Index lower = count - upper;
    auto angle = [](Index k, Index n) {
        return n == 1 ? 0.0 : std::numbers::pi * static_cast<double>(k) / static_cast<double>(n - 1);
    };

    Dataset d;
    d.name = "half_moons";
    d.X.resize(count, 2);
    d.labels.emplace(static_cast<std::size_t>(count), 0);
    for (Index k = 0; k < upper; ++k) {
        const double t = angle(k, upper);
        d.X.row(k) << std::cos(t), std::sin(t);
    }
    for (Index k = 0; k < lower; ++k) {
        const double t = angle(k, lower);
        d.X.row(upper + k) << 1.0 - std::cos(t), 0.5 - std::sin(t);
        (*d.labels)[static_cast<std::size_t>(upper + k)] = 1;
    }
    if (noise_std > 0.0) {
        Rng rng(seed);
        std::normal_distribution<double> noise(0.0, noise_std);
        for (Index i = 0; i < d.X.rows(); ++i) {
            for (Index j = 0; j < d.X.cols(); ++j) {
                d.X(i, j) += noise(rng);
            }
        }
    }
    return d;
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

// gzread reads uncompressed files transparently.
class GzReader {
public:
    explicit GzReader(const std::filesystem::path& path) : path_(path.string()) {
        file_ = gzopen(path_.c_str(), "rb");
        if (file_ == nullptr) {
            throw Error(ErrorCode::Io, "cannot open '" + path_ + "'");
        }
    }
    GzReader(const GzReader&) = delete;
    GzReader& operator=(const GzReader&) = delete;
    ~GzReader() { gzclose(file_); }

    void read(void* dst, std::size_t bytes) {
        auto* out = static_cast<unsigned char*>(dst);
        while (bytes > 0) {
            const auto chunk = static_cast<unsigned>(std::min<std::size_t>(bytes, 1u << 30));
            const int got = gzread(file_, out, chunk);
            if (got <= 0) {
                throw Error(ErrorCode::Format, "'" + path_ + "': truncated file");
            }
            out += got;
            bytes -= static_cast<std::size_t>(got);
        }
    }

    std::uint32_t read_be32() {
        unsigned char b[4];
        read(b, 4);
        return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
               (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
    }

private:
    std::string path_;
    gzFile file_ = nullptr;
};

void put_be32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                       static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(b, 4);
}

std::string hex(std::uint32_t v) {
    std::ostringstream s;
    s << "0x" << std::hex << v;
    return s.str();
}

}  // namespace

Dataset load_idx_images(const std::filesystem::path& images_path,
                        const std::optional<std::filesystem::path>& labels_path, int crop) {
    if (crop < 0) {
        throw Error(ErrorCode::InvalidArgument, "load_idx_images: crop must be non-negative");
    }
    GzReader images(images_path);
    const std::uint32_t magic = images.read_be32();
    if (magic != kImageMagic) {
        throw Error(ErrorCode::Format, "'" + images_path.string() + "': bad image magic " + hex(magic));
    }
    const std::uint32_t count = images.read_be32();
    const std::uint32_t rows = images.read_be32();
    const std::uint32_t cols = images.read_be32();
    const long out_rows = static_cast<long>(rows) - 2L * crop;
    const long out_cols = static_cast<long>(cols) - 2L * crop;
    if (out_rows <= 0 || out_cols <= 0) {
        throw Error(ErrorCode::InvalidArgument, "load_idx_images: crop " + std::to_string(crop) +
                                                    " leaves no pixels of a " + std::to_string(rows) +
                                                    "x" + std::to_string(cols) + " image");
    }

    std::vector<unsigned char> raw(static_cast<std::size_t>(rows) * cols);
    Dataset d;
    d.name = images_path.filename().string();
    d.X.resize(count, out_rows * out_cols);
    for (std::uint32_t n = 0; n < count; ++n) {
        images.read(raw.data(), raw.size());
        Index col = 0;
        for (long r = crop; r < crop + out_rows; ++r) {
            for (long c = crop; c < crop + out_cols; ++c) {
                d.X(n, col++) = raw[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)] / 255.0;
            }
        }
    }

    if (labels_path) {
        GzReader labels(*labels_path);
        const std::uint32_t lmagic = labels.read_be32();
        if (lmagic != kLabelMagic) {
            throw Error(ErrorCode::Format,
                        "'" + labels_path->string() + "': bad label magic " + hex(lmagic));
        }
        const std::uint32_t lcount = labels.read_be32();
        if (lcount != count) {
            throw Error(ErrorCode::DimensionMismatch,
                        "load_idx_images: " + std::to_string(count) + " images but " +
                            std::to_string(lcount) + " labels");
        }
        std::vector<unsigned char> lab(lcount);
        labels.read(lab.data(), lab.size());
        d.labels.emplace(lab.begin(), lab.end());
    }
    return d;
}

void write_idx_images(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols) {
    if (pixels.size() != static_cast<std::size_t>(count) * rows * cols) {
        throw Error(ErrorCode::DimensionMismatch, "write_idx_images: pixel count mismatch");
    }
    auto out = csv::open(path);
    put_be32(out, kImageMagic);
    put_be32(out, count);
    put_be32(out, rows);
    put_be32(out, cols);
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
    auto out = csv::open(path);
    put_be32(out, kLabelMagic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& d) {
    auto out = csv::open(path);
    for (Index j = 0; j < d.dim(); ++j) {
        out << (j ? "," : "") << 'x' << j;
    }
    if (d.labels) {
        out << ",label";
    }
    out << '\n';
    for (Index i = 0; i < d.size(); ++i) {
        for (Index j = 0; j < d.dim(); ++j) {
            out << (j ? "," : "") << csv::format(d.X(i, j));
        }
        if (d.labels) {
            out << ',' << (*d.labels)[static_cast<std::size_t>(i)];
        }
        out << '\n';
    }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    }
    std::string line;
    do {
        if (!std::getline(in, line)) {
            throw Error(ErrorCode::Format, "'" + path.string() + "': missing header");
        }
    } while (line.starts_with("#"));
    const auto header = csv::split(line);
    const bool has_label = !header.empty() && header.back() == "label";
    const std::size_t features = header.size() - (has_label ? 1 : 0);
    for (std::size_t j = 0; j < features; ++j) {
        if (header[j] != "x" + std::to_string(j)) {
            throw Error(ErrorCode::Format, "'" + path.string() + "': unexpected column '" + header[j] + "'");
        }
    }

    std::vector<double> values;
    std::vector<int> labels;
    Index rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = csv::split(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::Format, "'" + path.string() + "': row " + std::to_string(rows + 1) +
                                               " has " + std::to_string(fields.size()) + " fields");
        }
        try {
            for (std::size_t j = 0; j < features; ++j) {
                values.push_back(std::stod(fields[j]));
            }
            if (has_label) {
                labels.push_back(std::stoi(fields.back()));
            }
        } catch (const std::exception&) {
            throw Error(ErrorCode::Format, "'" + path.string() + "': unparsable number in row " +
                                               std::to_string(rows + 1));
        }
        ++rows;
    }

    Dataset d;
    d.name = path.stem().string();
    d.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), rows, static_cast<Index>(features));
    if (has_label) {
        d.labels = std::move(labels);
    }
    d.validate();
    return d;
}

std::vector<Index> sample_without_replacement(Index population, Index count, Rng& rng) {
    if (count > population || count < 0) {
        throw Error(ErrorCode::InvalidArgument, "cannot draw " + std::to_string(count) +
                                                    " distinct rows from " + std::to_string(population));
    }
    std::vector<Index> pool(static_cast<std::size_t>(population));
    std::iota(pool.begin(), pool.end(), Index{0});
    // Partial Fisher-Yates.
    for (Index i = 0; i < count; ++i) {
        std::uniform_int_distribution<Index> pick(i, population - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    pool.resize(static_cast<std::size_t>(count));
    return pool;
}

Matrix sample_minibatch(const Dataset& d, Index batch_size, Rng& rng) {
    if (batch_size < 1 || batch_size > d.size()) {
        throw Error(ErrorCode::InvalidArgument, "sample_minibatch: batch size " + std::to_string(batch_size) +
                                                    " not in [1, " + std::to_string(d.size()) + "]");
    }
    const auto rows = sample_without_replacement(d.size(), batch_size, rng);
    Matrix batch(batch_size, d.dim());
    for (Index b = 0; b < batch_size; ++b) {
        batch.row(b) = d.X.row(rows[static_cast<std::size_t>(b)]);
    }
    return batch;
}

Dataset subsample(const Dataset& d, Index count, std::uint64_t seed) {
    if (count <= 0 || count >= d.size()) {
        return d;
    }
    Rng rng(seed);
    auto rows = sample_without_replacement(d.size(), count, rng);
    std::sort(rows.begin(), rows.end());
    return d.subset(rows);
}

}  // namespace ksm
