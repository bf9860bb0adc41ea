#include "ksm/csv.hpp"

#include <array>
#include <charconv>

namespace ksm::csv {

std::string format(double value) {
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        throw Error(ErrorCode::Format, "csv: could not format value");
    }
    return {buf.data(), end};
}

std::ofstream open(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    }
    return out;
}

void write_preamble(std::ostream& out,
                    const std::vector<std::pair<std::string, std::string>>& meta) {
    for (const auto& [key, value] : meta) {
        out << "# " << key << '=' << value << '\n';
    }
}

void write_matrix(const std::filesystem::path& path, const Matrix& M,
                  const std::vector<std::pair<std::string, std::string>>& meta,
                  std::string_view column_prefix) {
    auto out = open(path);
    write_preamble(out, meta);
    for (Index j = 0; j < M.cols(); ++j) {
        out << (j ? "," : "") << column_prefix << j;
    }
    out << '\n';
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            out << (j ? "," : "") << format(M(i, j));
        }
        out << '\n';
    }
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        fields.emplace_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return fields;
}

}  // namespace ksm::csv
