#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "ksm/types.hpp"

namespace ksm::csv {

/// Shortest decimal text that round-trips the double.
[[nodiscard]] std::string format(double value);

/// Opens `path` for writing in binary mode so line endings stay LF.
[[nodiscard]] std::ofstream open(const std::filesystem::path& path);

/// Writes optional leading `# key=value` comment lines.
void write_preamble(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& meta);

void write_matrix(const std::filesystem::path& path, const Matrix& M,
                  const std::vector<std::pair<std::string, std::string>>& meta = {},
                  std::string_view column_prefix = "c");

[[nodiscard]] std::vector<std::string> split(std::string_view line, char sep = ',');

}  // namespace ksm::csv
