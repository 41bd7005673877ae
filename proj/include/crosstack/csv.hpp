#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace crosstack {

// %.12e, the fixed cell format used by every emitted CSV.
std::string format_sci(double value);

// Writes content to path atomically (temp file + rename).
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

// header line + one %.12e row per matrix row.
void write_csv(const std::filesystem::path& path, const std::string& header,
               const Eigen::Ref<const Eigen::MatrixXd>& data);

// Numeric CSV/whitespace matrix; a leading non-numeric header line is
// skipped. All rows must have the same width.
Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);

}  // namespace crosstack
