#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "modeshift/dataset.hpp"

namespace modeshift::io {

// Dataset CSV: no header, one point per row, coordinates as decimal floats
// with 17 significant digits (lossless double round-trip). Labels CSV: one
// 1-based integer per row.

std::string format_double(double v);

void write_points_csv(const std::filesystem::path& path,
                      const DataSet& data);
void write_points_csv(const std::filesystem::path& path,
                      const std::vector<std::vector<double>>& rows);
DataSet read_points_csv(const std::filesystem::path& path);

void write_labels_csv(const std::filesystem::path& path,
                      const std::vector<int>& zero_based_labels);
std::vector<int> read_labels_csv(const std::filesystem::path& path);

void write_int_matrix_csv(const std::filesystem::path& path,
                          const std::vector<std::vector<long long>>& rows);

// Write-to-temp-then-rename; the destination is never observed half-written.
void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content);

}  // namespace modeshift::io
