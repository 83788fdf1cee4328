#include "modeshift/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace modeshift::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out.flush())
      throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("rename failed: " + path.string() + ": " + ec.message());
  }
}

namespace {

std::string points_to_csv(const double* flat, std::size_t rows, std::size_t cols) {
  std::string out;
  out.reserve(rows * cols * 20);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < cols; ++k) {
      if (k != 0) out.push_back(',');
      out += format_double(flat[i * cols + k]);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace

void write_points_csv(const std::filesystem::path& path, const DataSet& data) {
  atomic_write_text(path, points_to_csv(data.flat().data(), data.size(), data.dim()));
}

void write_points_csv(const std::filesystem::path& path,
                      const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k != 0) out.push_back(',');
      out += format_double(row[k]);
    }
    out.push_back('\n');
  }
  atomic_write_text(path, out);
}

DataSet read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<double> flat;
  std::size_t dim = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t cols = 0;
    const char* p = line.c_str();
    char* end = nullptr;
    for (;;) {
      const double v = std::strtod(p, &end);
      if (end == p) throw std::runtime_error("bad number in " + path.string());
      flat.push_back(v);
      ++cols;
      p = end;
      while (*p == ' ') ++p;
      if (*p == ',') {
        ++p;
        continue;
      }
      if (*p == '\0' || *p == '\r') break;
      throw std::runtime_error("bad separator in " + path.string());
    }
    if (dim == 0)
      dim = cols;
    else if (cols != dim)
      throw std::runtime_error("ragged rows in " + path.string());
  }
  if (flat.empty()) throw std::runtime_error("empty dataset: " + path.string());
  return DataSet(std::move(flat), dim);
}

void write_labels_csv(const std::filesystem::path& path,
                      const std::vector<int>& zero_based_labels) {
  std::string out;
  out.reserve(zero_based_labels.size() * 4);
  for (int l : zero_based_labels) {
    out += std::to_string(l + 1);
    out.push_back('\n');
  }
  atomic_write_text(path, out);
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const long v = std::strtol(line.c_str(), nullptr, 10);
    if (v < 1) throw std::runtime_error("labels must be 1-based positive: " + path.string());
    labels.push_back(static_cast<int>(v - 1));
  }
  if (labels.empty()) throw std::runtime_error("empty labels: " + path.string());
  return labels;
}

void write_int_matrix_csv(const std::filesystem::path& path,
                          const std::vector<std::vector<long long>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k != 0) out.push_back(',');
      out += std::to_string(row[k]);
    }
    out.push_back('\n');
  }
  atomic_write_text(path, out);
}

}  // namespace modeshift::io
