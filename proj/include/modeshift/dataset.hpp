#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace modeshift {

// Immutable collection of M points in R^d, stored row-major. Everything
// downstream shares one DataSet read-only, so concurrent scans need no
// synchronization. Squared norms are precomputed once; the distance kernels
// in scan.hpp rely on them.
class DataSet {
 public:
  // flat.size() must be a positive multiple of dim; all values finite.
  DataSet(std::vector<double> flat, std::size_t dim);

  std::size_t size() const { return m_; }
  std::size_t dim() const { return dim_; }

  std::span<const double> point(std::size_t i) const {
    return {flat_.data() + i * dim_, dim_};
  }
  std::span<const double> flat() const { return flat_; }
  std::span<const double> sq_norms() const { return sq_norms_; }

 private:
  std::vector<double> flat_;
  std::vector<double> sq_norms_;
  std::size_t m_;
  std::size_t dim_;
};

}  // namespace modeshift
