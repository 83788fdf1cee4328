#include "modeshift/dataset.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "modeshift/scan.hpp"

namespace modeshift {

DataSet::DataSet(std::vector<double> flat, std::size_t dim)
    : flat_(std::move(flat)), dim_(dim) {
  if (dim_ == 0) throw std::invalid_argument("DataSet: dim must be positive");
  if (flat_.empty() || flat_.size() % dim_ != 0)
    throw std::invalid_argument("DataSet: size must be a positive multiple of dim");
  m_ = flat_.size() / dim_;
  for (double v : flat_)
    if (!std::isfinite(v))
      throw std::invalid_argument("DataSet: non-finite coordinate");
  sq_norms_.resize(m_);
  for (std::size_t i = 0; i < m_; ++i)
    sq_norms_[i] = scan::dot(flat_.data() + i * dim_, flat_.data() + i * dim_, dim_);
}

}  // namespace modeshift
