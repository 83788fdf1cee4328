#pragma once

#include <string>
#include <vector>

namespace modeshift {

// Output of every clustering routine: a 0-based label per point plus the
// discovered (or given) centroids. CSV writers emit labels 1-based.
struct ClusterAssignment {
  std::vector<int> labels;
  std::vector<std::vector<double>> centroids;
  std::string algorithm_tag;
  double wall_time_sec = 0.0;

  std::size_t cluster_count() const { return centroids.size(); }
};

}  // namespace modeshift
