#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loadshape/engines.hpp"

namespace loadshape {

struct MergeConfig {
  std::size_t k_final = 1;
  double tau = 0.2;  // cap on a merged cluster's share of all profiles
  std::optional<std::size_t> band;
  std::size_t dba_max_iter = 10;
  double dba_tol = 1e-4;
  // Replace the merged centroid with the size-weighted mean of the two parent
  // centroids instead of rerunning the barycenter refinement. Cheaper, less
  // faithful to warped shapes.
  bool weighted_average = false;
};

// Clusters carry stable ids across iterations: initial clusters get
// 0..K'-1 and each merge result gets the next unused id.
struct MergeRecord {
  std::size_t iteration = 0;
  std::size_t left_id = 0;
  std::size_t right_id = 0;
  double distance = 0.0;  // CI-DTW between the parents when merged
  std::size_t result_id = 0;
  std::size_t result_size = 0;
};

struct SkipRecord {
  std::size_t iteration = 0;
  std::size_t left_id = 0;
  std::size_t right_id = 0;
  double distance = 0.0;
  std::string reason;  // "density": union would exceed tau * N
};

struct MergeTrace {
  std::size_t initial_k = 0;
  std::size_t final_k = 0;
  double tau = 0.0;
  std::vector<MergeRecord> merges;  // exactly initial_k - final_k on success
  std::vector<SkipRecord> skips;
  std::string to_json() const;
};

// Pairwise CI-DTW between the library's centroids: symmetric, zero diagonal.
// Requires K >= 2.
std::vector<std::vector<double>> centroid_distance_matrix(
    const ClusterLibrary& lib, std::optional<std::size_t> band = std::nullopt);

// Iteration-ordered merging session. Each step merges the closest centroid
// pair whose union stays within tau * N profiles, skipping denser pairs in
// distance order, and recomputes only the merged cluster's matrix row.
class Merger {
 public:
  Merger(const ProfileSet& data, ClusterLibrary lib, const MergeConfig& config);

  std::size_t k() const { return lib_.size(); }
  const ClusterLibrary& library() const { return lib_; }
  const MergeTrace& trace() const { return trace_; }

  // One merge. Throws merge_exhausted when every remaining pair violates the
  // density cap.
  MergeRecord step();

  // Steps until k_final clusters remain.
  void run();

 private:
  const ProfileSet& data_;
  ClusterLibrary lib_;
  MergeConfig config_;
  std::vector<std::vector<double>> dist_;
  std::vector<std::size_t> ids_;
  std::size_t next_id_ = 0;
  MergeTrace trace_;
};

// Single merge on a fresh session; returns the reduced library and the record.
std::pair<ClusterLibrary, MergeRecord> merge_once(const ProfileSet& data,
                                                  const ClusterLibrary& lib,
                                                  const MergeConfig& config);

// Full stage 2: K' down to config.k_final.
std::pair<ClusterLibrary, MergeTrace> merge_to_k(const ProfileSet& data,
                                                 const ClusterLibrary& lib,
                                                 const MergeConfig& config);

}  // namespace loadshape
