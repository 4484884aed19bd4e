#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "loadshape/dataset.hpp"

namespace loadshape {

struct DbaOptions {
  std::size_t max_iter = 10;
  double tol = 1e-4;        // relative improvement of the within-cluster DTW sum
  bool random_init = false; // pick a random member instead of the medoid
  std::uint64_t seed = 0;   // used only for random_init
  std::optional<std::size_t> band;
  // Explicit starting centroid. Skips medoid selection, which is quadratic in
  // the member count; useful when a good warm start already exists.
  std::optional<std::vector<double>> init;
};

// Collect spans over the member rows of a cluster without copying.
std::vector<std::span<const double>> gather(
    const ProfileSet& data, const std::vector<std::size_t>& members);

// One barycenter refinement: warp the centroid onto every member, pool the
// member samples associated with each centroid position across all alignment
// paths, and replace each centroid sample with the mean of its pool. A
// position with an empty pool (guarded; full paths touch every position)
// keeps its previous value.
std::vector<double> dba_iterate(
    const std::vector<std::span<const double>>& members,
    std::span<const double> centroid,
    std::optional<std::size_t> band = std::nullopt);

// Full averaging loop: start at the medoid (lowest index on ties) and apply
// dba_iterate until the within-cluster DTW sum improves by less than tol or
// max_iter is reached. The sum is non-increasing across iterations.
std::vector<double> dba(const std::vector<std::span<const double>>& members,
                        const DbaOptions& options = {});

// Within-cluster DTW sum for a candidate centroid.
double dtw_sum(const std::vector<std::span<const double>>& members,
               std::span<const double> centroid,
               std::optional<std::size_t> band = std::nullopt);

}  // namespace loadshape
