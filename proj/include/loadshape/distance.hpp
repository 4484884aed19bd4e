#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace loadshape {

double euclidean(std::span<const double> p, std::span<const double> q);

// Accumulated warping cost with squared per-cell cost (p_i - q_j)^2. The
// value is the raw accumulated cost: no path-length normalization and no
// final square root, since the complexity correction below multiplies it
// directly. `band` is a Sakoe-Chiba half-width; cells with |i - j| > band
// are excluded. A band >= max(len) - 1 is equivalent to no band.
double dtw(std::span<const double> p, std::span<const double> q,
           std::optional<std::size_t> band = std::nullopt);

// sqrt of the sum of squared consecutive differences; zero iff constant.
// Requires length >= 2.
double complexity_estimate(std::span<const double> a);

// dtw(p, q) scaled by the complexity ratio max(CE)/min(CE). CE values are
// clamped below at 1e-12 before the ratio, so a pair of constant series
// gets factor 1 instead of 0/0.
double cidtw(std::span<const double> p, std::span<const double> q,
             std::optional<std::size_t> band = std::nullopt);

struct WarpPath {
  std::vector<std::pair<std::size_t, std::size_t>> steps;  // (p index, q index)
  double cost = 0.0;
};

// Optimal alignment with backtracking. Among equal-cost predecessors the
// diagonal is preferred, then advancing p, then advancing q.
WarpPath dtw_path(std::span<const double> p, std::span<const double> q,
                  std::optional<std::size_t> band = std::nullopt);

}  // namespace loadshape
