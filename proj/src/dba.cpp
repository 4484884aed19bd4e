#include "loadshape/dba.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "loadshape/distance.hpp"
#include "loadshape/errors.hpp"
#include "loadshape/rng.hpp"

namespace loadshape {

std::vector<std::span<const double>> gather(
    const ProfileSet& data, const std::vector<std::size_t>& members) {
  std::vector<std::span<const double>> out;
  out.reserve(members.size());
  for (std::size_t idx : members) {
    if (idx >= data.size())
      throw std::invalid_argument("gather: member index out of range");
    out.push_back(data.samples(idx));
  }
  return out;
}

double dtw_sum(const std::vector<std::span<const double>>& members,
               std::span<const double> centroid,
               std::optional<std::size_t> band) {
  double total = 0.0;
  for (const auto& m : members) total += dtw(centroid, m, band);
  return total;
}

std::vector<double> dba_iterate(
    const std::vector<std::span<const double>>& members,
    std::span<const double> centroid,
    std::optional<std::size_t> band) {
  if (members.empty())
    throw std::invalid_argument("dba_iterate: no members");
  if (centroid.empty())
    throw std::invalid_argument("dba_iterate: empty centroid");

  std::vector<double> sum(centroid.size(), 0.0);
  std::vector<std::size_t> count(centroid.size(), 0);
  for (const auto& m : members) {
    WarpPath path = dtw_path(centroid, m, band);
    for (auto [ci, mj] : path.steps) {
      sum[ci] += m[mj];
      ++count[ci];
    }
  }

  std::vector<double> next(centroid.size());
  for (std::size_t i = 0; i < next.size(); ++i)
    next[i] = count[i] > 0 ? sum[i] / static_cast<double>(count[i])
                           : centroid[i];
  return next;
}

std::vector<double> dba(const std::vector<std::span<const double>>& members,
                        const DbaOptions& options) {
  if (members.empty()) throw std::invalid_argument("dba: no members");
  for (const auto& m : members)
    if (m.empty()) throw std::invalid_argument("dba: empty member series");

  std::vector<double> centroid;
  if (options.init) {
    if (options.init->empty())
      throw std::invalid_argument("dba: empty init centroid");
    centroid = *options.init;
  } else if (options.random_init) {
    Rng rng(options.seed);
    std::size_t pick = rng.below(members.size());
    centroid.assign(members[pick].begin(), members[pick].end());
  } else {
    // Medoid: the member minimizing the summed DTW distance to the others.
    double best = std::numeric_limits<double>::infinity();
    std::size_t pick = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      double s = dtw_sum(members, members[i], options.band);
      if (s < best) {
        best = s;
        pick = i;
      }
    }
    centroid.assign(members[pick].begin(), members[pick].end());
  }
  double current = dtw_sum(members, centroid, options.band);

  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    std::vector<double> next = dba_iterate(members, centroid, options.band);
    double next_sum = dtw_sum(members, next, options.band);
    if (next_sum > current + 1e-9)
      throw numeric_error("dba: within-cluster DTW sum increased");
    centroid = std::move(next);
    if (current <= 0.0) break;
    double improvement = (current - next_sum) / current;
    current = next_sum;
    if (improvement < options.tol) break;
  }
  return centroid;
}

}  // namespace loadshape
