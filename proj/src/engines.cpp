#include "loadshape/engines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "loadshape/distance.hpp"
#include "loadshape/rng.hpp"

namespace loadshape {

namespace {

double sq_euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void check_k(std::size_t k, std::size_t n) {
  if (k < 1 || k > n) {
    throw std::invalid_argument("cluster count must satisfy 1 <= k <= N");
  }
}

// Assignments -> library, computing frequencies and sorting members.
// Clusters that attracted no members are omitted.
ClusterLibrary build_library(const ProfileSet& data,
                             const std::vector<std::size_t>& assignment,
                             const std::vector<std::vector<double>>& centroids,
                             std::string source) {
  const std::size_t n = data.size();
  ClusterLibrary lib;
  lib.source = std::move(source);
  lib.total_profiles = n;
  std::vector<std::vector<std::size_t>> members(centroids.size());
  for (std::size_t i = 0; i < n; ++i) {
    members[assignment[i]].push_back(i);
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (members[c].empty()) continue;
    Cluster cl;
    cl.members = std::move(members[c]);
    cl.centroid = centroids[c];
    cl.frequency =
        static_cast<double>(cl.members.size()) / static_cast<double>(n);
    lib.clusters.push_back(std::move(cl));
  }
  return lib;
}

std::vector<double> member_mean(const ProfileSet& data,
                                const std::vector<std::size_t>& members) {
  std::vector<double> mean(data.samples_per_day, 0.0);
  for (std::size_t idx : members) {
    const auto& row = data.samples(idx);
    for (std::size_t s = 0; s < mean.size(); ++s) mean[s] += row[s];
  }
  for (double& v : mean) v /= static_cast<double>(members.size());
  return mean;
}

std::vector<std::vector<double>> kmeanspp_init(const ProfileSet& data,
                                               std::size_t k, Rng& rng) {
  const std::size_t n = data.size();
  std::vector<std::size_t> chosen;
  std::vector<bool> is_chosen(n, false);
  std::vector<double> d2(n, 0.0);

  const std::size_t first = rng.below(n);
  chosen.push_back(first);
  is_chosen[first] = true;
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = sq_euclidean(data.samples(i), data.samples(first));
  }
  while (chosen.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t next = n;
    if (total > 0.0) {
      const double r = rng.uniform01() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (r < cum) {
          next = i;
          break;
        }
      }
      if (next == n) {  // r landed on accumulated rounding at the end
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            next = i;
            break;
          }
        }
      }
    }
    if (next == n) {
      // all remaining distances are zero (duplicate-heavy data); take the
      // lowest unchosen index
      for (std::size_t i = 0; i < n; ++i) {
        if (!is_chosen[i]) {
          next = i;
          break;
        }
      }
    }
    chosen.push_back(next);
    is_chosen[next] = true;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_euclidean(data.samples(i), data.samples(next)));
    }
  }

  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  for (std::size_t idx : chosen) centroids.push_back(data.samples(idx));
  return centroids;
}

std::size_t nearest_centroid(const std::vector<double>& x,
                             const std::vector<std::vector<double>>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_euclidean(x, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double assignment_wcss(const ProfileSet& data,
                       const std::vector<std::size_t>& assignment,
                       const std::vector<std::vector<double>>& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    s += sq_euclidean(data.samples(i), centroids[assignment[i]]);
  }
  return s;
}

}  // namespace

void ClusterLibrary::validate(const ProfileSet& data) const {
  if (clusters.empty()) {
    throw data_error("cluster library is empty");
  }
  if (total_profiles != data.size()) {
    throw data_error("cluster library N does not match the profile set");
  }
  const std::size_t n = data.size();
  std::vector<bool> covered(n, false);
  double freq_sum = 0.0;
  for (const auto& c : clusters) {
    if (c.members.empty()) {
      throw data_error("cluster with no members");
    }
    if (c.centroid.size() != data.samples_per_day) {
      throw data_error("centroid length != samples_per_day");
    }
    for (std::size_t idx : c.members) {
      if (idx >= n) {
        throw data_error("member index out of range");
      }
      if (covered[idx]) {
        throw data_error("member sets are not disjoint");
      }
      covered[idx] = true;
    }
    const double expected =
        static_cast<double>(c.members.size()) / static_cast<double>(n);
    if (std::abs(c.frequency - expected) > 1e-9) {
      throw data_error("cluster frequency != members/N");
    }
    freq_sum += c.frequency;
  }
  if (!std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) {
    throw data_error("member sets do not cover all profiles");
  }
  if (std::abs(freq_sum - 1.0) > 1e-9) {
    throw data_error("cluster frequencies do not sum to 1");
  }
}

Engine parse_engine(const std::string& name) {
  if (name == "kmeans") return Engine::kmeans;
  if (name == "som") return Engine::som;
  if (name == "hierarchical") return Engine::hierarchical;
  throw std::invalid_argument("unknown engine: " + name);
}

std::string engine_name(Engine engine) {
  switch (engine) {
    case Engine::kmeans: return "kmeans";
    case Engine::som: return "som";
    case Engine::hierarchical: return "hierarchical";
  }
  return "unknown";
}

ClusterLibrary kmeans(const ProfileSet& data, std::size_t k,
                      std::uint64_t seed, std::size_t max_iter) {
  const std::size_t n = data.size();
  check_k(k, n);
  Rng rng(seed);
  auto centroids = kmeanspp_init(data, k, rng);

  std::vector<std::size_t> assignment(n);
  for (std::size_t i = 0; i < n; ++i) {
    assignment[i] = nearest_centroid(data.samples(i), centroids);
  }

  double prev_wcss = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // means for the current assignment
    std::vector<std::size_t> counts(k, 0);
    for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& row = data.samples(i);
      auto& c = centroids[assignment[i]];
      for (std::size_t s = 0; s < c.size(); ++s) c[s] += row[s];
      ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (double& v : centroids[c]) v /= static_cast<double>(counts[c]);
    }
    // empty-cluster repair: reseed to the profile farthest from its centroid
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        const double d = sq_euclidean(data.samples(i), centroids[assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far == n) break;
      centroids[c] = data.samples(far);
      taken[far] = true;
    }

    std::vector<std::size_t> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = nearest_centroid(data.samples(i), centroids);
    }
    const double cur_wcss = assignment_wcss(data, next, centroids);
    if (cur_wcss > prev_wcss * (1.0 + 1e-12) + 1e-9) {
      throw std::logic_error("kmeans: WCSS increased across an iteration");
    }
    prev_wcss = cur_wcss;
    const bool stable = next == assignment;
    assignment = std::move(next);
    if (stable) break;
  }

  // final centroids are the means of the final assignment
  std::vector<std::size_t> counts(k, 0);
  for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = data.samples(i);
    auto& c = centroids[assignment[i]];
    for (std::size_t s = 0; s < c.size(); ++s) c[s] += row[s];
    ++counts[assignment[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (double& v : centroids[c]) v /= static_cast<double>(counts[c]);
  }

  return build_library(data, assignment, centroids,
                       "kmeans k=" + std::to_string(k) +
                           " seed=" + std::to_string(seed));
}

ClusterLibrary som_train(const ProfileSet& data, std::size_t k,
                         std::uint64_t seed, std::size_t epochs) {
  const std::size_t n = data.size();
  check_k(k, n);
  Rng rng(seed);

  // near-square grid: rows = largest divisor of k not above sqrt(k)
  std::size_t rows = 1;
  for (std::size_t r = static_cast<std::size_t>(std::sqrt(
           static_cast<double>(k)));
       r >= 1; --r) {
    if (k % r == 0) {
      rows = r;
      break;
    }
  }
  const std::size_t cols = k / rows;

  // prototypes start as k distinct sampled profiles
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::vector<double>> proto(k);
  for (std::size_t u = 0; u < k; ++u) proto[u] = data.samples(order[u]);

  auto bmu = [&](const std::vector<double>& x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < k; ++u) {
      const double d = sq_euclidean(x, proto[u]);
      if (d < best_d) {
        best_d = d;
        best = u;
      }
    }
    return best;
  };

  if (epochs > 0) {
    const double total_steps = static_cast<double>(epochs) * static_cast<double>(n);
    const double sigma0 =
        std::max(0.5, static_cast<double>(std::max(rows, cols)) / 2.0);
    const double sigma1 = 0.5;
    const double lr0 = 0.5;
    const double lr1 = 0.01;
    double step = 0.0;
    for (std::size_t e = 0; e < epochs; ++e) {
      rng.shuffle(order);
      for (std::size_t idx : order) {
        const double frac =
            total_steps > 1.0 ? step / (total_steps - 1.0) : 1.0;
        const double lr = lr0 + (lr1 - lr0) * frac;
        const double sigma = sigma0 + (sigma1 - sigma0) * frac;
        const auto& x = data.samples(idx);
        const std::size_t win = bmu(x);
        const double wr = static_cast<double>(win / cols);
        const double wc = static_cast<double>(win % cols);
        for (std::size_t u = 0; u < k; ++u) {
          const double dr = static_cast<double>(u / cols) - wr;
          const double dc = static_cast<double>(u % cols) - wc;
          const double gd2 = dr * dr + dc * dc;
          if (gd2 > sigma * sigma) continue;  // truncated neighborhood
          const double h = std::exp(-gd2 / (2.0 * sigma * sigma));
          auto& w = proto[u];
          for (std::size_t s = 0; s < w.size(); ++s) {
            w[s] += lr * h * (x[s] - w[s]);
          }
        }
        step += 1.0;
      }
    }
  }

  std::vector<std::size_t> assignment(n);
  for (std::size_t i = 0; i < n; ++i) assignment[i] = bmu(data.samples(i));
  return build_library(data, assignment, proto,
                       "som k=" + std::to_string(k) + " grid=" +
                           std::to_string(rows) + "x" + std::to_string(cols) +
                           " epochs=" + std::to_string(epochs) +
                           " seed=" + std::to_string(seed));
}

ClusterLibrary hierarchical(const ProfileSet& data, std::size_t k) {
  const std::size_t n = data.size();
  check_k(k, n);

  // Squared Euclidean distances updated with the Ward Lance-Williams
  // recurrence; minimizing them reproduces the minimum-variance merge order.
  std::vector<double> dist(n * n, 0.0);
  auto d = [&](std::size_t i, std::size_t j) -> double& {
    return dist[i * n + j];
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = sq_euclidean(data.samples(i), data.samples(j));
      d(i, j) = v;
      d(j, i) = v;
    }
  }

  std::vector<bool> active(n, true);
  std::vector<double> size(n, 1.0);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  // per-row nearest neighbor over j > i
  constexpr auto kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> nn(n, kNone);
  std::vector<double> nn_d(n, std::numeric_limits<double>::infinity());
  auto recompute_nn = [&](std::size_t i) {
    nn[i] = kNone;
    nn_d[i] = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!active[j]) continue;
      if (d(i, j) < nn_d[i]) {
        nn_d[i] = d(i, j);
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) recompute_nn(i);

  std::size_t active_count = n;
  while (active_count > k) {
    // global closest pair; ties resolve to the lowest (i, j)
    std::size_t a = kNone;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || nn[i] == kNone) continue;
      if (nn_d[i] < best) {
        best = nn_d[i];
        a = i;
      }
    }
    const std::size_t b = nn[a];

    // Lance-Williams (Ward) update of row a against every other cluster
    const double sa = size[a];
    const double sb = size[b];
    const double dab = d(a, b);
    for (std::size_t x = 0; x < n; ++x) {
      if (!active[x] || x == a || x == b) continue;
      const double sx = size[x];
      const double v = ((sa + sx) * d(a, x) + (sb + sx) * d(b, x) - sx * dab) /
                       (sa + sb + sx);
      d(a, x) = v;
      d(x, a) = v;
    }
    active[b] = false;
    size[a] = sa + sb;
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    members[b].clear();
    --active_count;

    recompute_nn(a);
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || i == a) continue;
      if (nn[i] == a || nn[i] == b) {
        recompute_nn(i);
      } else if (i < a) {
        const double v = d(i, a);
        if (v < nn_d[i] || (v == nn_d[i] && a < nn[i])) {
          nn_d[i] = v;
          nn[i] = a;
        }
      }
    }
  }

  ClusterLibrary lib;
  lib.source = "hierarchical k=" + std::to_string(k);
  lib.total_profiles = n;
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) roots.push_back(i);
  }
  std::sort(roots.begin(), roots.end(), [&](std::size_t x, std::size_t y) {
    return *std::min_element(members[x].begin(), members[x].end()) <
           *std::min_element(members[y].begin(), members[y].end());
  });
  for (std::size_t r : roots) {
    Cluster c;
    c.members = members[r];
    std::sort(c.members.begin(), c.members.end());
    c.centroid = member_mean(data, c.members);
    c.frequency =
        static_cast<double>(c.members.size()) / static_cast<double>(n);
    lib.clusters.push_back(std::move(c));
  }
  return lib;
}

ClusterLibrary overpopulate(const ProfileSet& data, Engine engine,
                            std::size_t k_prime, std::uint64_t seed,
                            const EngineParams& params) {
  switch (engine) {
    case Engine::kmeans:
      return kmeans(data, k_prime, seed, params.kmeans_max_iter);
    case Engine::som:
      return som_train(data, k_prime, seed, params.som_epochs);
    case Engine::hierarchical:
      return hierarchical(data, k_prime);
  }
  throw std::invalid_argument("unknown engine");
}

}  // namespace loadshape
