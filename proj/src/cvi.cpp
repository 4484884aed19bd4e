#include "loadshape/cvi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>

#include "loadshape/errors.hpp"
#include "loadshape/format.hpp"

namespace loadshape {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    double d = a[t] - b[t];
    s += d * d;
  }
  return s;
}

std::vector<std::size_t> assignment_of(const ProfileSet& data,
                                       const ClusterLibrary& lib) {
  std::vector<std::size_t> owner(data.size(), 0);
  for (std::size_t c = 0; c < lib.size(); ++c)
    for (std::size_t m : lib.clusters[c].members) owner[m] = c;
  return owner;
}

}  // namespace

double wcss(const ProfileSet& data, const ClusterLibrary& lib) {
  lib.validate(data);
  double total = 0.0;
  for (const auto& cluster : lib.clusters)
    for (std::size_t m : cluster.members)
      total += sq_dist(data.samples(m), cluster.centroid);
  return total;
}

double dbi(const ProfileSet& data, const ClusterLibrary& lib) {
  lib.validate(data);
  const std::size_t k = lib.size();
  if (k < 2) throw numeric_error("dbi: needs at least 2 clusters");

  std::vector<double> spread(k);
  for (std::size_t c = 0; c < k; ++c) {
    double s = 0.0;
    for (std::size_t m : lib.clusters[c].members)
      s += std::sqrt(sq_dist(data.samples(m), lib.clusters[c].centroid));
    spread[c] = s / static_cast<double>(lib.clusters[c].members.size());
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      double d = std::sqrt(
          sq_dist(lib.clusters[i].centroid, lib.clusters[j].centroid));
      if (d == 0.0) throw numeric_error("dbi: coincident centroids");
      worst = std::max(worst, (spread[i] + spread[j]) / d);
    }
    sum += worst;
  }
  return sum / static_cast<double>(k);
}

double silhouette(const ProfileSet& data, const ClusterLibrary& lib) {
  lib.validate(data);
  const std::size_t k = lib.size();
  if (k < 2) throw numeric_error("silhouette: needs at least 2 clusters");

  const std::size_t n = data.size();
  const std::vector<std::size_t> owner = assignment_of(data, lib);

  // mean_to[i][c]: mean distance from sample i to the members of cluster c
  // (self included for the owner; corrected below).
  std::vector<std::vector<double>> mean_to(n, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = std::sqrt(sq_dist(data.samples(i), data.samples(j)));
      mean_to[i][owner[j]] += d;
      mean_to[j][owner[i]] += d;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c)
      mean_to[i][c] /= static_cast<double>(lib.clusters[c].members.size());

  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t size = lib.clusters[c].members.size();
    double cluster_sum = 0.0;
    if (size > 1) {
      for (std::size_t m : lib.clusters[c].members) {
        // Exclude the zero self-distance from the own-cluster mean.
        double a = mean_to[m][c] * static_cast<double>(size) /
                   static_cast<double>(size - 1);
        double b = kInf;
        for (std::size_t other = 0; other < k; ++other)
          if (other != c) b = std::min(b, mean_to[m][other]);
        double denom = std::max(a, b);
        cluster_sum += denom > 0.0 ? (b - a) / denom : 0.0;
      }
    }
    total += size > 1 ? cluster_sum / static_cast<double>(size) : 0.0;
  }
  return total / static_cast<double>(k);
}

double chi(const ProfileSet& data, const ClusterLibrary& lib) {
  lib.validate(data);
  const std::size_t k = lib.size();
  const std::size_t n = data.size();
  if (k < 2) throw numeric_error("chi: needs at least 2 clusters");
  if (n <= k) throw numeric_error("chi: needs more samples than clusters");

  const std::size_t t = data.samples_per_day;
  std::vector<double> global(t, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = data.samples(i);
    for (std::size_t s = 0; s < t; ++s) global[s] += row[s];
  }
  for (double& g : global) g /= static_cast<double>(n);

  double between = 0.0;
  for (const auto& cluster : lib.clusters)
    between += static_cast<double>(cluster.members.size()) *
               sq_dist(cluster.centroid, global);

  double within = wcss(data, lib);
  if (within == 0.0) return kInf;
  return (between / static_cast<double>(k - 1)) /
         (within / static_cast<double>(n - k));
}

CviReport sweep(const ProfileSet& data, Engine engine,
                const std::vector<std::size_t>& k_values, std::uint64_t seed,
                const EngineParams& params) {
  if (k_values.empty())
    throw std::invalid_argument("sweep: no K values");
  for (std::size_t i = 1; i < k_values.size(); ++i)
    if (k_values[i] <= k_values[i - 1])
      throw std::invalid_argument("sweep: K values must be strictly increasing");

  CviReport report;
  report.records.reserve(k_values.size());
  for (std::size_t k : k_values) {
    ClusterLibrary lib = overpopulate(data, engine, k, seed, params);
    CviRecord rec;
    rec.k = k;
    rec.wcss = wcss(data, lib);
    auto guarded = [&](double (*f)(const ProfileSet&, const ClusterLibrary&)) {
      try {
        return f(data, lib);
      } catch (const numeric_error&) {
        return kNan;
      }
    };
    rec.dbi = guarded(dbi);
    rec.sil = guarded(silhouette);
    rec.chi = guarded(chi);
    report.records.push_back(rec);
  }
  return report;
}

void CviReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open " + path.string() + " for writing");
  out << "k,dbi,sil,chi,wcss\n";
  for (const auto& r : records)
    out << r.k << ',' << format_double(r.dbi) << ',' << format_double(r.sil)
        << ',' << format_double(r.chi) << ',' << format_double(r.wcss) << '\n';
  if (!out) throw data_error("write failed: " + path.string());
}

std::size_t elbow_k(const CviReport& report) {
  const auto& recs = report.records;
  if (recs.size() < 3)
    throw std::invalid_argument("elbow_k: need at least 3 K values");
  double scale = 0.0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (i > 0 && recs[i].k <= recs[i - 1].k)
      throw std::invalid_argument("elbow_k: K values must be strictly increasing");
    if (!std::isfinite(recs[i].wcss))
      throw numeric_error("elbow_k: non-finite WCSS in report");
    scale = std::max(scale, std::fabs(recs[i].wcss));
  }

  const double x0 = static_cast<double>(recs.front().k);
  const double y0 = recs.front().wcss;
  const double dx = static_cast<double>(recs.back().k) - x0;
  const double dy = recs.back().wcss - y0;
  const double chord = std::hypot(dx, dy);

  double best = -1.0;
  std::size_t best_k = recs.front().k;
  for (const auto& r : recs) {
    double cross = dx * (r.wcss - y0) - (static_cast<double>(r.k) - x0) * dy;
    double dist = std::fabs(cross) / chord;
    if (dist > best) {
      best = dist;
      best_k = r.k;
    }
  }
  if (best <= 1e-9 * (1.0 + scale))
    throw numeric_error("elbow_k: WCSS curve has no knee");
  return best_k;
}

}  // namespace loadshape
