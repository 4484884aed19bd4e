#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "loadshape/engines.hpp"

namespace loadshape {

// One sweep row. A validity index that is undefined at this K (for example
// DBI with coincident centroids) is stored as NaN.
struct CviRecord {
  std::size_t k = 0;
  double dbi = 0.0;
  double sil = 0.0;
  double chi = 0.0;
  double wcss = 0.0;
};

struct CviReport {
  std::vector<CviRecord> records;  // k strictly increasing

  // Columns: k,dbi,sil,chi,wcss. NaN and infinity serialize as nan / inf.
  void write_csv(const std::filesystem::path& path) const;
};

// Within-cluster sum of squares against the library's stored centroids.
double wcss(const ProfileSet& data, const ClusterLibrary& lib);

// Davies-Bouldin index: mean over clusters of the worst (S_i+S_j)/d(mu_i,mu_j)
// ratio, S being the mean member-to-centroid distance. Lower is better.
// Requires K >= 2 and pairwise distinct centroids.
double dbi(const ProfileSet& data, const ClusterLibrary& lib);

// Mean over clusters of the mean member silhouette. Singletons score 0, as
// does a sample with a(x) = b(x) = 0. Requires K >= 2. Higher is better.
double silhouette(const ProfileSet& data, const ClusterLibrary& lib);

// Calinski-Harabasz index: between-cluster dispersion (measured to the global
// mean profile) over within-cluster dispersion, scaled by (N-K)/(K-1).
// Requires 2 <= K < N. Zero within-dispersion yields +infinity. Higher is
// better.
double chi(const ProfileSet& data, const ClusterLibrary& lib);

// Cluster at every K in k_values (strictly increasing) with the chosen
// engine and tabulate all four indices. An index that is undefined at some K
// becomes NaN in that record; other errors propagate.
CviReport sweep(const ProfileSet& data, Engine engine,
                const std::vector<std::size_t>& k_values, std::uint64_t seed,
                const EngineParams& params = {});

// Knee of the WCSS curve: the K whose point lies farthest from the chord
// joining the curve's endpoints. Ties resolve to the smaller K. Requires at
// least 3 records and finite WCSS values; a flat or straight-line curve has
// no knee and raises numeric_error.
std::size_t elbow_k(const CviReport& report);

}  // namespace loadshape
