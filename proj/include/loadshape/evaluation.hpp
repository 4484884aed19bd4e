#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "loadshape/engines.hpp"

namespace loadshape {

// Pearson product-moment correlation. Lengths must match and be >= 2. When
// either series has zero variance the coefficient is undefined; by convention
// it is 1 if both series are constant and elementwise equal, else 0.
double pearson(std::span<const double> a, std::span<const double> b);

// Mean correlation between a cluster's members and its centroid.
double cluster_corr(const ProfileSet& data, const Cluster& cluster);

// Weighted average correlation: per-cluster correlations weighted by member
// count, divided by N. Bounded above by 1; can go negative with
// anticorrelated members.
double wac(const ProfileSet& data, const ClusterLibrary& lib);

struct RunInfo {
  std::string method;  // "two-stage" or "benchmark"
  std::string engine;
  std::size_t k_prime = 0;  // 0 when the run had no overpopulation stage
  std::size_t k_final = 0;
  double tau = 0.0;
  std::uint64_t seed = 0;
};

struct ClusterEval {
  std::size_t cluster_id = 0;
  std::size_t size = 0;
  double frequency = 0.0;
  double corr = 0.0;
};

struct EvalReport {
  RunInfo info;
  std::vector<ClusterEval> clusters;
  double wac_value = 0.0;
  double wcss_value = 0.0;

  std::string to_json() const;
  // One row per cluster plus a trailing summary row carrying N and WAC.
  void write_csv(const std::filesystem::path& path) const;
};

EvalReport evaluate(const ProfileSet& data, const ClusterLibrary& lib,
                    const RunInfo& info);

struct Comparison {
  EvalReport two_stage;
  EvalReport benchmark;
  double delta_wac_pct = 0.0;   // (two_stage - benchmark) / |benchmark| * 100
  double delta_wcss_pct = 0.0;
  bool k_mismatch = false;

  std::string to_json() const;
};

// Paired evaluation of a two-stage library against a benchmark library on the
// same data. Different final K is flagged, not fatal.
Comparison compare(const ProfileSet& data, const ClusterLibrary& two_stage,
                   const RunInfo& two_stage_info,
                   const ClusterLibrary& benchmark,
                   const RunInfo& benchmark_info);

}  // namespace loadshape
