#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "loadshape/dataset.hpp"

namespace loadshape {

struct Cluster {
  std::vector<std::size_t> members;  // sorted, unique indices into a ProfileSet
  std::vector<double> centroid;      // length T, kW
  double frequency = 0.0;            // |members| / N
};

// An ordered set of K clusters; the unit both stages produce and consume.
struct ClusterLibrary {
  std::vector<Cluster> clusters;
  std::string source;               // engine + parameters provenance
  std::size_t total_profiles = 0;   // N

  std::size_t size() const { return clusters.size(); }

  // Member sets must be disjoint, non-empty, and cover all N profiles;
  // frequencies must sum to 1 (1e-9); centroids must have length T.
  void validate(const ProfileSet& data) const;
};

enum class Engine { kmeans, som, hierarchical };

Engine parse_engine(const std::string& name);
std::string engine_name(Engine engine);

struct EngineParams {
  std::size_t kmeans_max_iter = 100;
  std::size_t som_epochs = 50;
};

// Lloyd iterations with k-means++ seeding on raw profiles. Deterministic for
// a fixed seed; stops at an assignment fixpoint or max_iter. Cluster
// centroids are the Euclidean means of the final assignment.
ClusterLibrary kmeans(const ProfileSet& data, std::size_t k,
                      std::uint64_t seed, std::size_t max_iter = 100);

// Online SOM on a near-square r x c = k unit grid, prototypes initialized
// from sampled data profiles. Truncated-Gaussian neighborhood whose radius
// decays linearly to 0.5 while the learning rate decays from 0.5 to 0.01.
// Units that end up with no members are dropped, so the returned library may
// hold fewer than k clusters. Returned centroids are the unit prototypes.
ClusterLibrary som_train(const ProfileSet& data, std::size_t k,
                         std::uint64_t seed, std::size_t epochs = 50);

// Agglomerative clustering with Ward linkage on Euclidean distance, cut at k
// clusters. Deterministic: ties merge the lowest index pair. Memory is
// O(N^2).
ClusterLibrary hierarchical(const ProfileSet& data, std::size_t k);

// Stage-1 entry point: populate k_prime clusters (k_prime > the final K)
// with the chosen engine. Centroids are engine-native; the pipeline replaces
// them with warping-aware averages before merging.
ClusterLibrary overpopulate(const ProfileSet& data, Engine engine,
                            std::size_t k_prime, std::uint64_t seed,
                            const EngineParams& params = {});

}  // namespace loadshape
