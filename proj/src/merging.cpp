#include "loadshape/merging.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "loadshape/dba.hpp"
#include "loadshape/distance.hpp"
#include "loadshape/errors.hpp"

namespace loadshape {

namespace {

void check_config(const MergeConfig& config, std::size_t k) {
  if (!(config.tau > 0.0 && config.tau <= 1.0))
    throw std::invalid_argument("merge: tau must lie in (0,1]");
  if (config.k_final < 1 || config.k_final >= k)
    throw std::invalid_argument("merge: need 1 <= k_final < K'");
}

}  // namespace

std::vector<std::vector<double>> centroid_distance_matrix(
    const ClusterLibrary& lib, std::optional<std::size_t> band) {
  const std::size_t k = lib.size();
  if (k < 2)
    throw std::invalid_argument("centroid_distance_matrix: need K >= 2");
  std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      double d = cidtw(lib.clusters[i].centroid, lib.clusters[j].centroid, band);
      m[i][j] = d;
      m[j][i] = d;
    }
  return m;
}

Merger::Merger(const ProfileSet& data, ClusterLibrary lib,
               const MergeConfig& config)
    : data_(data), lib_(std::move(lib)), config_(config) {
  lib_.validate(data_);
  check_config(config_, lib_.size());
  dist_ = centroid_distance_matrix(lib_, config_.band);
  ids_.resize(lib_.size());
  std::iota(ids_.begin(), ids_.end(), std::size_t{0});
  next_id_ = lib_.size();
  trace_.initial_k = lib_.size();
  trace_.final_k = lib_.size();
  trace_.tau = config_.tau;
}

MergeRecord Merger::step() {
  const std::size_t k = lib_.size();
  if (k < 2) throw std::invalid_argument("merge step: need K >= 2");
  const double cap =
      config_.tau * static_cast<double>(lib_.total_profiles);

  struct Candidate {
    double d;
    std::size_t i, j;
  };
  std::vector<Candidate> order;
  order.reserve(k * (k - 1) / 2);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) order.push_back({dist_[i][j], i, j});
  std::sort(order.begin(), order.end(), [](const Candidate& a, const Candidate& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  std::size_t pick = order.size();
  std::vector<SkipRecord> skips;
  for (std::size_t c = 0; c < order.size(); ++c) {
    const auto& cand = order[c];
    double merged_size =
        static_cast<double>(lib_.clusters[cand.i].members.size() +
                            lib_.clusters[cand.j].members.size());
    if (merged_size <= cap) {
      pick = c;
      break;
    }
    skips.push_back({trace_.merges.size(), ids_[cand.i], ids_[cand.j], cand.d,
                     "density"});
  }
  if (pick == order.size())
    throw merge_exhausted("merge: no admissible pair under the density cap",
                          k);

  for (auto& s : skips) trace_.skips.push_back(std::move(s));
  const std::size_t a = order[pick].i;
  const std::size_t b = order[pick].j;

  Cluster& ca = lib_.clusters[a];
  Cluster& cb = lib_.clusters[b];
  std::vector<std::size_t> merged;
  merged.reserve(ca.members.size() + cb.members.size());
  std::merge(ca.members.begin(), ca.members.end(), cb.members.begin(),
             cb.members.end(), std::back_inserter(merged));

  std::vector<double> centroid;
  if (config_.weighted_average) {
    const double wa = static_cast<double>(ca.members.size());
    const double wb = static_cast<double>(cb.members.size());
    centroid.resize(ca.centroid.size());
    for (std::size_t t = 0; t < centroid.size(); ++t)
      centroid[t] = (wa * ca.centroid[t] + wb * cb.centroid[t]) / (wa + wb);
  } else {
    DbaOptions opts;
    opts.max_iter = config_.dba_max_iter;
    opts.tol = config_.dba_tol;
    opts.band = config_.band;
    // Warm start from the bigger parent's centroid; ties favor the left one.
    opts.init = cb.members.size() > ca.members.size() ? cb.centroid : ca.centroid;
    centroid = dba(gather(data_, merged), opts);
  }

  MergeRecord rec;
  rec.iteration = trace_.merges.size();
  rec.left_id = ids_[a];
  rec.right_id = ids_[b];
  rec.distance = order[pick].d;
  rec.result_id = next_id_++;
  rec.result_size = merged.size();

  ca.members = std::move(merged);
  ca.centroid = std::move(centroid);
  ca.frequency = static_cast<double>(ca.members.size()) /
                 static_cast<double>(lib_.total_profiles);
  lib_.clusters.erase(lib_.clusters.begin() +
                      static_cast<std::ptrdiff_t>(b));
  ids_[a] = rec.result_id;
  ids_.erase(ids_.begin() + static_cast<std::ptrdiff_t>(b));

  dist_.erase(dist_.begin() + static_cast<std::ptrdiff_t>(b));
  for (auto& row : dist_) row.erase(row.begin() + static_cast<std::ptrdiff_t>(b));
  for (std::size_t i = 0; i < lib_.size(); ++i) {
    if (i == a) continue;
    double d = cidtw(lib_.clusters[a].centroid, lib_.clusters[i].centroid,
                     config_.band);
    dist_[a][i] = d;
    dist_[i][a] = d;
  }

  std::size_t covered = 0;
  for (const auto& c : lib_.clusters) covered += c.members.size();
  if (covered != lib_.total_profiles)
    throw std::logic_error("merge: membership not conserved");

  trace_.merges.push_back(rec);
  trace_.final_k = lib_.size();
  return rec;
}

void Merger::run() {
  while (lib_.size() > config_.k_final) step();
  lib_.validate(data_);
}

std::pair<ClusterLibrary, MergeRecord> merge_once(const ProfileSet& data,
                                                  const ClusterLibrary& lib,
                                                  const MergeConfig& config) {
  MergeConfig one = config;
  one.k_final = lib.size() > 1 ? lib.size() - 1 : 1;
  Merger session(data, lib, one);
  MergeRecord rec = session.step();
  return {session.library(), rec};
}

std::pair<ClusterLibrary, MergeTrace> merge_to_k(const ProfileSet& data,
                                                 const ClusterLibrary& lib,
                                                 const MergeConfig& config) {
  Merger session(data, lib, config);
  session.run();
  ClusterLibrary out = session.library();
  out.source += " | cidtw-merge k=" + std::to_string(config.k_final);
  return {out, session.trace()};
}

std::string MergeTrace::to_json() const {
  nlohmann::ordered_json j;
  j["initial_k"] = initial_k;
  j["final_k"] = final_k;
  j["tau"] = tau;
  j["merges"] = nlohmann::ordered_json::array();
  for (const auto& m : merges) {
    nlohmann::ordered_json r;
    r["iteration"] = m.iteration;
    r["left"] = m.left_id;
    r["right"] = m.right_id;
    r["distance"] = m.distance;
    r["result"] = m.result_id;
    r["size"] = m.result_size;
    j["merges"].push_back(std::move(r));
  }
  j["skips"] = nlohmann::ordered_json::array();
  for (const auto& s : skips) {
    nlohmann::ordered_json r;
    r["iteration"] = s.iteration;
    r["left"] = s.left_id;
    r["right"] = s.right_id;
    r["distance"] = s.distance;
    r["reason"] = s.reason;
    j["skips"].push_back(std::move(r));
  }
  return j.dump(2) + "\n";
}

}  // namespace loadshape
