#include "loadshape/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "loadshape/cvi.hpp"
#include "loadshape/errors.hpp"
#include "loadshape/format.hpp"

namespace loadshape {

namespace {

nlohmann::ordered_json report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["method"] = r.info.method;
  j["engine"] = r.info.engine;
  j["k_prime"] = r.info.k_prime;
  j["k_final"] = r.info.k_final;
  j["tau"] = r.info.tau;
  j["seed"] = r.info.seed;
  j["clusters"] = nlohmann::ordered_json::array();
  for (const auto& c : r.clusters) {
    nlohmann::ordered_json e;
    e["cluster_id"] = c.cluster_id;
    e["size"] = c.size;
    e["frequency"] = c.frequency;
    e["corr"] = c.corr;
    j["clusters"].push_back(std::move(e));
  }
  j["wac"] = r.wac_value;
  j["wcss"] = r.wcss_value;
  return j;
}

double relative_delta_pct(double value, double reference) {
  if (reference == 0.0)
    return value == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  return (value - reference) / std::fabs(reference) * 100.0;
}

}  // namespace

namespace {

// Constant up to accumulated rounding: a run of identical values can leave
// residue near 1e-17 after mean subtraction, and correlating that noise
// yields a meaningless +-1.
bool effectively_constant(std::span<const double> x) {
  auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  double scale = std::max(std::fabs(*lo), std::fabs(*hi));
  return (*hi - *lo) <= 1e-12 * scale;
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("pearson: length mismatch");
  if (a.size() < 2)
    throw std::invalid_argument("pearson: need at least 2 samples");

  if (effectively_constant(a) || effectively_constant(b)) {
    bool both = effectively_constant(a) && effectively_constant(b);
    return both && std::equal(a.begin(), a.end(), b.begin()) ? 1.0 : 0.0;
  }

  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;

  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - ma;
    double db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double cluster_corr(const ProfileSet& data, const Cluster& cluster) {
  if (cluster.members.empty())
    throw data_error("cluster_corr: cluster with no members");
  if (cluster.centroid.size() != data.samples_per_day)
    throw data_error("cluster_corr: centroid length != samples_per_day");
  double sum = 0.0;
  for (std::size_t m : cluster.members) {
    if (m >= data.size())
      throw data_error("cluster_corr: member index out of range");
    sum += pearson(data.samples(m), cluster.centroid);
  }
  return sum / static_cast<double>(cluster.members.size());
}

double wac(const ProfileSet& data, const ClusterLibrary& lib) {
  lib.validate(data);
  double weighted = 0.0;
  for (const auto& cluster : lib.clusters)
    weighted += static_cast<double>(cluster.members.size()) *
                cluster_corr(data, cluster);
  return weighted / static_cast<double>(lib.total_profiles);
}

EvalReport evaluate(const ProfileSet& data, const ClusterLibrary& lib,
                    const RunInfo& info) {
  lib.validate(data);
  EvalReport report;
  report.info = info;
  report.clusters.reserve(lib.size());
  double weighted = 0.0;
  for (std::size_t c = 0; c < lib.size(); ++c) {
    const Cluster& cluster = lib.clusters[c];
    ClusterEval e;
    e.cluster_id = c;
    e.size = cluster.members.size();
    e.frequency = cluster.frequency;
    e.corr = cluster_corr(data, cluster);
    weighted += static_cast<double>(e.size) * e.corr;
    report.clusters.push_back(e);
  }
  report.wac_value = weighted / static_cast<double>(lib.total_profiles);
  report.wcss_value = wcss(data, lib);
  return report;
}

std::string EvalReport::to_json() const {
  return report_json(*this).dump(2) + "\n";
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open " + path.string() + " for writing");
  out << "cluster_id,size,frequency,corr\n";
  std::size_t n = 0;
  for (const auto& c : clusters) {
    out << c.cluster_id << ',' << c.size << ',' << format_double(c.frequency)
        << ',' << format_double(c.corr) << '\n';
    n += c.size;
  }
  out << "summary," << n << ",1," << format_double(wac_value) << '\n';
  if (!out) throw data_error("write failed: " + path.string());
}

Comparison compare(const ProfileSet& data, const ClusterLibrary& two_stage,
                   const RunInfo& two_stage_info,
                   const ClusterLibrary& benchmark,
                   const RunInfo& benchmark_info) {
  Comparison cmp;
  cmp.two_stage = evaluate(data, two_stage, two_stage_info);
  cmp.benchmark = evaluate(data, benchmark, benchmark_info);
  cmp.k_mismatch = two_stage.size() != benchmark.size();
  cmp.delta_wac_pct =
      relative_delta_pct(cmp.two_stage.wac_value, cmp.benchmark.wac_value);
  cmp.delta_wcss_pct =
      relative_delta_pct(cmp.two_stage.wcss_value, cmp.benchmark.wcss_value);
  return cmp;
}

std::string Comparison::to_json() const {
  nlohmann::ordered_json j;
  j["two_stage"] = report_json(two_stage);
  j["benchmark"] = report_json(benchmark);
  j["delta_wac_pct"] = delta_wac_pct;
  j["delta_wcss_pct"] = delta_wcss_pct;
  j["k_mismatch"] = k_mismatch;
  return j.dump(2) + "\n";
}

}  // namespace loadshape
