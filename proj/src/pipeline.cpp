#include "loadshape/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "loadshape/cvi.hpp"
#include "loadshape/dba.hpp"
#include "loadshape/errors.hpp"
#include "loadshape/format.hpp"

namespace loadshape {

namespace {

using nlohmann::ordered_json;

// Re-raise stage errors with the stage name while keeping the type (the CLI
// maps types to exit codes).
template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  auto tag = [&](const char* what) {
    return std::string(name) + ": " + what;
  };
  try {
    return f();
  } catch (const merge_exhausted& e) {
    throw merge_exhausted(tag(e.what()), e.k_reached());
  } catch (const numeric_error& e) {
    throw numeric_error(tag(e.what()));
  } catch (const ingest_error& e) {
    throw ingest_error(tag(e.what()), e.summary());
  } catch (const data_error& e) {
    throw data_error(tag(e.what()));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(tag(e.what()));
  }
}

void expect_keys(const nlohmann::json& obj, const char* where,
                 std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument(std::string("config: unknown key \"") +
                                  it.key() + "\" in " + where);
  }
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double_field(const std::string& s, const char* where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw data_error(std::string(where) + ": bad number \"" + s + "\"");
  return v;
}

std::size_t parse_size_field(const std::string& s, const char* where) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw data_error(std::string(where) + ": bad index \"" + s + "\"");
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw data_error("write failed: " + path.string());
}

void write_assignments(const ClusterLibrary& lib,
                       const std::filesystem::path& path) {
  std::vector<std::size_t> owner(lib.total_profiles, 0);
  for (std::size_t c = 0; c < lib.size(); ++c)
    for (std::size_t m : lib.clusters[c].members) owner[m] = c;
  std::ostringstream out;
  out << "profile_id,cluster_id\n";
  for (std::size_t i = 0; i < owner.size(); ++i)
    out << i << ',' << owner[i] << '\n';
  write_text(path, out.str());
}

void write_centroids(const ClusterLibrary& lib,
                     const std::filesystem::path& path) {
  std::ostringstream out;
  out << "cluster_id";
  const std::size_t t =
      lib.clusters.empty() ? 0 : lib.clusters.front().centroid.size();
  for (std::size_t s = 0; s < t; ++s) out << ",t_" << s;
  out << '\n';
  for (std::size_t c = 0; c < lib.size(); ++c) {
    out << c;
    for (double v : lib.clusters[c].centroid) out << ',' << format_double(v);
    out << '\n';
  }
  write_text(path, out.str());
}

std::vector<double> member_mean(const ProfileSet& data,
                                const std::vector<std::size_t>& members) {
  std::vector<double> mean(data.samples_per_day, 0.0);
  for (std::size_t m : members) {
    auto row = data.samples(m);
    for (std::size_t t = 0; t < mean.size(); ++t) mean[t] += row[t];
  }
  for (double& v : mean) v /= static_cast<double>(members.size());
  return mean;
}

}  // namespace

void PipelineConfig::validate() const {
  if (k_final < 1) throw std::invalid_argument("config: k_final must be >= 1");
  if (k_final >= k_prime)
    throw std::invalid_argument("config: k_final must be below k_prime");
  if (!(tau > 0.0 && tau <= 1.0))
    throw std::invalid_argument("config: tau must lie in (0,1]");
  if (input_csv.empty()) {
    if (synth.profiles == 0 || synth.archetypes == 0)
      throw std::invalid_argument("config: synth needs profiles and archetypes");
    if (!(synth.scale_min <= synth.scale_max) || synth.scale_min <= 0.0)
      throw std::invalid_argument("config: bad synth scale range");
  }
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw data_error(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw data_error("config: top level must be an object");

  expect_keys(j, "config",
              {"input_csv", "resolution_minutes", "normalize", "synth",
               "engine", "k_prime", "k_final", "tau", "dba_max_iter",
               "dba_tol", "band", "weighted_average_merge", "kmeans_max_iter",
               "som_epochs", "seed", "out"});

  PipelineConfig c;
  try {
    if (j.contains("input_csv")) c.input_csv = j["input_csv"].get<std::string>();
    if (j.contains("resolution_minutes"))
      c.resolution_minutes = j["resolution_minutes"].get<unsigned>();
    if (j.contains("normalize")) c.normalize = j["normalize"].get<bool>();
    if (j.contains("synth")) {
      const auto& s = j["synth"];
      expect_keys(s, "synth",
                  {"profiles", "archetypes", "samples_per_day", "jitter",
                   "scale_min", "scale_max", "noise_sigma"});
      if (s.contains("profiles"))
        c.synth.profiles = s["profiles"].get<std::size_t>();
      if (s.contains("archetypes"))
        c.synth.archetypes = s["archetypes"].get<std::size_t>();
      if (s.contains("samples_per_day"))
        c.synth.samples_per_day = s["samples_per_day"].get<std::size_t>();
      if (s.contains("jitter")) c.synth.jitter = s["jitter"].get<unsigned>();
      if (s.contains("scale_min"))
        c.synth.scale_min = s["scale_min"].get<double>();
      if (s.contains("scale_max"))
        c.synth.scale_max = s["scale_max"].get<double>();
      if (s.contains("noise_sigma"))
        c.synth.noise_sigma = s["noise_sigma"].get<double>();
    }
    if (j.contains("engine"))
      c.engine = parse_engine(j["engine"].get<std::string>());
    if (j.contains("k_prime")) c.k_prime = j["k_prime"].get<std::size_t>();
    if (j.contains("k_final")) c.k_final = j["k_final"].get<std::size_t>();
    if (j.contains("tau")) c.tau = j["tau"].get<double>();
    if (j.contains("dba_max_iter"))
      c.dba_max_iter = j["dba_max_iter"].get<std::size_t>();
    if (j.contains("dba_tol")) c.dba_tol = j["dba_tol"].get<double>();
    if (j.contains("band") && !j["band"].is_null())
      c.band = j["band"].get<std::size_t>();
    if (j.contains("weighted_average_merge"))
      c.weighted_average_merge = j["weighted_average_merge"].get<bool>();
    if (j.contains("kmeans_max_iter"))
      c.engine_params.kmeans_max_iter = j["kmeans_max_iter"].get<std::size_t>();
    if (j.contains("som_epochs"))
      c.engine_params.som_epochs = j["som_epochs"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  } catch (const nlohmann::json::type_error& e) {
    throw data_error(std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::from_json_file(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string PipelineConfig::to_json() const {
  ordered_json j;
  j["input_csv"] = input_csv;
  j["resolution_minutes"] = resolution_minutes;
  j["normalize"] = normalize;
  j["synth"] = {{"profiles", synth.profiles},
                {"archetypes", synth.archetypes},
                {"samples_per_day", synth.samples_per_day},
                {"jitter", synth.jitter},
                {"scale_min", synth.scale_min},
                {"scale_max", synth.scale_max},
                {"noise_sigma", synth.noise_sigma}};
  j["engine"] = engine_name(engine);
  j["k_prime"] = k_prime;
  j["k_final"] = k_final;
  j["tau"] = tau;
  j["dba_max_iter"] = dba_max_iter;
  j["dba_tol"] = dba_tol;
  if (band)
    j["band"] = *band;
  else
    j["band"] = nullptr;
  j["weighted_average_merge"] = weighted_average_merge;
  j["kmeans_max_iter"] = engine_params.kmeans_max_iter;
  j["som_epochs"] = engine_params.som_epochs;
  j["seed"] = seed;
  j["out"] = out_dir;
  return j.dump(2) + "\n";
}

ProfileSet load_input(const PipelineConfig& config) {
  return stage("input", [&] {
    if (!config.input_csv.empty()) {
      IngestConfig ic;
      ic.resolution_minutes = config.resolution_minutes;
      ic.normalize = config.normalize;
      return load_csv(config.input_csv, ic).set;
    }
    ArchetypeSpec spec;
    spec.curves =
        make_archetypes(config.synth.archetypes, config.synth.samples_per_day);
    spec.jitter = config.synth.jitter;
    spec.scale_min = config.synth.scale_min;
    spec.scale_max = config.synth.scale_max;
    spec.noise_sigma = config.synth.noise_sigma;
    return synth_generate(spec, config.synth.profiles, config.seed).set;
  });
}

std::string render_svg(const ProfileSet& data, const ClusterLibrary& lib) {
  const std::size_t k = lib.size();
  const std::size_t t = data.samples_per_day;
  const std::size_t cols =
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(k))));
  const std::size_t rows = (k + cols - 1) / cols;

  const double panel_w = 220.0, panel_h = 130.0;
  const double pad_l = 10.0, pad_r = 8.0, pad_t = 24.0, pad_b = 12.0;
  const double plot_w = panel_w - pad_l - pad_r;
  const double plot_h = panel_h - pad_t - pad_b;
  const double width = static_cast<double>(cols) * panel_w;
  const double height = static_cast<double>(rows) * panel_h;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"#ffffff\"/>\n";

  for (std::size_t c = 0; c < k; ++c) {
    const Cluster& cluster = lib.clusters[c];
    const double ox = static_cast<double>(c % cols) * panel_w;
    const double oy = static_cast<double>(c / cols) * panel_h;

    std::vector<double> lo(t, std::numeric_limits<double>::infinity());
    std::vector<double> hi(t, -std::numeric_limits<double>::infinity());
    for (std::size_t m : cluster.members) {
      auto row = data.samples(m);
      for (std::size_t s = 0; s < t; ++s) {
        lo[s] = std::min(lo[s], row[s]);
        hi[s] = std::max(hi[s], row[s]);
      }
    }
    double y_max = 0.0;
    for (std::size_t s = 0; s < t; ++s) {
      y_max = std::max(y_max, hi[s]);
      y_max = std::max(y_max, cluster.centroid[s]);
    }
    if (y_max <= 0.0) y_max = 1.0;

    auto x_at = [&](std::size_t s) {
      return ox + pad_l +
             plot_w * static_cast<double>(s) / static_cast<double>(t - 1);
    };
    auto y_at = [&](double v) { return oy + pad_t + plot_h * (1.0 - v / y_max); };

    svg << "<rect x=\"" << fmt2(ox + pad_l) << "\" y=\"" << fmt2(oy + pad_t)
        << "\" width=\"" << fmt2(plot_w) << "\" height=\"" << fmt2(plot_h)
        << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";

    // Quarter-day guides: a shared 24 h axis across every panel.
    for (int q = 1; q < 4; ++q) {
      double gx = ox + pad_l + plot_w * q / 4.0;
      svg << "<line x1=\"" << fmt2(gx) << "\" y1=\"" << fmt2(oy + pad_t)
          << "\" x2=\"" << fmt2(gx) << "\" y2=\"" << fmt2(oy + pad_t + plot_h)
          << "\" stroke=\"#eeeeee\"/>\n";
    }

    svg << "<polygon fill=\"#cfe0f5\" stroke=\"none\" points=\"";
    for (std::size_t s = 0; s < t; ++s)
      svg << fmt2(x_at(s)) << ',' << fmt2(y_at(hi[s])) << ' ';
    for (std::size_t s = t; s-- > 0;)
      svg << fmt2(x_at(s)) << ',' << fmt2(y_at(lo[s])) << ' ';
    svg << "\"/>\n";

    svg << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" "
           "points=\"";
    for (std::size_t s = 0; s < t; ++s)
      svg << fmt2(x_at(s)) << ',' << fmt2(y_at(cluster.centroid[s])) << ' ';
    svg << "\"/>\n";

    svg << "<text x=\"" << fmt2(ox + pad_l) << "\" y=\"" << fmt2(oy + 16.0)
        << "\" font-family=\"sans-serif\" font-size=\"11\">C" << c << " ("
        << fmt1(cluster.frequency * 100.0) << "%)</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void save_library(const ClusterLibrary& lib, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_assignments(lib, dir / "assignments.csv");
  write_centroids(lib, dir / "centroids.csv");
}

ClusterLibrary load_library(const ProfileSet& data,
                            const std::filesystem::path& dir) {
  const auto centroid_path = dir / "centroids.csv";
  std::ifstream cin(centroid_path);
  if (!cin) throw data_error("cannot open " + centroid_path.string());
  std::string line;
  if (!std::getline(cin, line))
    throw data_error("centroids.csv: empty file");
  std::map<std::size_t, Cluster> by_id;
  while (std::getline(cin, line)) {
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != data.samples_per_day + 1)
      throw data_error("centroids.csv: wrong column count");
    std::size_t id = parse_size_field(fields[0], "centroids.csv");
    Cluster cl;
    cl.centroid.reserve(data.samples_per_day);
    for (std::size_t i = 1; i < fields.size(); ++i)
      cl.centroid.push_back(parse_double_field(fields[i], "centroids.csv"));
    if (!by_id.emplace(id, std::move(cl)).second)
      throw data_error("centroids.csv: duplicate cluster id");
  }
  if (by_id.empty()) throw data_error("centroids.csv: no clusters");

  const auto assign_path = dir / "assignments.csv";
  std::ifstream ain(assign_path);
  if (!ain) throw data_error("cannot open " + assign_path.string());
  if (!std::getline(ain, line))
    throw data_error("assignments.csv: empty file");
  std::size_t rows = 0;
  while (std::getline(ain, line)) {
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != 2)
      throw data_error("assignments.csv: expected profile_id,cluster_id");
    std::size_t profile = parse_size_field(fields[0], "assignments.csv");
    std::size_t id = parse_size_field(fields[1], "assignments.csv");
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw data_error("assignments.csv: unknown cluster id");
    if (profile >= data.size())
      throw data_error("assignments.csv: profile id out of range");
    it->second.members.push_back(profile);
    ++rows;
  }
  if (rows != data.size())
    throw data_error("assignments.csv: row count does not match profile set");

  ClusterLibrary lib;
  lib.total_profiles = data.size();
  lib.source = "loaded";
  for (auto& [id, cl] : by_id) {
    std::sort(cl.members.begin(), cl.members.end());
    cl.frequency = static_cast<double>(cl.members.size()) /
                   static_cast<double>(data.size());
    lib.clusters.push_back(std::move(cl));
  }
  lib.validate(data);
  return lib;
}

std::vector<std::string> emit_report(const ProfileSet& data,
                                     const ClusterLibrary& lib,
                                     const EvalReport& report,
                                     const MergeTrace* trace,
                                     const std::filesystem::path& out_dir) {
  return stage("emit", [&]() -> std::vector<std::string> {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> files;

    write_assignments(lib, out_dir / "assignments.csv");
    files.emplace_back("assignments.csv");
    write_centroids(lib, out_dir / "centroids.csv");
    files.emplace_back("centroids.csv");
    write_text(out_dir / "eval.json", report.to_json());
    files.emplace_back("eval.json");
    report.write_csv(out_dir / "eval.csv");
    files.emplace_back("eval.csv");
    if (trace) {
      write_text(out_dir / "merge_trace.json", trace->to_json());
      files.emplace_back("merge_trace.json");
    }
    write_text(out_dir / "clusters.svg", render_svg(data, lib));
    files.emplace_back("clusters.svg");

    ordered_json manifest;
    manifest["files"] = files;
    manifest["clusters"] = lib.size();
    manifest["profiles"] = lib.total_profiles;
    manifest["wac"] = report.wac_value;
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    files.emplace_back("manifest.json");
    return files;
  });
}

TwoStageResult run_two_stage(const PipelineConfig& config) {
  config.validate();
  ProfileSet data = load_input(config);

  ClusterLibrary lib = stage("overpopulate", [&] {
    return overpopulate(data, config.engine, config.k_prime, config.seed,
                        config.engine_params);
  });

  stage("dba", [&] {
    DbaOptions opts;
    opts.max_iter = config.dba_max_iter;
    opts.tol = config.dba_tol;
    opts.band = config.band;
    for (auto& cluster : lib.clusters)
      cluster.centroid = dba(gather(data, cluster.members), opts);
    return 0;
  });

  MergeConfig mc;
  mc.k_final = config.k_final;
  mc.tau = config.tau;
  mc.band = config.band;
  mc.dba_max_iter = config.dba_max_iter;
  mc.dba_tol = config.dba_tol;
  mc.weighted_average = config.weighted_average_merge;
  auto [merged, trace] =
      stage("merge", [&] { return merge_to_k(data, lib, mc); });

  RunInfo info;
  info.method = "two-stage";
  info.engine = engine_name(config.engine);
  info.k_prime = config.k_prime;
  info.k_final = config.k_final;
  info.tau = config.tau;
  info.seed = config.seed;
  EvalReport report =
      stage("evaluate", [&] { return evaluate(data, merged, info); });

  emit_report(data, merged, report, &trace, config.out_dir);
  return {std::move(merged), std::move(report), std::move(trace)};
}

BenchmarkResult run_benchmark(const PipelineConfig& config) {
  // The baseline ignores k_prime and tau, so only the fields it reads are
  // validated here.
  if (config.k_final < 1)
    throw std::invalid_argument("config: k_final must be >= 1");
  if (config.input_csv.empty() &&
      (config.synth.profiles == 0 || config.synth.archetypes == 0))
    throw std::invalid_argument("config: synth needs profiles and archetypes");
  ProfileSet data = load_input(config);

  ClusterLibrary lib = stage("cluster", [&] {
    ClusterLibrary l = overpopulate(data, config.engine, config.k_final,
                                    config.seed, config.engine_params);
    // The baseline reports plain Euclidean-mean centroids regardless of the
    // engine's internal representative.
    for (auto& cluster : l.clusters)
      cluster.centroid = member_mean(data, cluster.members);
    return l;
  });

  RunInfo info;
  info.method = "benchmark";
  info.engine = engine_name(config.engine);
  info.k_prime = 0;
  info.k_final = config.k_final;
  info.tau = 0.0;
  info.seed = config.seed;
  EvalReport report =
      stage("evaluate", [&] { return evaluate(data, lib, info); });

  emit_report(data, lib, report, nullptr, config.out_dir);
  return {std::move(lib), std::move(report)};
}

}  // namespace loadshape
