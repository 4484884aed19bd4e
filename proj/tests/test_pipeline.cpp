#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "loadshape/errors.hpp"
#include "loadshape/evaluation.hpp"
#include "loadshape/pipeline.hpp"

using namespace loadshape;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* name) {
  fs::path dir = fs::temp_directory_path() / "loadshape_pipeline" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::size_t count_occurrences(const std::string& hay, const std::string& sub) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(sub); pos != std::string::npos;
       pos = hay.find(sub, pos + sub.size()))
    ++n;
  return n;
}

// Small synthetic run that merges 10 provisional clusters down to 4.
PipelineConfig small_config(const fs::path& out) {
  PipelineConfig c;
  c.synth.profiles = 120;
  c.synth.archetypes = 4;
  c.synth.samples_per_day = 24;
  c.synth.jitter = 1;
  c.synth.scale_min = 0.95;
  c.synth.scale_max = 1.05;
  c.synth.noise_sigma = 0.05;
  c.engine = Engine::kmeans;
  c.k_prime = 10;
  c.k_final = 4;
  c.tau = 0.5;
  c.band = 2;
  c.seed = 7;
  c.out_dir = out.string();
  return c;
}

}  // namespace

TEST_CASE("config json round-trips every field") {
  PipelineConfig c;
  c.input_csv = "";
  c.resolution_minutes = 30;
  c.normalize = true;
  c.synth.profiles = 321;
  c.synth.archetypes = 7;
  c.synth.samples_per_day = 48;
  c.synth.jitter = 3;
  c.synth.scale_min = 0.8;
  c.synth.scale_max = 1.25;
  c.synth.noise_sigma = 0.125;
  c.engine = Engine::som;
  c.k_prime = 20;
  c.k_final = 5;
  c.tau = 0.35;
  c.dba_max_iter = 7;
  c.dba_tol = 0.001;
  c.band = 5;
  c.weighted_average_merge = true;
  c.engine_params.kmeans_max_iter = 55;
  c.engine_params.som_epochs = 9;
  c.seed = 99;
  c.out_dir = "artifacts";

  const std::string text = c.to_json();
  PipelineConfig back = PipelineConfig::from_json(text);
  CHECK(back.to_json() == text);
  CHECK(back.normalize == true);
  CHECK(back.synth.profiles == 321);
  CHECK(back.synth.noise_sigma == 0.125);
  CHECK(back.engine == Engine::som);
  CHECK(back.k_prime == 20);
  CHECK(back.tau == 0.35);
  CHECK(back.band.has_value());
  CHECK(*back.band == 5);
  CHECK(back.weighted_average_merge == true);
  CHECK(back.engine_params.som_epochs == 9);
  CHECK(back.out_dir == "artifacts");

  SUBCASE("absent band serializes as null and parses back as absent") {
    c.band.reset();
    const std::string no_band = c.to_json();
    CHECK(no_band.find("\"band\": null") != std::string::npos);
    PipelineConfig again = PipelineConfig::from_json(no_band);
    CHECK(!again.band.has_value());
    CHECK(again.to_json() == no_band);
  }

  SUBCASE("missing keys keep defaults") {
    PipelineConfig sparse = PipelineConfig::from_json("{\"k_final\": 3}");
    CHECK(sparse.k_final == 3);
    CHECK(sparse.k_prime == PipelineConfig{}.k_prime);
    CHECK(sparse.tau == PipelineConfig{}.tau);
    CHECK(sparse.synth.profiles == PipelineConfig{}.synth.profiles);
  }
}

TEST_CASE("config parser rejects what it does not understand") {
  SUBCASE("unknown top-level key") {
    try {
      PipelineConfig::from_json("{\"bogus\": 1}");
      FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
      CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
  }
  SUBCASE("unknown synth key") {
    CHECK_THROWS_AS(
        PipelineConfig::from_json("{\"synth\": {\"profile_count\": 3}}"),
        std::invalid_argument);
  }
  SUBCASE("non-object top level") {
    CHECK_THROWS_AS(PipelineConfig::from_json("[1, 2]"), data_error);
  }
  SUBCASE("malformed json") {
    CHECK_THROWS_AS(PipelineConfig::from_json("{"), data_error);
  }
  SUBCASE("wrong value type") {
    CHECK_THROWS_AS(PipelineConfig::from_json("{\"k_prime\": \"ten\"}"),
                    data_error);
  }
}

TEST_CASE("config validation enforces stage ordering and ranges") {
  PipelineConfig c = small_config("unused");
  CHECK_NOTHROW(c.validate());

  PipelineConfig bad = c;
  bad.k_final = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = c;
  bad.k_final = bad.k_prime;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = c;
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.tau = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.tau = 1.0;
  CHECK_NOTHROW(bad.validate());

  bad = c;
  bad.synth.profiles = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = c;
  bad.synth.scale_min = 1.2;
  bad.synth.scale_max = 0.9;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("load_input builds the configured synthetic set deterministically") {
  PipelineConfig c = small_config("unused");
  ProfileSet a = load_input(c);
  CHECK(a.size() == 120);
  CHECK(a.samples_per_day == 24);
  CHECK(a.resolution_minutes == 60);

  ProfileSet b = load_input(c);
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a.samples(i) == b.samples(i));
}

TEST_CASE("load_input reads csv when a path is configured") {
  fs::path dir = scratch_dir("load_input_csv");
  fs::path csv = dir / "tiny.csv";
  {
    std::ofstream out(csv);
    out << "timestamp,household_id,power_kw\n";
    out << "2015-07-01T00:00:00,h1,0.5\n";
    out << "2015-07-01T06:00:00,h1,1.5\n";
    out << "2015-07-01T12:00:00,h1,2.5\n";
    out << "2015-07-01T18:00:00,h1,0.5\n";
  }
  PipelineConfig c;
  c.input_csv = csv.string();
  c.resolution_minutes = 360;
  ProfileSet set = load_input(c);
  CHECK(set.size() == 1);
  CHECK(set.samples_per_day == 4);
  CHECK(set.samples(0) == std::vector<double>{0.5, 1.5, 2.5, 0.5});

  SUBCASE("missing file is annotated with the input stage") {
    PipelineConfig broken;
    broken.input_csv = (dir / "absent.csv").string();
    try {
      load_input(broken);
      FAIL("expected data_error");
    } catch (const data_error& e) {
      CHECK(std::string(e.what()).find("input:") != std::string::npos);
    }
  }
}

TEST_CASE("two-stage run produces the full artifact set") {
  fs::path dir = scratch_dir("two_stage");
  PipelineConfig c = small_config(dir);
  TwoStageResult res = run_two_stage(c);

  CHECK(res.library.size() == 4);
  CHECK(res.library.total_profiles == 120);
  CHECK(res.trace.initial_k == 10);
  CHECK(res.trace.final_k == 4);
  CHECK(res.trace.merges.size() == 6);
  CHECK(res.report.info.method == "two-stage");
  CHECK(res.report.info.k_prime == 10);
  CHECK(res.report.clusters.size() == 4);

  std::size_t covered = 0;
  for (const auto& cl : res.library.clusters) covered += cl.members.size();
  CHECK(covered == 120);

  for (const char* name :
       {"assignments.csv", "centroids.csv", "eval.json", "eval.csv",
        "merge_trace.json", "clusters.svg", "manifest.json"})
    CHECK(fs::exists(dir / name));

  const std::string assignments = read_file(dir / "assignments.csv");
  CHECK(count_lines(assignments) == 121);  // header + one row per profile
  CHECK(assignments.rfind("profile_id,cluster_id\n", 0) == 0);

  const std::string centroids = read_file(dir / "centroids.csv");
  CHECK(count_lines(centroids) == 5);

  const std::string svg = read_file(dir / "clusters.svg");
  CHECK(count_occurrences(svg, "<polyline") == 4);  // one centroid per panel
  CHECK(count_occurrences(svg, "<polygon") == 4);

  auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  CHECK(manifest["clusters"] == 4);
  CHECK(manifest["profiles"] == 120);
  CHECK(manifest["wac"].get<double>() ==
        doctest::Approx(res.report.wac_value).epsilon(1e-12));
  auto files = manifest["files"].get<std::vector<std::string>>();
  CHECK(std::count(files.begin(), files.end(), "merge_trace.json") == 1);

  auto eval = nlohmann::json::parse(read_file(dir / "eval.json"));
  CHECK(eval["method"] == "two-stage");
  CHECK(eval["k_final"] == 4);

  auto trace = nlohmann::json::parse(read_file(dir / "merge_trace.json"));
  CHECK(trace["initial_k"] == 10);
  CHECK(trace["merges"].size() == 6);
}

TEST_CASE("overpopulating by one leaves exactly one merge") {
  fs::path dir = scratch_dir("one_merge");
  PipelineConfig c = small_config(dir);
  c.k_prime = 5;
  c.k_final = 4;
  TwoStageResult res = run_two_stage(c);
  CHECK(res.trace.merges.size() == 1);
  CHECK(res.library.size() == 4);
}

TEST_CASE("benchmark run reports mean centroids and no merge trace") {
  fs::path dir = scratch_dir("benchmark");
  PipelineConfig c = small_config(dir);
  BenchmarkResult res = run_benchmark(c);

  CHECK(res.library.size() == 4);
  CHECK(res.report.info.method == "benchmark");
  CHECK(res.report.info.k_prime == 0);
  CHECK(!fs::exists(dir / "merge_trace.json"));

  auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  auto files = manifest["files"].get<std::vector<std::string>>();
  CHECK(std::count(files.begin(), files.end(), "merge_trace.json") == 0);

  // Centroids are the plain member means.
  ProfileSet data = load_input(c);
  for (const auto& cl : res.library.clusters) {
    std::vector<double> mean(data.samples_per_day, 0.0);
    for (std::size_t m : cl.members) {
      const auto& row = data.samples(m);
      for (std::size_t t = 0; t < mean.size(); ++t) mean[t] += row[t];
    }
    for (double& v : mean) v /= static_cast<double>(cl.members.size());
    for (std::size_t t = 0; t < mean.size(); ++t)
      CHECK(cl.centroid[t] == doctest::Approx(mean[t]).epsilon(1e-12));
  }
}

TEST_CASE("single-cluster benchmark equals the cluster correlation") {
  fs::path dir = scratch_dir("benchmark_k1");
  PipelineConfig c = small_config(dir);
  c.k_final = 1;
  BenchmarkResult res = run_benchmark(c);
  CHECK(res.library.size() == 1);
  ProfileSet data = load_input(c);
  CHECK(res.report.wac_value == cluster_corr(data, res.library.clusters[0]));
  CHECK(res.report.wac_value == wac(data, res.library));
}

TEST_CASE("benchmark recovers separable archetypes with high fidelity") {
  fs::path dir = scratch_dir("benchmark_clean");
  PipelineConfig c;
  c.synth.profiles = 200;
  c.synth.archetypes = 4;
  c.synth.samples_per_day = 24;
  c.synth.jitter = 0;
  c.synth.scale_min = 0.98;
  c.synth.scale_max = 1.02;
  c.synth.noise_sigma = 0.02;
  c.engine = Engine::kmeans;
  c.k_final = 4;
  c.seed = 11;
  c.out_dir = dir.string();
  BenchmarkResult res = run_benchmark(c);
  CHECK(res.report.wac_value >= 0.95);
}

TEST_CASE("library round-trips through save and load") {
  fs::path run_dir = scratch_dir("roundtrip_run");
  PipelineConfig c = small_config(run_dir);
  TwoStageResult res = run_two_stage(c);
  ProfileSet data = load_input(c);

  fs::path lib_dir = scratch_dir("roundtrip_lib");
  save_library(res.library, lib_dir);
  ClusterLibrary loaded = load_library(data, lib_dir);

  CHECK(loaded.source == "loaded");
  REQUIRE(loaded.size() == res.library.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded.clusters[i].members == res.library.clusters[i].members);
    CHECK(loaded.clusters[i].centroid == res.library.clusters[i].centroid);
    CHECK(loaded.clusters[i].frequency ==
          doctest::Approx(res.library.clusters[i].frequency).epsilon(1e-12));
  }

  SUBCASE("loading against a different profile set fails") {
    PipelineConfig other = c;
    other.synth.profiles = 60;
    ProfileSet smaller = load_input(other);
    CHECK_THROWS_AS(load_library(smaller, lib_dir), data_error);
  }

  SUBCASE("missing assignment rows fail") {
    fs::path broken = scratch_dir("roundtrip_broken");
    {
      std::ofstream cent(broken / "centroids.csv");
      cent << "cluster_id";
      for (std::size_t t = 0; t < data.samples_per_day; ++t)
        cent << ",t_" << t;
      cent << "\n0";
      for (std::size_t t = 0; t < data.samples_per_day; ++t) cent << ",1";
      cent << "\n";
      std::ofstream assign(broken / "assignments.csv");
      assign << "profile_id,cluster_id\n0,0\n";
    }
    try {
      load_library(data, broken);
      FAIL("expected data_error");
    } catch (const data_error& e) {
      CHECK(std::string(e.what()).find("row count") != std::string::npos);
    }
  }

  SUBCASE("assignments referencing an unknown cluster fail") {
    fs::path broken = scratch_dir("roundtrip_unknown_id");
    save_library(res.library, broken);
    {
      std::ofstream assign(broken / "assignments.csv");
      assign << "profile_id,cluster_id\n";
      for (std::size_t i = 0; i < data.size(); ++i) assign << i << ",99\n";
    }
    CHECK_THROWS_AS(load_library(data, broken), data_error);
  }
}

TEST_CASE("equal configurations produce identical artifact bytes") {
  fs::path dir_a = scratch_dir("determinism_a");
  fs::path dir_b = scratch_dir("determinism_b");
  PipelineConfig a = small_config(dir_a);
  PipelineConfig b = small_config(dir_b);
  run_two_stage(a);
  run_two_stage(b);
  for (const char* name :
       {"assignments.csv", "centroids.csv", "eval.json", "eval.csv",
        "merge_trace.json", "clusters.svg", "manifest.json"})
    CHECK(read_file(dir_a / name) == read_file(dir_b / name));
}

TEST_CASE("stage failures name the failing stage") {
  fs::path dir = scratch_dir("stage_names");
  PipelineConfig c = small_config(dir);
  c.k_prime = 500;  // more clusters than profiles
  try {
    run_two_stage(c);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("overpopulate:") != std::string::npos);
  }
}
