#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "loadshape/cvi.hpp"
#include "loadshape/dataset.hpp"
#include "loadshape/errors.hpp"
#include "loadshape/pipeline.hpp"

namespace {

using loadshape::PipelineConfig;

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw loadshape::data_error("cannot open " + path.string() +
                                " for writing");
  out << text;
  if (!out) throw loadshape::data_error("write failed: " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage segmentation of daily electricity load profiles"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  app.add_option("--config", config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  unsigned resolution = 0;
  bool normalize = false;
  auto* res_opt =
      app.add_option("--resolution", resolution, "CSV sampling interval, minutes");
  auto* norm_opt =
      app.add_flag("--normalize", normalize, "scale each profile to unit peak");

  std::string input_csv;
  std::string engine_name_arg;
  std::size_t k_prime = 0, k_final = 0;
  double tau = 0.0;
  std::size_t band = 0;
  std::size_t dba_max_iter = 0;
  double dba_tol = 0.0;
  bool weighted_average = false;
  std::string lib_dir;

  auto* ingest = app.add_subcommand("ingest", "load and validate a meter CSV");
  ingest->add_option("--input", input_csv, "meter CSV path")->required();

  std::size_t synth_profiles = 0, synth_archetypes = 0, synth_t = 0;
  unsigned synth_jitter = 0;
  double scale_min = 0.0, scale_max = 0.0, noise_sigma = -1.0;
  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic set");
  synth->add_option("--profiles", synth_profiles, "profile count");
  synth->add_option("--archetypes", synth_archetypes, "archetype count");
  synth->add_option("--samples-per-day", synth_t, "samples per day");
  synth->add_option("--jitter", synth_jitter, "circular shift bound, samples");
  synth->add_option("--scale-min", scale_min, "amplitude scale lower bound");
  synth->add_option("--scale-max", scale_max, "amplitude scale upper bound");
  synth->add_option("--noise-sigma", noise_sigma, "additive noise sigma, kW");

  std::vector<std::size_t> k_list;
  auto* sweep_cmd = app.add_subcommand("sweep", "cluster across K, tabulate CVIs");
  sweep_cmd->add_option("--input", input_csv, "meter CSV path (default: synth)");
  sweep_cmd->add_option("--engine", engine_name_arg, "kmeans | som | hierarchical");
  sweep_cmd
      ->add_option("--k", k_list, "K values, strictly increasing")
      ->delimiter(',');

  auto* cluster_cmd =
      app.add_subcommand("cluster", "single-stage baseline at K");
  cluster_cmd->add_option("--input", input_csv, "meter CSV path (default: synth)");
  cluster_cmd->add_option("--engine", engine_name_arg, "kmeans | som | hierarchical");
  cluster_cmd->add_option("--k-final", k_final, "cluster count");

  auto* two_stage_cmd =
      app.add_subcommand("two-stage", "overpopulate, average, merge to K");
  two_stage_cmd->add_option("--input", input_csv, "meter CSV path (default: synth)");
  two_stage_cmd->add_option("--engine", engine_name_arg,
                            "kmeans | som | hierarchical");
  two_stage_cmd->add_option("--k-prime", k_prime, "stage-1 cluster count");
  two_stage_cmd->add_option("--k-final", k_final, "final cluster count");
  two_stage_cmd->add_option("--tau", tau, "density cap share in (0,1]");
  auto* band_opt =
      two_stage_cmd->add_option("--band", band, "warping band half-width");
  two_stage_cmd->add_option("--dba-max-iter", dba_max_iter,
                            "barycenter refinement iterations");
  two_stage_cmd->add_option("--dba-tol", dba_tol,
                            "barycenter relative improvement cutoff");
  two_stage_cmd->add_flag("--weighted-average-merge", weighted_average,
                          "average parent centroids instead of re-running DBA");

  auto* eval_cmd = app.add_subcommand("evaluate", "score a stored library");
  eval_cmd->add_option("--input", input_csv, "meter CSV path (default: synth)");
  eval_cmd->add_option("--lib", lib_dir, "directory holding assignments.csv + centroids.csv")
      ->required();

  auto* render_cmd = app.add_subcommand("render", "draw cluster panels as SVG");
  render_cmd->add_option("--input", input_csv, "meter CSV path (default: synth)");
  render_cmd->add_option("--lib", lib_dir, "directory holding assignments.csv + centroids.csv")
      ->required();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    PipelineConfig config;
    if (!config_path.empty())
      config = PipelineConfig::from_json_file(config_path);
    if (seed_opt->count() > 0) config.seed = seed;
    if (out_opt->count() > 0) config.out_dir = out_dir;
    if (res_opt->count() > 0) config.resolution_minutes = resolution;
    if (norm_opt->count() > 0) config.normalize = true;
    const std::filesystem::path out(config.out_dir);

    if (*ingest) {
      loadshape::IngestConfig ic;
      ic.resolution_minutes = config.resolution_minutes;
      ic.normalize = config.normalize;
      try {
        auto result = loadshape::load_csv(input_csv, ic);
        std::filesystem::create_directories(out);
        loadshape::save_csv(result.set, out / "profiles.csv");
        write_text_file(out / "ingest_summary.json",
                        result.summary.to_json().dump(2) + "\n");
        std::cout << result.summary.to_json().dump(2) << "\n";
      } catch (const loadshape::ingest_error& e) {
        std::cout << e.summary().to_json().dump(2) << "\n";
        throw;
      }
      return 0;
    }

    if (*synth) {
      if (synth->count("--profiles")) config.synth.profiles = synth_profiles;
      if (synth->count("--archetypes"))
        config.synth.archetypes = synth_archetypes;
      if (synth->count("--samples-per-day"))
        config.synth.samples_per_day = synth_t;
      if (synth->count("--jitter")) config.synth.jitter = synth_jitter;
      if (synth->count("--scale-min")) config.synth.scale_min = scale_min;
      if (synth->count("--scale-max")) config.synth.scale_max = scale_max;
      if (synth->count("--noise-sigma")) config.synth.noise_sigma = noise_sigma;

      loadshape::ArchetypeSpec spec;
      spec.curves = loadshape::make_archetypes(config.synth.archetypes,
                                               config.synth.samples_per_day);
      spec.jitter = config.synth.jitter;
      spec.scale_min = config.synth.scale_min;
      spec.scale_max = config.synth.scale_max;
      spec.noise_sigma = config.synth.noise_sigma;
      auto result = loadshape::synth_generate(spec, config.synth.profiles,
                                              config.seed);

      std::filesystem::create_directories(out);
      loadshape::save_csv(result.set, out / "synth.csv");
      std::string labels = "profile_id,archetype\n";
      for (std::size_t i = 0; i < result.labels.size(); ++i)
        labels += std::to_string(i) + "," + std::to_string(result.labels[i]) +
                  "\n";
      write_text_file(out / "labels.csv", labels);

      nlohmann::ordered_json j;
      j["profiles"] = result.set.size();
      j["archetypes"] = config.synth.archetypes;
      j["samples_per_day"] = result.set.samples_per_day;
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (!input_csv.empty()) config.input_csv = input_csv;
    if (!engine_name_arg.empty())
      config.engine = loadshape::parse_engine(engine_name_arg);

    if (*sweep_cmd) {
      if (k_list.empty()) k_list = {4, 8, 12, 16, 20, 30, 40};
      loadshape::ProfileSet data = loadshape::load_input(config);
      loadshape::CviReport report = loadshape::sweep(
          data, config.engine, k_list, config.seed, config.engine_params);
      std::filesystem::create_directories(out);
      report.write_csv(out / "cvi_report.csv");

      nlohmann::ordered_json j;
      try {
        j["elbow_k"] = loadshape::elbow_k(report);
      } catch (const loadshape::numeric_error&) {
        j["elbow_k"] = nullptr;
      }
      j["report"] = "cvi_report.csv";
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*cluster_cmd) {
      if (cluster_cmd->count("--k-final")) config.k_final = k_final;
      auto result = loadshape::run_benchmark(config);
      nlohmann::ordered_json j;
      j["method"] = "benchmark";
      j["k"] = result.library.size();
      j["wac"] = result.report.wac_value;
      j["wcss"] = result.report.wcss_value;
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*two_stage_cmd) {
      if (two_stage_cmd->count("--k-prime")) config.k_prime = k_prime;
      if (two_stage_cmd->count("--k-final")) config.k_final = k_final;
      if (two_stage_cmd->count("--tau")) config.tau = tau;
      if (band_opt->count() > 0) config.band = band;
      if (two_stage_cmd->count("--dba-max-iter"))
        config.dba_max_iter = dba_max_iter;
      if (two_stage_cmd->count("--dba-tol")) config.dba_tol = dba_tol;
      if (weighted_average) config.weighted_average_merge = true;

      auto result = loadshape::run_two_stage(config);
      nlohmann::ordered_json j;
      j["method"] = "two-stage";
      j["k_prime"] = config.k_prime;
      j["k"] = result.library.size();
      j["merges"] = result.trace.merges.size();
      j["skips"] = result.trace.skips.size();
      j["wac"] = result.report.wac_value;
      j["wcss"] = result.report.wcss_value;
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*eval_cmd) {
      loadshape::ProfileSet data = loadshape::load_input(config);
      loadshape::ClusterLibrary lib = loadshape::load_library(data, lib_dir);
      loadshape::RunInfo info;
      info.method = "stored";
      info.engine = "";
      info.k_final = lib.size();
      info.seed = config.seed;
      loadshape::EvalReport report = loadshape::evaluate(data, lib, info);
      std::filesystem::create_directories(out);
      write_text_file(out / "eval.json", report.to_json());
      report.write_csv(out / "eval.csv");
      std::cout << report.to_json();
      return 0;
    }

    if (*render_cmd) {
      loadshape::ProfileSet data = loadshape::load_input(config);
      loadshape::ClusterLibrary lib = loadshape::load_library(data, lib_dir);
      std::filesystem::create_directories(out);
      write_text_file(out / "clusters.svg", loadshape::render_svg(data, lib));
      nlohmann::ordered_json j;
      j["file"] = "clusters.svg";
      j["clusters"] = lib.size();
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const loadshape::merge_exhausted& e) {
    std::cerr << "error: " << e.what() << " (reached K=" << e.k_reached()
              << ")\n";
    return 3;
  } catch (const loadshape::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const loadshape::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
