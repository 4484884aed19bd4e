#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "loadshape/engines.hpp"
#include "loadshape/evaluation.hpp"
#include "loadshape/merging.hpp"

namespace loadshape {

// Generated-input description used when no CSV path is configured.
struct SynthSpec {
  std::size_t profiles = 2000;
  std::size_t archetypes = 12;
  std::size_t samples_per_day = 96;
  unsigned jitter = 4;        // circular shift bound, samples
  double scale_min = 0.9;
  double scale_max = 1.1;
  double noise_sigma = 0.0;   // additive Gaussian, kW
};

struct PipelineConfig {
  std::string input_csv;      // empty: generate from `synth`
  unsigned resolution_minutes = 15;
  bool normalize = false;
  SynthSpec synth;

  Engine engine = Engine::kmeans;
  std::size_t k_prime = 50;
  std::size_t k_final = 10;
  double tau = 0.2;
  std::size_t dba_max_iter = 10;
  double dba_tol = 1e-4;
  std::optional<std::size_t> band;
  bool weighted_average_merge = false;
  EngineParams engine_params;

  std::uint64_t seed = 0;
  std::string out_dir = "out";

  void validate() const;

  // Strict parse: unknown keys are rejected, missing keys keep defaults.
  static PipelineConfig from_json(const std::string& text);
  static PipelineConfig from_json_file(const std::filesystem::path& path);
  std::string to_json() const;
};

struct TwoStageResult {
  ClusterLibrary library;
  EvalReport report;
  MergeTrace trace;
};

struct BenchmarkResult {
  ClusterLibrary library;
  EvalReport report;
};

// The configured input: CSV ingest when input_csv is set, otherwise a seeded
// synthetic set.
ProfileSet load_input(const PipelineConfig& config);

// Overpopulate at K', refine every centroid with DBA, merge down to K under
// the density cap, evaluate, and persist artifacts to config.out_dir. Errors
// are annotated with the stage that raised them.
TwoStageResult run_two_stage(const PipelineConfig& config);

// Single-stage baseline: one engine run directly at K with Euclidean-mean
// centroids, evaluated and persisted the same way.
BenchmarkResult run_benchmark(const PipelineConfig& config);

// Writes assignments.csv, centroids.csv, eval.json, eval.csv, clusters.svg,
// merge_trace.json (when trace is non-null), and manifest.json. Returns the
// emitted file names. Artifact bytes depend only on the inputs, never on
// clock or location, so equal runs produce equal files.
std::vector<std::string> emit_report(const ProfileSet& data,
                                     const ClusterLibrary& lib,
                                     const EvalReport& report,
                                     const MergeTrace* trace,
                                     const std::filesystem::path& out_dir);

// Grid of per-cluster panels: shaded member envelope, centroid curve,
// frequency percentage in the title, shared 24 h axis.
std::string render_svg(const ProfileSet& data, const ClusterLibrary& lib);

// Library persistence. save writes assignments.csv + centroids.csv into dir
// (the same files emit_report produces); load rebuilds the library against
// the profile set it was computed from.
void save_library(const ClusterLibrary& lib, const std::filesystem::path& dir);
ClusterLibrary load_library(const ProfileSet& data,
                            const std::filesystem::path& dir);

}  // namespace loadshape
