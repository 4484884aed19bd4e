#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "loadshape/errors.hpp"

namespace loadshape {

struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  auto operator<=>(const Date&) const = default;
};

std::string to_string(const Date& d);  // YYYY-MM-DD

// One household-day: a fixed-length sequence of power readings in kW.
struct DailyProfile {
  std::string household_id;
  Date date;
  std::vector<double> samples;
};

// The N x T matrix of all daily profiles plus provenance metadata.
// Immutable by convention once built; safe to share across readers.
struct ProfileSet {
  std::vector<DailyProfile> profiles;
  std::size_t samples_per_day = 96;
  unsigned resolution_minutes = 15;

  std::size_t size() const { return profiles.size(); }
  const std::vector<double>& samples(std::size_t i) const {
    return profiles[i].samples;
  }

  // Enforces: N >= 1, uniform length T, finite non-negative samples,
  // resolution * T spanning exactly one day.
  void validate() const;
};

// Build a set directly from rows; T must divide 1440 minutes. Households are
// named p000000, p000001, ... on a single synthetic date. Test and generator
// convenience.
ProfileSet make_profile_set(std::vector<std::vector<double>> rows);

struct IngestConfig {
  unsigned resolution_minutes = 15;
  // Scale each profile to unit peak (shape-only clustering). Off by default:
  // peak magnitude is a first-class feature here.
  bool normalize = false;
};

struct IngestSummary {
  std::size_t profiles_kept = 0;
  std::size_t days_dropped = 0;
  std::size_t households = 0;

  nlohmann::json to_json() const;
};

// load_csv found no usable day; carries the counts it saw.
class ingest_error : public data_error {
public:
  ingest_error(const std::string& msg, IngestSummary summary)
      : data_error(msg), summary_(summary) {}

  const IngestSummary& summary() const { return summary_; }

private:
  IngestSummary summary_;
};

struct IngestResult {
  ProfileSet set;
  IngestSummary summary;
};

// Reads `timestamp,household_id,power_kw` rows into one profile per
// (household, day). Days missing readings, holding duplicate slots, or
// containing non-finite/negative power are dropped whole and counted.
// Timestamps off the resolution grid abort with an inconsistent-resolution
// error.
IngestResult load_csv(const std::filesystem::path& path,
                      const IngestConfig& config = {});

// Inverse of load_csv for complete sets; re-ingesting the output yields the
// same profile multiset.
void save_csv(const ProfileSet& set, const std::filesystem::path& path);

struct ArchetypeSpec {
  std::vector<std::vector<double>> curves;  // G curves, each of length T
  std::vector<double> weights;              // mixing weights; empty = uniform
  unsigned jitter = 0;                      // circular shift bound, in samples
  double scale_min = 1.0;
  double scale_max = 1.0;
  double noise_sigma = 0.0;                 // additive Gaussian, kW
};

struct SynthResult {
  ProfileSet set;
  std::vector<std::size_t> labels;  // ground-truth archetype per profile
};

// Deterministic for a fixed seed. Each profile is one archetype, circularly
// time-shifted by uniform jitter, amplitude-scaled, plus noise, clamped at 0.
SynthResult synth_generate(const ArchetypeSpec& spec, std::size_t n_profiles,
                           std::uint64_t seed);

// A bank of distinct daily-shape curves: single peaks at different hours and
// magnitudes, double peaks, flats, a midday dip, a day-long plateau. Beyond
// 12 the bank repeats with scaled amplitude.
std::vector<std::vector<double>> make_archetypes(std::size_t g, std::size_t t);

}  // namespace loadshape
