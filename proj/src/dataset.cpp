#include "loadshape/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "loadshape/format.hpp"
#include "loadshape/rng.hpp"

namespace loadshape {

namespace {

constexpr unsigned kMinutesPerDay = 1440;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

struct Timestamp {
  Date date;
  unsigned minute_of_day = 0;
};

bool parse_uint_field(const std::string& s, std::size_t pos, std::size_t len,
                      unsigned& out) {
  out = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (i >= s.size() || s[i] < '0' || s[i] > '9') return false;
    out = out * 10 + static_cast<unsigned>(s[i] - '0');
  }
  return true;
}

// ISO-8601: YYYY-MM-DD[T ]HH:MM[:SS]. A trailing zone designator is accepted
// and ignored; days are bucketed in local time as given.
bool parse_timestamp(const std::string& raw, Timestamp& out) {
  const std::string s = trim(raw);
  if (s.size() < 16) return false;
  unsigned y, mo, da, hh, mm, ss = 0;
  if (!parse_uint_field(s, 0, 4, y) || s[4] != '-' ||
      !parse_uint_field(s, 5, 2, mo) || s[7] != '-' ||
      !parse_uint_field(s, 8, 2, da)) {
    return false;
  }
  if (s[10] != 'T' && s[10] != ' ') return false;
  if (!parse_uint_field(s, 11, 2, hh) || s[13] != ':' ||
      !parse_uint_field(s, 14, 2, mm)) {
    return false;
  }
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    if (!parse_uint_field(s, pos + 1, 2, ss)) return false;
    pos += 3;
  }
  if (pos < s.size()) {
    // zone designator: Z or +HH:MM / -HH:MM
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      // ok
    } else if ((s[pos] == '+' || s[pos] == '-') && s.size() - pos >= 3) {
      // ok, ignored
    } else {
      return false;
    }
  }
  if (mo < 1 || mo > 12 || da < 1 || da > 31 || hh > 23 || mm > 59 || ss > 59) {
    return false;
  }
  out.date = Date{static_cast<int>(y), mo, da};
  out.minute_of_day = hh * 60 + mm;
  return true;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::string to_string(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", d.year, d.month, d.day);
  return buf;
}

void ProfileSet::validate() const {
  if (profiles.empty()) {
    throw data_error("profile set is empty");
  }
  if (samples_per_day < 1 ||
      static_cast<unsigned long>(resolution_minutes) * samples_per_day !=
          kMinutesPerDay) {
    throw data_error("resolution_minutes * samples_per_day must cover one day");
  }
  for (const auto& p : profiles) {
    if (p.samples.size() != samples_per_day) {
      throw data_error("profile " + p.household_id + "/" + to_string(p.date) +
                       ": length != samples_per_day");
    }
    for (double v : p.samples) {
      if (!std::isfinite(v) || v < 0.0) {
        throw data_error("profile " + p.household_id + "/" + to_string(p.date) +
                         ": non-finite or negative sample");
      }
    }
  }
}

ProfileSet make_profile_set(std::vector<std::vector<double>> rows) {
  if (rows.empty()) {
    throw std::invalid_argument("make_profile_set: no rows");
  }
  const std::size_t t = rows.front().size();
  if (t == 0 || kMinutesPerDay % t != 0) {
    throw std::invalid_argument(
        "make_profile_set: row length must divide 1440 minutes");
  }
  ProfileSet set;
  set.samples_per_day = t;
  set.resolution_minutes = kMinutesPerDay / static_cast<unsigned>(t);
  set.profiles.reserve(rows.size());
  char id[16];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != t) {
      throw std::invalid_argument("make_profile_set: ragged rows");
    }
    std::snprintf(id, sizeof id, "p%06zu", i);
    set.profiles.push_back(
        DailyProfile{id, Date{2015, 7, 1}, std::move(rows[i])});
  }
  set.validate();
  return set;
}

nlohmann::json IngestSummary::to_json() const {
  return nlohmann::json{{"profiles_kept", profiles_kept},
                        {"days_dropped", days_dropped},
                        {"households", households}};
}

IngestResult load_csv(const std::filesystem::path& path,
                      const IngestConfig& config) {
  std::ifstream in(path);
  if (!in) {
    throw data_error("cannot open " + path.string());
  }
  if (config.resolution_minutes == 0 ||
      kMinutesPerDay % config.resolution_minutes != 0) {
    throw std::invalid_argument("resolution must divide 1440 minutes");
  }
  const std::size_t t = kMinutesPerDay / config.resolution_minutes;

  std::string line;
  if (!std::getline(in, line)) {
    throw data_error(path.string() + ": empty file");
  }
  if (!line.empty() && static_cast<unsigned char>(line[0]) == 0xEF) {
    line.erase(0, 3);  // UTF-8 BOM
  }
  {
    auto header = split_csv_line(trim(line));
    if (header.size() != 3 || trim(header[0]) != "timestamp" ||
        trim(header[1]) != "household_id" || trim(header[2]) != "power_kw") {
      throw data_error(path.string() +
                       ": expected header timestamp,household_id,power_kw");
    }
  }

  struct DayBucket {
    std::vector<double> slots;
    std::vector<bool> seen;
    bool bad = false;  // duplicate slot or invalid reading anywhere in the day
  };
  std::map<std::pair<std::string, Date>, DayBucket> days;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw data_error(path.string() + ":" + std::to_string(lineno) +
                       ": expected 3 fields");
    }
    Timestamp ts;
    if (!parse_timestamp(fields[0], ts)) {
      throw data_error(path.string() + ":" + std::to_string(lineno) +
                       ": unparseable timestamp");
    }
    if (ts.minute_of_day % config.resolution_minutes != 0) {
      throw data_error(path.string() + ":" + std::to_string(lineno) +
                       ": timestamp off the " +
                       std::to_string(config.resolution_minutes) +
                       "-minute grid (inconsistent resolution)");
    }
    const std::string household = trim(fields[1]);
    if (household.empty()) {
      throw data_error(path.string() + ":" + std::to_string(lineno) +
                       ": empty household_id");
    }
    auto& bucket = days[{household, ts.date}];
    if (bucket.slots.empty()) {
      bucket.slots.assign(t, 0.0);
      bucket.seen.assign(t, false);
    }
    const std::size_t slot = ts.minute_of_day / config.resolution_minutes;
    if (bucket.seen[slot]) {
      bucket.bad = true;  // duplicate reading
      continue;
    }
    bucket.seen[slot] = true;
    double power;
    if (!parse_double(fields[2], power) || !std::isfinite(power) ||
        power < 0.0) {
      bucket.bad = true;
      continue;
    }
    bucket.slots[slot] = power;
  }

  IngestResult result;
  result.set.samples_per_day = t;
  result.set.resolution_minutes = config.resolution_minutes;
  std::set<std::string> kept_households;
  for (auto& [key, bucket] : days) {
    const bool complete =
        std::all_of(bucket.seen.begin(), bucket.seen.end(),
                    [](bool b) { return b; });
    if (bucket.bad || !complete) {
      ++result.summary.days_dropped;
      continue;
    }
    DailyProfile profile{key.first, key.second, std::move(bucket.slots)};
    if (config.normalize) {
      const double peak =
          *std::max_element(profile.samples.begin(), profile.samples.end());
      if (peak > 0.0) {
        for (double& v : profile.samples) v /= peak;
      }
    }
    result.set.profiles.push_back(std::move(profile));
    kept_households.insert(key.first);
  }
  result.summary.profiles_kept = result.set.profiles.size();
  result.summary.households = kept_households.size();

  if (result.set.profiles.empty()) {
    throw ingest_error(path.string() + ": no valid profiles after filtering",
                       result.summary);
  }
  result.set.validate();
  return result;
}

void save_csv(const ProfileSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw data_error("cannot write " + path.string());
  }
  out << "timestamp,household_id,power_kw\n";
  for (const auto& p : set.profiles) {
    for (std::size_t s = 0; s < p.samples.size(); ++s) {
      const unsigned minute = static_cast<unsigned>(s) * set.resolution_minutes;
      char ts[32];
      std::snprintf(ts, sizeof ts, "%04d-%02u-%02uT%02u:%02u:00",
                    p.date.year, p.date.month, p.date.day, minute / 60,
                    minute % 60);
      out << ts << ',' << p.household_id << ',' << format_double(p.samples[s])
          << '\n';
    }
  }
  if (!out) {
    throw data_error("write failed: " + path.string());
  }
}

SynthResult synth_generate(const ArchetypeSpec& spec, std::size_t n_profiles,
                           std::uint64_t seed) {
  const std::size_t g = spec.curves.size();
  if (g < 1) {
    throw std::invalid_argument("synth_generate: need at least one archetype");
  }
  if (n_profiles < 1) {
    throw std::invalid_argument("synth_generate: need at least one profile");
  }
  const std::size_t t = spec.curves.front().size();
  for (const auto& c : spec.curves) {
    if (c.size() != t || t == 0) {
      throw std::invalid_argument("synth_generate: ragged archetype curves");
    }
  }
  std::vector<double> weights = spec.weights;
  if (weights.empty()) {
    weights.assign(g, 1.0 / static_cast<double>(g));
  }
  if (weights.size() != g) {
    throw std::invalid_argument("synth_generate: weights/archetype mismatch");
  }
  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;
  if (std::abs(weight_sum - 1.0) > 1e-9) {
    throw std::invalid_argument("synth_generate: weights must sum to 1");
  }
  if (spec.scale_max < spec.scale_min) {
    throw std::invalid_argument("synth_generate: scale range inverted");
  }

  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  rows.reserve(n_profiles);
  std::vector<std::size_t> labels;
  labels.reserve(n_profiles);
  const auto jitter = static_cast<std::int64_t>(spec.jitter);

  for (std::size_t i = 0; i < n_profiles; ++i) {
    const double u = rng.uniform01();
    std::size_t a = g - 1;
    double cum = 0.0;
    for (std::size_t j = 0; j < g; ++j) {
      cum += weights[j];
      if (u < cum) {
        a = j;
        break;
      }
    }
    const std::int64_t shift =
        jitter > 0 ? rng.uniform_int(-jitter, jitter) : 0;
    const double scale = spec.scale_min == spec.scale_max
                             ? spec.scale_min
                             : rng.uniform(spec.scale_min, spec.scale_max);
    std::vector<double> row(t);
    const auto& curve = spec.curves[a];
    const auto tt = static_cast<std::int64_t>(t);
    for (std::size_t s = 0; s < t; ++s) {
      // circular shift keeps total energy constant
      const std::int64_t src =
          ((static_cast<std::int64_t>(s) - shift) % tt + tt) % tt;
      double v = scale * curve[static_cast<std::size_t>(src)];
      if (spec.noise_sigma > 0.0) {
        v += rng.normal(0.0, spec.noise_sigma);
      }
      row[s] = std::max(0.0, v);
    }
    rows.push_back(std::move(row));
    labels.push_back(a);
  }

  SynthResult result{make_profile_set(std::move(rows)), std::move(labels)};
  return result;
}

std::vector<std::vector<double>> make_archetypes(std::size_t g, std::size_t t) {
  if (g < 1 || t < 2) {
    throw std::invalid_argument("make_archetypes: need g >= 1 and t >= 2");
  }
  auto hour = [&](std::size_t idx) {
    return 24.0 * static_cast<double>(idx) / static_cast<double>(t);
  };
  auto bump = [&](std::vector<double>& c, double center_h, double width_h,
                  double amp) {
    for (std::size_t i = 0; i < t; ++i) {
      const double z = (hour(i) - center_h) / width_h;
      c[i] += amp * std::exp(-0.5 * z * z);
    }
  };
  auto plateau = [&](std::vector<double>& c, double start_h, double end_h,
                     double amp) {
    for (std::size_t i = 0; i < t; ++i) {
      const double h = hour(i);
      c[i] += amp / (1.0 + std::exp(-(h - start_h) / 0.5)) /
              (1.0 + std::exp((h - end_h) / 0.5));
    }
  };

  std::vector<std::vector<double>> bank;
  for (std::size_t i = 0; i < std::min<std::size_t>(g, 12); ++i) {
    std::vector<double> c(t, 0.0);
    switch (i) {
      case 0:  // morning peak
        c.assign(t, 0.3);
        bump(c, 7.5, 1.8, 2.5);
        break;
      case 1:  // evening peak
        c.assign(t, 0.4);
        bump(c, 17.5, 2.0, 3.2);
        break;
      case 2:  // morning + evening double peak
        c.assign(t, 0.3);
        bump(c, 7.0, 1.6, 2.0);
        bump(c, 18.0, 1.8, 2.6);
        break;
      case 3:  // pre-dawn peak
        c.assign(t, 0.2);
        bump(c, 4.5, 1.8, 2.4);
        break;
      case 4:  // near-flat low with a gentle afternoon rise
        c.assign(t, 0.5);
        bump(c, 15.0, 5.0, 0.4);
        break;
      case 5:  // near-flat high with an overnight heating hump
        c.assign(t, 2.2);
        bump(c, 3.0, 4.5, 1.0);
        break;
      case 6:  // midday dip (on-site generation)
        c.assign(t, 1.6);
        bump(c, 13.0, 2.2, -1.2);
        for (double& v : c) v = std::max(0.0, v);
        break;
      case 7:  // high evening peak
        c.assign(t, 0.5);
        bump(c, 19.0, 1.7, 7.5);
        break;
      case 8:  // noon peak
        c.assign(t, 0.4);
        bump(c, 12.0, 2.0, 3.0);
        break;
      case 9:  // high mid-morning spike
        c.assign(t, 0.3);
        bump(c, 9.75, 1.6, 5.5);
        break;
      case 10:  // morning + noon double peak
        c.assign(t, 0.3);
        bump(c, 6.5, 1.6, 1.8);
        bump(c, 12.5, 2.0, 2.2);
        break;
      case 11:  // day-long plateau
        c.assign(t, 0.5);
        plateau(c, 8.0, 20.0, 3.0);
        break;
    }
    bank.push_back(std::move(c));
  }
  // Past the base bank, repeat shapes at growing magnitude.
  while (bank.size() < g) {
    const std::size_t i = bank.size();
    std::vector<double> c = bank[i % 12];
    const double factor = 1.0 + 0.5 * static_cast<double>(i / 12);
    for (double& v : c) v *= factor;
    bank.push_back(std::move(c));
  }
  return bank;
}

}  // namespace loadshape
