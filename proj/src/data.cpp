#include "swe/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "swe/error.hpp"

namespace swe::data {

const std::array<const char*, kDynamicFeatureCount> kDynamicFeatureNames = {
    "precip", "tmin", "tmax", "tavg", "tb19v", "tb37v", "tbdiff"};

std::size_t example_key_count(int n_stations, int n_seasons, int season_length) {
  return static_cast<std::size_t>(n_stations) * static_cast<std::size_t>(n_seasons) *
         static_cast<std::size_t>(season_length);
}

int SeasonDataset::season_index(int year) const {
  for (std::size_t i = 0; i < seasons.size(); ++i)
    if (seasons[i] == year) return static_cast<int>(i);
  return -1;
}

int SeasonDataset::station_index(const std::string& id) const {
  for (std::size_t i = 0; i < stations.size(); ++i)
    if (stations[i].station_id == id) return static_cast<int>(i);
  return -1;
}

double compute_southness(double aspect_deg, double slope_deg) {
  require(slope_deg >= 0.0 && slope_deg <= 90.0,
          "southness: slope must be in [0, 90] degrees, got " +
              std::to_string(slope_deg));
  require(aspect_deg >= 0.0 && aspect_deg < 360.0,
          "southness: aspect must be in [0, 360) degrees, got " +
              std::to_string(aspect_deg));
  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
  return std::cos(aspect_deg * kDegToRad) * std::sin(slope_deg * kDegToRad);
}

// ---- calendar helpers (proleptic Gregorian, days since 1970-01-01) ----

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  long era = (y >= 0 ? y : y - 399) / 400;
  unsigned yoe = static_cast<unsigned>(y - era * 400);
  unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

std::array<int, 3> civil_from_days(long z) {
  z += 719468;
  long era = (z >= 0 ? z : z - 146096) / 146097;
  unsigned doe = static_cast<unsigned>(z - era * 146097);
  unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  long y = static_cast<long>(yoe) + era * 400;
  unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  unsigned mp = (5 * doy + 2) / 153;
  unsigned d = doy - (153 * mp + 2) / 5 + 1;
  unsigned m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
  return {static_cast<int>(y), static_cast<int>(m), static_cast<int>(d)};
}

}  // namespace

std::optional<std::pair<int, int>> water_year_day(int year, int month, int day,
                                                  int season_length) {
  if (month == 2 && day == 29) return std::nullopt;  // dropped to keep m fixed
  int wy = month >= 10 ? year + 1 : year;
  long start = days_from_civil(wy - 1, 10, 1);
  long offset = days_from_civil(year, month, day) - start;
  if (offset < 0) return std::nullopt;
  if (is_leap(wy)) {
    long feb29 = days_from_civil(wy, 2, 29);
    if (days_from_civil(year, month, day) > feb29) offset -= 1;
  }
  int j = static_cast<int>(offset) + 1;
  if (j < 1 || j > season_length) return std::nullopt;
  return std::make_pair(wy, j);
}

std::array<int, 3> water_year_date(int season, int day_index) {
  long z = days_from_civil(season - 1, 10, 1) + day_index - 1;
  if (is_leap(season) && z >= days_from_civil(season, 2, 29)) z += 1;
  return civil_from_days(z);
}

// ---- CSV ingestion ----

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(),
          context + ": not a number: '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& context) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(),
          context + ": not an integer: '" + s + "'");
  return v;
}

std::optional<double> parse_optional_double(const std::string& s,
                                            const std::string& context) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, context);
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  require(ec == std::errc(), "number formatting failed");
  return std::string(buf, ptr);
}

const char* kStationHeader =
    "station_id,lat,lon,elevation_m,aspect_deg,slope_deg,land_cover";
const char* kDailyHeader =
    "station_id,date,swe_mm,precip_mm,tmin_c,tmax_c,tavg_c,tb19v_k,tb37v_k";

}  // namespace

std::pair<std::vector<StationMeta>, std::vector<DailyRecord>> load_station_data(
    const std::string& meta_path, const std::string& daily_path,
    int season_length) {
  std::vector<StationMeta> stations;
  {
    std::ifstream in(meta_path);
    require(in.good(), "cannot open station file: " + meta_path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)),
            meta_path + ": empty file, expected header");
    require(split_csv_line(line) == split_csv_line(kStationHeader),
            meta_path + ": unexpected header, want '" + kStationHeader + "'");
    int lineno = 1;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::string ctx = meta_path + " line " + std::to_string(lineno);
      auto f = split_csv_line(line);
      require(f.size() == 7, ctx + ": expected 7 fields, got " +
                                 std::to_string(f.size()));
      StationMeta m;
      m.station_id = f[0];
      require(!m.station_id.empty(), ctx + ": empty station_id");
      require(seen.insert(m.station_id).second,
              ctx + ": duplicate station_id " + m.station_id);
      m.latitude = parse_double(f[1], ctx);
      m.longitude = parse_double(f[2], ctx);
      m.elevation = parse_double(f[3], ctx);
      require(std::isfinite(m.elevation), ctx + ": elevation must be finite");
      double aspect = parse_double(f[4], ctx);
      double slope = parse_double(f[5], ctx);
      m.southness = compute_southness(aspect, slope);
      m.land_cover = parse_int(f[6], ctx);
      stations.push_back(std::move(m));
    }
  }

  std::set<std::string> known;
  for (const auto& s : stations) known.insert(s.station_id);

  std::vector<DailyRecord> records;
  {
    std::ifstream in(daily_path);
    require(in.good(), "cannot open daily file: " + daily_path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)),
            daily_path + ": empty file, expected header");
    require(split_csv_line(line) == split_csv_line(kDailyHeader),
            daily_path + ": unexpected header, want '" + kDailyHeader + "'");
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::string ctx = daily_path + " line " + std::to_string(lineno);
      auto f = split_csv_line(line);
      require(f.size() == 9, ctx + ": expected 9 fields, got " +
                                 std::to_string(f.size()));
      require(known.count(f[0]) > 0, ctx + ": unknown station_id " + f[0]);
      const std::string& date = f[1];
      require(date.size() == 10 && date[4] == '-' && date[7] == '-',
              ctx + ": date must be YYYY-MM-DD, got '" + date + "'");
      int year = parse_int(date.substr(0, 4), ctx);
      int month = parse_int(date.substr(5, 2), ctx);
      int day = parse_int(date.substr(8, 2), ctx);
      require(month >= 1 && month <= 12 && day >= 1 && day <= 31,
              ctx + ": invalid calendar date '" + date + "'");
      auto wyd = water_year_day(year, month, day, season_length);
      if (!wyd) continue;  // outside the modeled season window
      DailyRecord r;
      r.station_id = f[0];
      r.season = wyd->first;
      r.day = wyd->second;
      r.swe = parse_optional_double(f[2], ctx);
      r.precip = parse_optional_double(f[3], ctx);
      r.tmin = parse_optional_double(f[4], ctx);
      r.tmax = parse_optional_double(f[5], ctx);
      r.tavg = parse_optional_double(f[6], ctx);
      r.tb19v = parse_optional_double(f[7], ctx);
      r.tb37v = parse_optional_double(f[8], ctx);
      if (r.tmin && r.tmax) {
        require(*r.tmin <= *r.tmax, ctx + ": tmin exceeds tmax");
      }
      if (r.tb19v && r.tb37v) r.tb_diff = *r.tb19v - *r.tb37v;
      records.push_back(std::move(r));
    }
  }
  return {std::move(stations), std::move(records)};
}

namespace {

std::optional<double> record_field(const DailyRecord& r, int var) {
  switch (var) {
    case 0: return r.precip;
    case 1: return r.tmin;
    case 2: return r.tmax;
    case 3: return r.tavg;
    case 4: return r.tb19v;
    case 5: return r.tb37v;
    case 6: return r.tb_diff;
    default: return std::nullopt;
  }
}

}  // namespace

std::vector<std::string> filter_stations(const std::vector<DailyRecord>& records,
                                         const std::vector<std::string>& station_ids,
                                         const std::vector<int>& seasons,
                                         int season_length, double threshold) {
  require(season_length > 0, "filter: season_length must be positive");
  require(threshold >= 0.0 && threshold <= 1.0, "filter: threshold in [0,1]");

  // observed-day counts per (station, season, variable); swe is variable 7
  constexpr int kVarCount = kDynamicFeatureCount + 1;
  std::map<std::string, std::map<int, std::array<int, kVarCount>>> observed;
  for (const auto& id : station_ids) {
    for (int s : seasons) observed[id][s] = {};
  }
  for (const auto& r : records) {
    auto it = observed.find(r.station_id);
    if (it == observed.end()) continue;
    auto sit = it->second.find(r.season);
    if (sit == it->second.end()) continue;
    for (int v = 0; v < kDynamicFeatureCount; ++v)
      if (record_field(r, v)) sit->second[static_cast<std::size_t>(v)] += 1;
    if (r.swe) sit->second[kDynamicFeatureCount] += 1;
  }

  double allowed_missing = threshold * season_length + 1e-9;
  std::vector<std::string> retained;
  for (const auto& id : station_ids) {
    bool keep = true;
    for (const auto& [season, counts] : observed[id]) {
      (void)season;
      for (int v = 0; v < kVarCount && keep; ++v) {
        int missing = season_length - counts[static_cast<std::size_t>(v)];
        if (static_cast<double>(missing) > allowed_missing) keep = false;
      }
      if (!keep) break;
    }
    if (keep) retained.push_back(id);
  }
  return retained;
}

std::vector<double> fill_gaps(const std::vector<double>& values,
                              const std::vector<std::uint8_t>& present) {
  require(values.size() == present.size(), "fill_gaps: mask size mismatch");
  int n = static_cast<int>(values.size());
  int first = -1, last = -1;
  for (int i = 0; i < n; ++i) {
    if (present[static_cast<std::size_t>(i)]) {
      if (first < 0) first = i;
      last = i;
    }
  }
  require(first >= 0, "fill_gaps: no observed values in series");

  std::vector<double> out = values;
  for (int i = 0; i < first; ++i) out[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(first)];
  for (int i = last + 1; i < n; ++i) out[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(last)];
  int prev = first;
  for (int i = first + 1; i <= last; ++i) {
    if (!present[static_cast<std::size_t>(i)]) continue;
    if (i > prev + 1) {
      double lo = values[static_cast<std::size_t>(prev)];
      double hi = values[static_cast<std::size_t>(i)];
      for (int k = prev + 1; k < i; ++k) {
        double t = static_cast<double>(k - prev) / (i - prev);
        out[static_cast<std::size_t>(k)] = lo + t * (hi - lo);
      }
    }
    prev = i;
  }
  return out;
}

SeasonArrays assemble_season(const std::vector<DailyRecord>& records,
                             const std::string& station_id, int season,
                             int season_length) {
  int m = season_length;
  std::array<std::vector<double>, kDynamicFeatureCount> raw;
  std::array<std::vector<std::uint8_t>, kDynamicFeatureCount> mask;
  for (int v = 0; v < kDynamicFeatureCount; ++v) {
    raw[static_cast<std::size_t>(v)].assign(static_cast<std::size_t>(m), 0.0);
    mask[static_cast<std::size_t>(v)].assign(static_cast<std::size_t>(m), 0);
  }
  SeasonArrays out;
  out.swe.assign(static_cast<std::size_t>(m), 0.0);
  out.swe_present.assign(static_cast<std::size_t>(m), 0);

  std::vector<std::uint8_t> day_seen(static_cast<std::size_t>(m), 0);
  for (const auto& r : records) {
    if (r.station_id != station_id || r.season != season) continue;
    require(r.day >= 1 && r.day <= m, "assemble: day out of range");
    std::size_t d = static_cast<std::size_t>(r.day - 1);
    require(!day_seen[d], "assemble: duplicate record for station " +
                              station_id + " season " + std::to_string(season) +
                              " day " + std::to_string(r.day));
    day_seen[d] = 1;
    for (int v = 0; v < kDynamicFeatureCount; ++v) {
      if (auto val = record_field(r, v)) {
        raw[static_cast<std::size_t>(v)][d] = *val;
        mask[static_cast<std::size_t>(v)][d] = 1;
      }
    }
    if (r.swe) {
      out.swe[d] = *r.swe;
      out.swe_present[d] = 1;
    }
  }

  out.alpha.assign(static_cast<std::size_t>(m), {});
  for (int v = 0; v < kDynamicFeatureCount; ++v) {
    std::vector<double> filled;
    try {
      filled = fill_gaps(raw[static_cast<std::size_t>(v)], mask[static_cast<std::size_t>(v)]);
    } catch (const Error&) {
      fail("assemble: variable " + std::string(kDynamicFeatureNames[static_cast<std::size_t>(v)]) +
           " fully missing for station " + station_id + " season " +
           std::to_string(season) + " (filtering should have removed it)");
    }
    for (int d = 0; d < m; ++d)
      out.alpha[static_cast<std::size_t>(d)][static_cast<std::size_t>(v)] = filled[static_cast<std::size_t>(d)];
  }
  return out;
}

std::array<double, kDynamicFeatureCount> compute_gamma(
    const std::map<int, SeasonArrays>& by_season, int day_index, int season,
    int window) {
  require(window >= 0, "gamma: window must be non-negative");
  require(by_season.count(season) > 0, "gamma: season " + std::to_string(season) +
                                           " not assembled");
  std::array<double, kDynamicFeatureCount> acc{};
  int count = 0;
  for (int t = season - window; t <= season + window; ++t) {
    auto it = by_season.find(t);
    if (it == by_season.end()) continue;
    const auto& alpha = it->second.alpha;
    require(day_index >= 1 && day_index <= static_cast<int>(alpha.size()),
            "gamma: day index out of range");
    for (int v = 0; v < kDynamicFeatureCount; ++v)
      acc[static_cast<std::size_t>(v)] += alpha[static_cast<std::size_t>(day_index - 1)][static_cast<std::size_t>(v)];
    ++count;
  }
  for (int v = 0; v < kDynamicFeatureCount; ++v) acc[static_cast<std::size_t>(v)] /= count;
  return acc;
}

std::pair<std::vector<int>, std::vector<int>> split_train_test(
    const std::vector<int>& seasons, const std::vector<int>& test_years) {
  std::set<int> have(seasons.begin(), seasons.end());
  std::set<int> test;
  for (int y : test_years) {
    require(have.count(y) > 0,
            "test year " + std::to_string(y) + " not present in the data");
    test.insert(y);
  }
  std::vector<int> train, test_sorted(test.begin(), test.end());
  for (int s : have) {
    if (!test.count(s)) train.push_back(s);
  }
  require(!train.empty(), "train split is empty");
  return {std::move(train), std::move(test_sorted)};
}

void normalize_features(SeasonDataset& ds) {
  int F = ds.feature_dim();
  int S = ds.n_seasons();
  int n = ds.n_stations();
  int m = ds.season_length;
  require(!ds.train_seasons.empty(), "normalize: train split is empty");

  std::vector<std::uint8_t> is_train(static_cast<std::size_t>(S), 0);
  for (int y : ds.train_seasons) {
    int s = ds.season_index(y);
    require(s >= 0, "normalize: train season missing from dataset");
    is_train[static_cast<std::size_t>(s)] = 1;
  }

  ds.norm_stats.feature_names = ds.feature_names;
  ds.norm_stats.mean.assign(static_cast<std::size_t>(F), 0.0);
  ds.norm_stats.stddev.assign(static_cast<std::size_t>(F), 1.0);

  for (int f = 0; f < F; ++f) {
    if (ds.feature_onehot[static_cast<std::size_t>(f)]) continue;
    double sum = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < m; ++d)
        for (int s = 0; s < S; ++s) {
          if (!is_train[static_cast<std::size_t>(s)]) continue;
          sum += ds.features[ds.findex(i, d, s, f)];
          ++count;
        }
    require(count > 0, "normalize: no training values for feature " +
                           ds.feature_names[static_cast<std::size_t>(f)]);
    double mean = sum / static_cast<double>(count);
    double var = 0.0;
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < m; ++d)
        for (int s = 0; s < S; ++s) {
          if (!is_train[static_cast<std::size_t>(s)]) continue;
          double diff = ds.features[ds.findex(i, d, s, f)] - mean;
          var += diff * diff;
        }
    double std = std::sqrt(var / static_cast<double>(count));
    if (std < 1e-12) std = 1.0;  // constant feature: center only
    ds.norm_stats.mean[static_cast<std::size_t>(f)] = mean;
    ds.norm_stats.stddev[static_cast<std::size_t>(f)] = std;
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < m; ++d)
        for (int s = 0; s < S; ++s) {
          double& v = ds.features[ds.findex(i, d, s, f)];
          v = (v - mean) / std;
        }
  }
}

SeasonDataset build_dataset(const std::vector<StationMeta>& stations,
                            const std::vector<DailyRecord>& records,
                            const DatasetConfig& cfg) {
  require(cfg.season_length > 0, "build_dataset: season_length must be positive");
  require(cfg.gamma_window >= 0, "build_dataset: gamma window must be >= 0");

  std::set<int> season_set;
  for (const auto& r : records) season_set.insert(r.season);
  require(!season_set.empty(), "build_dataset: no records in the season window");
  std::vector<int> seasons(season_set.begin(), season_set.end());

  std::vector<std::string> ids;
  for (const auto& s : stations) ids.push_back(s.station_id);
  std::sort(ids.begin(), ids.end());
  std::vector<std::string> retained = filter_stations(
      records, ids, seasons, cfg.season_length, cfg.filter_threshold);
  require(!retained.empty(), "build_dataset: no stations pass the missing-data filter");

  SeasonDataset ds;
  ds.season_length = cfg.season_length;
  ds.gamma_window = cfg.gamma_window;
  ds.seasons = seasons;
  for (const auto& id : retained) {
    auto it = std::find_if(stations.begin(), stations.end(),
                           [&](const StationMeta& s) { return s.station_id == id; });
    require(it != stations.end(), "build_dataset: retained station missing metadata");
    ds.stations.push_back(*it);
  }

  // land cover categories across retained stations, one-hot encoded
  std::set<int> covers;
  for (const auto& s : ds.stations) covers.insert(s.land_cover);
  std::vector<int> cover_codes(covers.begin(), covers.end());

  ds.feature_names = {"elevation", "latitude", "longitude", "southness"};
  ds.feature_onehot.assign(4, 0);
  for (int c : cover_codes) {
    ds.feature_names.push_back("landcover_" + std::to_string(c));
    ds.feature_onehot.push_back(1);
  }
  for (const char* name : kDynamicFeatureNames) {
    ds.feature_names.push_back(name);
    ds.feature_onehot.push_back(0);
  }
  for (const char* name : kDynamicFeatureNames) {
    ds.feature_names.push_back(std::string("gamma_") + name);
    ds.feature_onehot.push_back(0);
  }

  int n = ds.n_stations();
  int S = ds.n_seasons();
  int m = ds.season_length;
  int F = ds.feature_dim();
  ds.features.assign(static_cast<std::size_t>(n) * m * S * F, 0.0);
  ds.feature_present.assign(ds.features.size(), 1);
  ds.labels.assign(static_cast<std::size_t>(n) * m * S, 0.0);
  ds.label_present.assign(ds.labels.size(), 0);

  int phi_width = 4 + static_cast<int>(cover_codes.size());
  for (int i = 0; i < n; ++i) {
    const StationMeta& st = ds.stations[static_cast<std::size_t>(i)];
    std::map<int, SeasonArrays> by_season;
    for (int s = 0; s < S; ++s) {
      by_season[ds.seasons[static_cast<std::size_t>(s)]] =
          assemble_season(records, st.station_id, ds.seasons[static_cast<std::size_t>(s)], m);
    }
    int cover_pos = static_cast<int>(
        std::find(cover_codes.begin(), cover_codes.end(), st.land_cover) -
        cover_codes.begin());
    for (int s = 0; s < S; ++s) {
      int year = ds.seasons[static_cast<std::size_t>(s)];
      const SeasonArrays& arrays = by_season[year];
      for (int d = 0; d < m; ++d) {
        ds.features[ds.findex(i, d, s, 0)] = st.elevation;
        ds.features[ds.findex(i, d, s, 1)] = st.latitude;
        ds.features[ds.findex(i, d, s, 2)] = st.longitude;
        ds.features[ds.findex(i, d, s, 3)] = st.southness;
        ds.features[ds.findex(i, d, s, 4 + cover_pos)] = 1.0;
        for (int v = 0; v < kDynamicFeatureCount; ++v)
          ds.features[ds.findex(i, d, s, phi_width + v)] =
              arrays.alpha[static_cast<std::size_t>(d)][static_cast<std::size_t>(v)];
        auto gamma = compute_gamma(by_season, d + 1, year, cfg.gamma_window);
        for (int v = 0; v < kDynamicFeatureCount; ++v)
          ds.features[ds.findex(i, d, s, phi_width + kDynamicFeatureCount + v)] =
              gamma[static_cast<std::size_t>(v)];
        ds.labels[ds.lindex(i, d, s)] = arrays.swe[static_cast<std::size_t>(d)];
        ds.label_present[ds.lindex(i, d, s)] = arrays.swe_present[static_cast<std::size_t>(d)];
      }
    }
  }

  auto [train, test] = split_train_test(ds.seasons, cfg.test_years);
  ds.train_seasons = std::move(train);
  ds.test_seasons = std::move(test);
  normalize_features(ds);
  return ds;
}

// ---- binary cache ----

namespace {

constexpr char kMagic[8] = {'S', 'W', 'E', 'D', 'S', 'E', 'T', '1'};

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
void write_u32(std::ofstream& out, std::uint32_t v) { write_bytes(out, &v, 4); }
void write_i32(std::ofstream& out, std::int32_t v) { write_bytes(out, &v, 4); }
void write_f64(std::ofstream& out, double v) { write_bytes(out, &v, 8); }
void write_str(std::ofstream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  write_bytes(out, s.data(), s.size());
}
void write_f64_vec(std::ofstream& out, const std::vector<double>& v) {
  write_u32(out, static_cast<std::uint32_t>(v.size()));
  write_bytes(out, v.data(), v.size() * 8);
}
void write_u8_vec(std::ofstream& out, const std::vector<std::uint8_t>& v) {
  write_u32(out, static_cast<std::uint32_t>(v.size()));
  write_bytes(out, v.data(), v.size());
}
void write_i32_vec(std::ofstream& out, const std::vector<int>& v) {
  write_u32(out, static_cast<std::uint32_t>(v.size()));
  for (int x : v) write_i32(out, x);
}

void read_bytes(std::ifstream& in, void* p, std::size_t n, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  require(in.gcount() == static_cast<std::streamsize>(n),
          "dataset cache truncated: " + path);
}
std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v;
  read_bytes(in, &v, 4, path);
  return v;
}
std::int32_t read_i32(std::ifstream& in, const std::string& path) {
  std::int32_t v;
  read_bytes(in, &v, 4, path);
  return v;
}
double read_f64(std::ifstream& in, const std::string& path) {
  double v;
  read_bytes(in, &v, 8, path);
  return v;
}
std::string read_str(std::ifstream& in, const std::string& path) {
  std::uint32_t n = read_u32(in, path);
  std::string s(n, '\0');
  if (n) read_bytes(in, s.data(), n, path);
  return s;
}
std::vector<double> read_f64_vec(std::ifstream& in, const std::string& path) {
  std::uint32_t n = read_u32(in, path);
  std::vector<double> v(n);
  if (n) read_bytes(in, v.data(), static_cast<std::size_t>(n) * 8, path);
  return v;
}
std::vector<std::uint8_t> read_u8_vec(std::ifstream& in, const std::string& path) {
  std::uint32_t n = read_u32(in, path);
  std::vector<std::uint8_t> v(n);
  if (n) read_bytes(in, v.data(), n, path);
  return v;
}
std::vector<int> read_i32_vec(std::ifstream& in, const std::string& path) {
  std::uint32_t n = read_u32(in, path);
  std::vector<int> v(n);
  for (auto& x : v) x = read_i32(in, path);
  return v;
}

}  // namespace

void save_dataset(const std::string& path, const SeasonDataset& ds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot write dataset cache: " + path);
  write_bytes(out, kMagic, 8);
  write_u32(out, 1);  // format version
  write_i32(out, ds.season_length);
  write_i32(out, ds.gamma_window);
  write_u32(out, static_cast<std::uint32_t>(ds.stations.size()));
  for (const auto& s : ds.stations) {
    write_str(out, s.station_id);
    write_f64(out, s.latitude);
    write_f64(out, s.longitude);
    write_f64(out, s.elevation);
    write_f64(out, s.southness);
    write_i32(out, s.land_cover);
  }
  write_i32_vec(out, ds.seasons);
  write_i32_vec(out, ds.train_seasons);
  write_i32_vec(out, ds.test_seasons);
  write_u32(out, static_cast<std::uint32_t>(ds.feature_names.size()));
  for (const auto& n : ds.feature_names) write_str(out, n);
  write_u8_vec(out, ds.feature_onehot);
  write_f64_vec(out, ds.norm_stats.mean);
  write_f64_vec(out, ds.norm_stats.stddev);
  write_f64_vec(out, ds.features);
  write_u8_vec(out, ds.feature_present);
  write_f64_vec(out, ds.labels);
  write_u8_vec(out, ds.label_present);
  require(out.good(), "write failed for dataset cache: " + path);
}

SeasonDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open dataset cache: " + path);
  char magic[8];
  read_bytes(in, magic, 8, path);
  require(std::memcmp(magic, kMagic, 8) == 0,
          "not a dataset cache (bad magic): " + path);
  std::uint32_t version = read_u32(in, path);
  require(version == 1, "unsupported dataset cache version " +
                            std::to_string(version) + ": " + path);
  SeasonDataset ds;
  ds.season_length = read_i32(in, path);
  ds.gamma_window = read_i32(in, path);
  std::uint32_t n = read_u32(in, path);
  ds.stations.resize(n);
  for (auto& s : ds.stations) {
    s.station_id = read_str(in, path);
    s.latitude = read_f64(in, path);
    s.longitude = read_f64(in, path);
    s.elevation = read_f64(in, path);
    s.southness = read_f64(in, path);
    s.land_cover = read_i32(in, path);
  }
  ds.seasons = read_i32_vec(in, path);
  ds.train_seasons = read_i32_vec(in, path);
  ds.test_seasons = read_i32_vec(in, path);
  std::uint32_t fcount = read_u32(in, path);
  ds.feature_names.resize(fcount);
  for (auto& name : ds.feature_names) name = read_str(in, path);
  ds.feature_onehot = read_u8_vec(in, path);
  ds.norm_stats.feature_names = ds.feature_names;
  ds.norm_stats.mean = read_f64_vec(in, path);
  ds.norm_stats.stddev = read_f64_vec(in, path);
  ds.features = read_f64_vec(in, path);
  ds.feature_present = read_u8_vec(in, path);
  ds.labels = read_f64_vec(in, path);
  ds.label_present = read_u8_vec(in, path);

  std::size_t expect = example_key_count(ds.n_stations(), ds.n_seasons(), ds.season_length);
  std::size_t nf = ds.feature_names.size();
  require(ds.labels.size() == expect && ds.label_present.size() == expect &&
              ds.features.size() == expect * nf &&
              ds.feature_present.size() == expect * nf &&
              ds.feature_onehot.size() == nf &&
              ds.norm_stats.mean.size() == nf &&
              ds.norm_stats.stddev.size() == nf,
          "dataset cache inconsistent: " + path);
  return ds;
}

void write_station_csv(const std::string& path,
                       const std::vector<StationMeta>& stations,
                       const std::vector<std::pair<double, double>>& aspect_slope) {
  require(stations.size() == aspect_slope.size(),
          "station csv: aspect/slope list size mismatch");
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot write " + path);
  out << kStationHeader << "\n";
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const auto& s = stations[i];
    out << s.station_id << "," << format_double(s.latitude) << ","
        << format_double(s.longitude) << "," << format_double(s.elevation) << ","
        << format_double(aspect_slope[i].first) << ","
        << format_double(aspect_slope[i].second) << "," << s.land_cover << "\n";
  }
  require(out.good(), "write failed for " + path);
}

void write_daily_csv(const std::string& path,
                     const std::vector<DailyRecord>& records) {
  std::vector<const DailyRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const DailyRecord* a, const DailyRecord* b) {
              if (a->station_id != b->station_id) return a->station_id < b->station_id;
              if (a->season != b->season) return a->season < b->season;
              return a->day < b->day;
            });
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot write " + path);
  out << kDailyHeader << "\n";
  char datebuf[16];
  auto fmt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const DailyRecord* r : sorted) {
    auto [y, mo, d] = water_year_date(r->season, r->day);
    std::snprintf(datebuf, sizeof(datebuf), "%04d-%02d-%02d", y, mo, d);
    out << r->station_id << "," << datebuf << "," << fmt(r->swe) << ","
        << fmt(r->precip) << "," << fmt(r->tmin) << "," << fmt(r->tmax) << ","
        << fmt(r->tavg) << "," << fmt(r->tb19v) << "," << fmt(r->tb37v) << "\n";
  }
  require(out.good(), "write failed for " + path);
}

}  // namespace swe::data
