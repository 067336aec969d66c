#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace swe::data {

// Static per-location attributes. Southness is cos(aspect) * sin(slope),
// computed once at load from the raw terrain angles.
struct StationMeta {
  std::string station_id;
  double latitude = 0.0;
  double longitude = 0.0;
  double elevation = 0.0;   // meters
  double southness = 0.0;   // in [-1, 1]
  int land_cover = 0;       // categorical code
};

// One (station, season, day) row. Absent observations stay absent here;
// zero is a real value, never a missing marker.
struct DailyRecord {
  std::string station_id;
  int season = 0;  // water year
  int day = 0;     // 1..m, day 1 = Oct 1
  std::optional<double> swe;      // label, mm
  std::optional<double> precip;   // mm
  std::optional<double> tmin, tmax, tavg;  // degC
  std::optional<double> tb19v, tb37v, tb_diff;  // K, tb_diff = 19V - 37V
};

inline constexpr int kDynamicFeatureCount = 7;
extern const std::array<const char*, kDynamicFeatureCount> kDynamicFeatureNames;

// z-score parameters per feature column; identity columns (one-hots) carry
// mean 0 / std 1 so the transform applies uniformly.
struct NormStats {
  std::vector<std::string> feature_names;
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Assembled, normalized examples for all stations and seasons, laid out
// as [n stations][m days][S seasons][F features].
struct SeasonDataset {
  std::vector<StationMeta> stations;  // fixed order, recorded
  std::vector<int> seasons;           // sorted water years
  std::vector<int> train_seasons;
  std::vector<int> test_seasons;
  int season_length = 0;  // m
  int gamma_window = 0;   // w

  std::vector<std::string> feature_names;  // size F
  std::vector<std::uint8_t> feature_onehot;
  std::vector<double> features;            // n*m*S*F
  std::vector<std::uint8_t> feature_present;
  std::vector<double> labels;              // n*m*S, mm
  std::vector<std::uint8_t> label_present;
  NormStats norm_stats;

  int n_stations() const { return static_cast<int>(stations.size()); }
  int n_seasons() const { return static_cast<int>(seasons.size()); }
  int feature_dim() const { return static_cast<int>(feature_names.size()); }

  // day0 is 0-based (day j - 1); s indexes into `seasons`.
  std::size_t findex(int i, int day0, int s, int f) const {
    return ((static_cast<std::size_t>(i) * season_length + day0) * seasons.size() + s) *
               feature_names.size() +
           f;
  }
  std::size_t lindex(int i, int day0, int s) const {
    return (static_cast<std::size_t>(i) * season_length + day0) * seasons.size() + s;
  }
  int season_index(int year) const;  // -1 if absent
  int station_index(const std::string& id) const;
};

std::size_t example_key_count(int n_stations, int n_seasons, int season_length);

double compute_southness(double aspect_deg, double slope_deg);

// Maps a calendar date to (water year, day index). Day 1 is Oct 1; Feb 29
// is dropped so every season spans the same m days. Returns nullopt for
// Feb 29 or days past `season_length`.
std::optional<std::pair<int, int>> water_year_day(int year, int month, int day,
                                                  int season_length);
// Inverse: (water year, day index 1..m) -> {year, month, day}.
std::array<int, 3> water_year_date(int season, int day_index);

std::pair<std::vector<StationMeta>, std::vector<DailyRecord>> load_station_data(
    const std::string& meta_path, const std::string& daily_path,
    int season_length = 270);

// Retains a station iff, for every variable and every season in `seasons`,
// its missing fraction over the m-day grid is <= threshold ("more than"
// rule: exactly the threshold stays in).
std::vector<std::string> filter_stations(const std::vector<DailyRecord>& records,
                                         const std::vector<std::string>& station_ids,
                                         const std::vector<int>& seasons,
                                         int season_length,
                                         double threshold = 0.10);

// Linear interpolation across interior gaps, nearest observed value at the
// boundaries. Errors when nothing is present at all.
std::vector<double> fill_gaps(const std::vector<double>& values,
                              const std::vector<std::uint8_t>& present);

// One station-season on the fixed day grid: dynamic features gap-filled,
// labels left as observed.
struct SeasonArrays {
  std::vector<std::array<double, kDynamicFeatureCount>> alpha;  // [m][7]
  std::vector<double> swe;
  std::vector<std::uint8_t> swe_present;
};
SeasonArrays assemble_season(const std::vector<DailyRecord>& records,
                             const std::string& station_id, int season,
                             int season_length);

// Mean of the dynamic attribute vector for day j over seasons in
// [h-w, h+w], clamped to the seasons actually available.
std::array<double, kDynamicFeatureCount> compute_gamma(
    const std::map<int, SeasonArrays>& by_season, int day_index, int season,
    int window);

std::pair<std::vector<int>, std::vector<int>> split_train_test(
    const std::vector<int>& seasons, const std::vector<int>& test_years);

// In-place z-scoring from training-split statistics. Features flagged
// one-hot pass through; zero-variance features are centered only.
void normalize_features(SeasonDataset& ds);

struct DatasetConfig {
  int season_length = 270;
  int gamma_window = 1;
  double filter_threshold = 0.10;
  std::vector<int> test_years = {2007, 2008, 2015, 2017, 2018};
};

// Full pipeline: filter stations, assemble seasons, build [phi, alpha,
// gamma] features, split by water year, normalize from the training split.
SeasonDataset build_dataset(const std::vector<StationMeta>& stations,
                            const std::vector<DailyRecord>& records,
                            const DatasetConfig& cfg);

// Single-file binary cache, little-endian, version-tagged.
void save_dataset(const std::string& path, const SeasonDataset& ds);
SeasonDataset load_dataset(const std::string& path);

void write_station_csv(const std::string& path,
                       const std::vector<StationMeta>& stations,
                       const std::vector<std::pair<double, double>>& aspect_slope);
void write_daily_csv(const std::string& path,
                     const std::vector<DailyRecord>& records);

}  // namespace swe::data
