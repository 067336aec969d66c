#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "swe/data.hpp"

namespace swe::data {

struct SyntheticConfig {
  int n_stations = 8;
  int season_length = 30;   // m
  int n_seasons = 4;
  int first_season = 2001;  // water years first_season .. first_season+n-1
  double noise = 0.1;
  double missing_rate = 0.0;  // fraction of feature values dropped
  std::uint64_t seed = 0;
};

struct SyntheticResult {
  std::vector<StationMeta> stations;
  std::vector<DailyRecord> records;
  // raw terrain angles kept so the station CSV can be emitted
  std::vector<std::pair<double, double>> aspect_slope;
};

// Desk-scale stand-in for real station data. Snow curves follow the
// accumulate-plateau-melt shape, peak SWE grows with elevation and with a
// spatially correlated seasonal factor (nearby stations at similar
// elevation move together), temperatures run cold when snow is deep and
// precipitation supplies the accumulation. Everything melts out before the
// season ends. Deterministic per seed.
SyntheticResult generate_synthetic(const SyntheticConfig& cfg);

}  // namespace swe::data
