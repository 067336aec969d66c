#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swe/data.hpp"

namespace swe::eval {

// NSE is undefined when the observed series is constant (zero variance);
// undefined scores are excluded from aggregates but counted in reports.
struct NseValue {
  double value = 0.0;
  bool defined = false;
};

// 1 - sum((a - p)^2) / sum((a - mean(a))^2) over all pooled test days.
NseValue nse(std::span<const double> actual, std::span<const double> predicted);

struct LocationScore {
  std::string station_id;
  double elevation = 0.0;
  NseValue nse;
  double mean_daily_error = 0.0;  // mean(predicted - observed), mm
  // signed error of the season maximum, per test season: (season, mm)
  std::vector<std::pair<int, double>> annual_max_error;
};

struct PredictionRow {
  std::string model;
  std::string station_id;
  int season = 0;
  int day = 0;
  double swe_mm = 0.0;
};

void write_predictions_csv(const std::string& path,
                           const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> read_predictions_csv(const std::string& path);

// Dense per-model prediction grid aligned with a dataset's index space.
struct PredictionGrid {
  std::vector<double> values;          // n*m*S
  std::vector<std::uint8_t> present;
};
PredictionGrid grid_from_rows(const data::SeasonDataset& ds,
                              const std::vector<const PredictionRow*>& rows);

// Per-location NSE over all pooled test days, mean signed daily error, and
// per-season annual-maximum error. Every labeled (location, test season,
// day) must be covered by a prediction.
std::vector<LocationScore> evaluate_locations(const data::SeasonDataset& ds,
                                              const PredictionGrid& grid);

struct NseHistogram {
  // bins: (-inf,0), [0,0.25), [0.25,0.5), [0.5,0.75), [0.75,1]
  std::array<int, 5> counts{};
  int undefined = 0;
  int total() const;
  std::array<double, 5> fractions() const;
  double fraction_above_half = 0.0;
};
NseHistogram bin_nse(const std::vector<NseValue>& scores);

// RMP(model, location) = best NSE at that location minus the model's NSE.
// curve[model][k] = fraction of locations with RMP <= grid[k]; undefined
// scores drop out of that model's denominator.
struct RmpCurves {
  std::vector<double> grid;
  std::vector<std::string> models;
  std::vector<std::vector<double>> fractions;  // [model][grid point]
};
RmpCurves relative_model_performance(
    const std::vector<std::string>& models,
    const std::vector<std::vector<NseValue>>& nse_by_model, double step = 0.01,
    double max_rmp = 2.0);

// Locations split at elevation quartiles (ties broken by station_id order);
// median NSE per group per model, best model flagged per group.
struct ElevationGroups {
  std::vector<std::string> models;
  std::array<int, 4> group_sizes{};
  std::array<std::vector<double>, 4> medians;  // [group][model], NaN if empty
  std::array<int, 4> best_model{};             // index into models, -1 if none
};
ElevationGroups elevation_group_medians(
    const std::vector<std::string>& models,
    const std::vector<std::vector<NseValue>>& nse_by_model,
    const std::vector<double>& elevations,
    const std::vector<std::string>& station_ids);

// Full report over several models' scores, written as the two report files.
void write_location_scores_csv(
    const std::string& path, const std::vector<std::string>& models,
    const std::vector<std::vector<LocationScore>>& scores);
void write_summary_json(const std::string& path,
                        const std::vector<std::string>& models,
                        const std::vector<std::vector<LocationScore>>& scores);

}  // namespace swe::eval
