#include "swe/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "swe/error.hpp"

namespace swe::eval {

using nlohmann::json;

NseValue nse(std::span<const double> actual, std::span<const double> predicted) {
  require(actual.size() == predicted.size(),
          "nse: series lengths differ, " + std::to_string(actual.size()) +
              " vs " + std::to_string(predicted.size()));
  require(actual.size() >= 2, "nse: needs at least 2 points, got " +
                                  std::to_string(actual.size()));
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());

  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    double e = actual[i] - predicted[i];
    double d = actual[i] - mean;
    sse += e * e;
    sst += d * d;
  }
  if (sst == 0.0) return {0.0, false};
  return {1.0 - sse / sst, true};
}

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  require(ec == std::errc(), "number formatting failed");
  return std::string(buf, ptr);
}

std::vector<std::string> split_line(const std::string& line) {
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

const char* kPredictionHeader = "model,station_id,season,day,swe_mm";

}  // namespace

void write_predictions_csv(const std::string& path,
                           const std::vector<PredictionRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot write predictions: " + path);
  out << kPredictionHeader << "\n";
  for (const auto& r : rows) {
    out << r.model << "," << r.station_id << "," << r.season << "," << r.day
        << "," << format_double(r.swe_mm) << "\n";
  }
  require(out.good(), "write failed for predictions: " + path);
}

std::vector<PredictionRow> read_predictions_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open predictions: " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)),
          path + ": empty file, expected header");
  require(split_line(line) == split_line(kPredictionHeader),
          path + ": unexpected header, want '" + std::string(kPredictionHeader) + "'");
  std::vector<PredictionRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string ctx = path + " line " + std::to_string(lineno);
    auto f = split_line(line);
    require(f.size() == 5, ctx + ": expected 5 fields");
    PredictionRow r;
    r.model = f[0];
    r.station_id = f[1];
    auto parse_i = [&](const std::string& s) {
      int v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      require(ec == std::errc() && p == s.data() + s.size(),
              ctx + ": not an integer: '" + s + "'");
      return v;
    };
    r.season = parse_i(f[2]);
    r.day = parse_i(f[3]);
    double v = 0.0;
    auto [p, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), v);
    require(ec == std::errc() && p == f[4].data() + f[4].size(),
            ctx + ": not a number: '" + f[4] + "'");
    r.swe_mm = v;
    rows.push_back(std::move(r));
  }
  return rows;
}

PredictionGrid grid_from_rows(const data::SeasonDataset& ds,
                              const std::vector<const PredictionRow*>& rows) {
  PredictionGrid grid;
  std::size_t cells = data::example_key_count(ds.n_stations(), ds.n_seasons(),
                                              ds.season_length);
  grid.values.assign(cells, 0.0);
  grid.present.assign(cells, 0);
  for (const PredictionRow* r : rows) {
    int i = ds.station_index(r->station_id);
    require(i >= 0, "prediction references unknown station " + r->station_id);
    int s = ds.season_index(r->season);
    require(s >= 0, "prediction references season " + std::to_string(r->season) +
                        " not in the dataset");
    require(r->day >= 1 && r->day <= ds.season_length,
            "prediction day " + std::to_string(r->day) + " out of range");
    std::size_t idx = ds.lindex(i, r->day - 1, s);
    require(!grid.present[idx], "duplicate prediction for station " +
                                    r->station_id + " season " +
                                    std::to_string(r->season) + " day " +
                                    std::to_string(r->day));
    grid.values[idx] = r->swe_mm;
    grid.present[idx] = 1;
  }
  return grid;
}

std::vector<LocationScore> evaluate_locations(const data::SeasonDataset& ds,
                                              const PredictionGrid& grid) {
  require(!ds.test_seasons.empty(), "evaluate: dataset has no test seasons");
  std::vector<int> test_idx;
  for (int y : ds.test_seasons) {
    int s = ds.season_index(y);
    require(s >= 0, "evaluate: test season missing from dataset");
    test_idx.push_back(s);
  }

  // coverage check: every labeled test key needs a prediction
  std::vector<std::string> missing;
  for (int i = 0; i < ds.n_stations(); ++i)
    for (int s : test_idx)
      for (int d = 0; d < ds.season_length; ++d) {
        std::size_t idx = ds.lindex(i, d, s);
        if (ds.label_present[idx] && !grid.present[idx]) {
          if (missing.size() < 8) {
            missing.push_back(ds.stations[static_cast<std::size_t>(i)].station_id + "/" +
                              std::to_string(ds.seasons[static_cast<std::size_t>(s)]) + "/" +
                              std::to_string(d + 1));
          }
        }
      }
  if (!missing.empty()) {
    std::string list;
    for (const auto& k : missing) list += " " + k;
    fail("evaluate: predictions missing for labeled keys (station/season/day):" + list);
  }

  std::vector<LocationScore> scores;
  for (int i = 0; i < ds.n_stations(); ++i) {
    LocationScore sc;
    sc.station_id = ds.stations[static_cast<std::size_t>(i)].station_id;
    sc.elevation = ds.stations[static_cast<std::size_t>(i)].elevation;

    std::vector<double> actual, predicted;
    for (int s : test_idx) {
      double obs_max = -std::numeric_limits<double>::infinity();
      double pred_max = -std::numeric_limits<double>::infinity();
      bool have_label = false;
      for (int d = 0; d < ds.season_length; ++d) {
        std::size_t idx = ds.lindex(i, d, s);
        if (grid.present[idx]) pred_max = std::max(pred_max, grid.values[idx]);
        if (!ds.label_present[idx]) continue;
        have_label = true;
        obs_max = std::max(obs_max, ds.labels[idx]);
        actual.push_back(ds.labels[idx]);
        predicted.push_back(grid.values[idx]);
      }
      if (have_label) {
        sc.annual_max_error.emplace_back(ds.seasons[static_cast<std::size_t>(s)],
                                         pred_max - obs_max);
      }
    }
    require(actual.size() >= 2, "evaluate: fewer than 2 labeled test days for " +
                                    sc.station_id);
    sc.nse = nse(actual, predicted);
    double err = 0.0;
    for (std::size_t k = 0; k < actual.size(); ++k) err += predicted[k] - actual[k];
    sc.mean_daily_error = err / static_cast<double>(actual.size());
    scores.push_back(std::move(sc));
  }
  return scores;
}

int NseHistogram::total() const {
  int t = undefined;
  for (int c : counts) t += c;
  return t;
}

std::array<double, 5> NseHistogram::fractions() const {
  std::array<double, 5> f{};
  int t = total();
  if (t == 0) return f;
  for (std::size_t i = 0; i < 5; ++i)
    f[i] = static_cast<double>(counts[i]) / static_cast<double>(t);
  return f;
}

namespace {

// mean / quartile summary for the error box plots
json distribution_stats(std::vector<double> values) {
  if (values.empty()) return nullptr;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    double pos = q * static_cast<double>(values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    double t = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - t) + values[hi] * t;
  };
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  return json{{"mean", mean},
              {"p25", quantile(0.25)},
              {"median", quantile(0.5)},
              {"p75", quantile(0.75)}};
}

}  // namespace

NseHistogram bin_nse(const std::vector<NseValue>& scores) {
  NseHistogram h;
  int above = 0;
  for (const auto& s : scores) {
    if (!s.defined) {
      h.undefined += 1;
      continue;
    }
    double v = s.value;
    if (v < 0.0) h.counts[0] += 1;
    else if (v < 0.25) h.counts[1] += 1;
    else if (v < 0.5) h.counts[2] += 1;
    else if (v < 0.75) h.counts[3] += 1;
    else h.counts[4] += 1;
    if (v > 0.5) above += 1;
  }
  int t = h.total();
  h.fraction_above_half = t > 0 ? static_cast<double>(above) / t : 0.0;
  return h;
}

RmpCurves relative_model_performance(
    const std::vector<std::string>& models,
    const std::vector<std::vector<NseValue>>& nse_by_model, double step,
    double max_rmp) {
  require(models.size() == nse_by_model.size(), "rmp: model list mismatch");
  require(!models.empty(), "rmp: need at least one model");
  require(step > 0.0 && max_rmp > 0.0, "rmp: step and max must be positive");
  std::size_t n_loc = nse_by_model[0].size();
  for (const auto& v : nse_by_model)
    require(v.size() == n_loc, "rmp: per-model score lists differ in length");

  RmpCurves out;
  out.models = models;
  int n_grid = static_cast<int>(std::lround(max_rmp / step)) + 1;
  for (int k = 0; k < n_grid; ++k) out.grid.push_back(k * step);

  // per location best defined NSE
  std::vector<double> best(n_loc, -std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> any_defined(n_loc, 0);
  for (const auto& scores : nse_by_model)
    for (std::size_t l = 0; l < n_loc; ++l)
      if (scores[l].defined) {
        best[l] = std::max(best[l], scores[l].value);
        any_defined[l] = 1;
      }

  for (const auto& scores : nse_by_model) {
    std::vector<double> rmp;
    for (std::size_t l = 0; l < n_loc; ++l) {
      if (!scores[l].defined || !any_defined[l]) continue;
      rmp.push_back(best[l] - scores[l].value);
    }
    std::vector<double> frac(static_cast<std::size_t>(n_grid), 0.0);
    if (!rmp.empty()) {
      for (int k = 0; k < n_grid; ++k) {
        std::size_t cnt = 0;
        for (double r : rmp)
          if (r <= out.grid[static_cast<std::size_t>(k)] + 1e-12) ++cnt;
        frac[static_cast<std::size_t>(k)] =
            static_cast<double>(cnt) / static_cast<double>(rmp.size());
      }
    }
    out.fractions.push_back(std::move(frac));
  }
  return out;
}

ElevationGroups elevation_group_medians(
    const std::vector<std::string>& models,
    const std::vector<std::vector<NseValue>>& nse_by_model,
    const std::vector<double>& elevations,
    const std::vector<std::string>& station_ids) {
  std::size_t n_loc = elevations.size();
  require(n_loc >= 4, "elevation groups: need at least 4 locations");
  require(station_ids.size() == n_loc, "elevation groups: id list mismatch");
  require(models.size() == nse_by_model.size(), "elevation groups: model list mismatch");
  for (const auto& v : nse_by_model)
    require(v.size() == n_loc, "elevation groups: score list mismatch");

  std::vector<std::size_t> order(n_loc);
  for (std::size_t i = 0; i < n_loc; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (elevations[a] != elevations[b]) return elevations[a] < elevations[b];
    return station_ids[a] < station_ids[b];
  });

  ElevationGroups out;
  out.models = models;
  std::array<std::vector<std::size_t>, 4> groups;
  for (std::size_t rank = 0; rank < n_loc; ++rank) {
    std::size_t g = std::min<std::size_t>(4 * rank / n_loc, 3);
    groups[g].push_back(order[rank]);
  }
  for (std::size_t g = 0; g < 4; ++g) {
    out.group_sizes[g] = static_cast<int>(groups[g].size());
    out.best_model[g] = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
      std::vector<double> vals;
      for (std::size_t loc : groups[g])
        if (nse_by_model[mi][loc].defined) vals.push_back(nse_by_model[mi][loc].value);
      double med = std::numeric_limits<double>::quiet_NaN();
      if (!vals.empty()) {
        std::sort(vals.begin(), vals.end());
        std::size_t mid = vals.size() / 2;
        med = vals.size() % 2 ? vals[mid] : 0.5 * (vals[mid - 1] + vals[mid]);
      }
      out.medians[g].push_back(med);
      if (!std::isnan(med) && med > best) {
        best = med;
        out.best_model[g] = static_cast<int>(mi);
      }
    }
  }
  return out;
}

void write_location_scores_csv(
    const std::string& path, const std::vector<std::string>& models,
    const std::vector<std::vector<LocationScore>>& scores) {
  require(models.size() == scores.size(), "report: model list mismatch");
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot write " + path);
  out << "model,station_id,nse,mean_daily_err_mm,elevation_m\n";
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    for (const auto& sc : scores[mi]) {
      out << models[mi] << "," << sc.station_id << ","
          << (sc.nse.defined ? format_double(sc.nse.value) : std::string()) << ","
          << format_double(sc.mean_daily_error) << ","
          << format_double(sc.elevation) << "\n";
    }
  }
  require(out.good(), "write failed for " + path);
}

void write_summary_json(const std::string& path,
                        const std::vector<std::string>& models,
                        const std::vector<std::vector<LocationScore>>& scores) {
  require(models.size() == scores.size(), "report: model list mismatch");

  std::vector<std::vector<NseValue>> nse_by_model;
  for (const auto& sc : scores) {
    std::vector<NseValue> v;
    for (const auto& s : sc) v.push_back(s.nse);
    nse_by_model.push_back(std::move(v));
  }

  json j;
  j["format_version"] = 1;
  json per_model = json::object();
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    NseHistogram h = bin_nse(nse_by_model[mi]);
    auto fr = h.fractions();
    json mj;
    mj["nse_bins"] = {{"edges", {"<0", "[0,0.25)", "[0.25,0.5)", "[0.5,0.75)", "[0.75,1]"}},
                      {"counts", h.counts},
                      {"fractions", fr},
                      {"undefined", h.undefined}};
    mj["fraction_nse_above_0.5"] = h.fraction_above_half;

    std::vector<double> daily_errors, annual_max_errors;
    for (const auto& s : scores[mi]) {
      daily_errors.push_back(s.mean_daily_error);
      for (const auto& [season, err] : s.annual_max_error) {
        (void)season;
        annual_max_errors.push_back(err);
      }
    }
    mj["daily_error_mm"] = distribution_stats(std::move(daily_errors));
    mj["annual_max_error_mm"] = distribution_stats(std::move(annual_max_errors));
    per_model[models[mi]] = mj;
  }
  j["models"] = per_model;

  if (!scores.empty() && scores[0].size() >= 4) {
    std::vector<double> elevations;
    std::vector<std::string> ids;
    for (const auto& s : scores[0]) {
      elevations.push_back(s.elevation);
      ids.push_back(s.station_id);
    }
    ElevationGroups eg =
        elevation_group_medians(models, nse_by_model, elevations, ids);
    json groups = json::array();
    const char* names[4] = {"[0%,25%)", "[25%,50%)", "[50%,75%)", "[75%,100%]"};
    for (std::size_t g = 0; g < 4; ++g) {
      json gj;
      gj["group"] = names[g];
      gj["count"] = eg.group_sizes[g];
      json med = json::object();
      for (std::size_t mi = 0; mi < models.size(); ++mi) {
        double v = eg.medians[g][mi];
        if (std::isnan(v)) med[models[mi]] = nullptr;
        else med[models[mi]] = v;
      }
      gj["median_nse"] = med;
      gj["best_model"] = eg.best_model[g] >= 0 ? json(models[static_cast<std::size_t>(eg.best_model[g])])
                                               : json(nullptr);
      groups.push_back(gj);
    }
    j["elevation_groups"] = groups;
  }

  RmpCurves rmp = relative_model_performance(models, nse_by_model);
  json rj;
  rj["grid"] = rmp.grid;
  json curves = json::object();
  for (std::size_t mi = 0; mi < models.size(); ++mi)
    curves[models[mi]] = rmp.fractions[mi];
  rj["fraction_within"] = curves;
  j["rmp"] = rj;

  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot write " + path);
  out << j.dump(2) << "\n";
  require(out.good(), "write failed for " + path);
}

}  // namespace swe::eval
