#include "swe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "swe/error.hpp"
#include "swe/rng.hpp"

namespace swe::data {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Anchor {
  double lat, lon, elev;
};

double field_weight(const StationMeta& s, const Anchor& a) {
  // correlation decays with horizontal distance and elevation difference
  double dlat = s.latitude - a.lat;
  double dlon = s.longitude - a.lon;
  double dist2 = dlat * dlat + dlon * dlon;      // degrees^2, ~5 deg scale
  double delev = (s.elevation - a.elev) / 800.0; // meters, ~800 m scale
  return std::exp(-dist2 / 25.0 - delev * delev);
}

}  // namespace

SyntheticResult generate_synthetic(const SyntheticConfig& cfg) {
  require(cfg.n_stations > 0 && cfg.season_length > 0 && cfg.n_seasons > 0,
          "synthetic: counts must be positive");
  require(cfg.noise >= 0.0, "synthetic: noise must be non-negative");
  require(cfg.missing_rate >= 0.0 && cfg.missing_rate < 1.0,
          "synthetic: missing_rate must be in [0, 1)");

  nn::Rng rng(cfg.seed);
  SyntheticResult out;
  int m = cfg.season_length;

  for (int i = 0; i < cfg.n_stations; ++i) {
    StationMeta s;
    char id[16];
    std::snprintf(id, sizeof(id), "SYN%03d", i + 1);
    s.station_id = id;
    s.latitude = rng.uniform(36.0, 48.0);
    s.longitude = rng.uniform(-124.0, -106.0);
    s.elevation = rng.uniform(1200.0, 3400.0);
    double aspect = rng.uniform(0.0, 360.0);
    double slope = rng.uniform(5.0, 35.0);
    s.southness = compute_southness(aspect, slope);
    s.land_cover = rng.uniform_int(1, 3);
    out.stations.push_back(std::move(s));
    out.aspect_slope.emplace_back(aspect, slope);
  }

  constexpr int kAnchors = 4;
  std::vector<Anchor> anchors;
  for (int k = 0; k < kAnchors; ++k) {
    anchors.push_back({rng.uniform(36.0, 48.0), rng.uniform(-124.0, -106.0),
                       rng.uniform(1200.0, 3400.0)});
  }

  for (int sidx = 0; sidx < cfg.n_seasons; ++sidx) {
    int season = cfg.first_season + sidx;
    double strength = rng.uniform(0.75, 1.25);
    std::array<double, kAnchors> coeff;
    for (int k = 0; k < kAnchors; ++k) coeff[static_cast<std::size_t>(k)] = rng.uniform(-1.0, 1.0);

    for (int i = 0; i < cfg.n_stations; ++i) {
      const StationMeta& st = out.stations[static_cast<std::size_t>(i)];

      double wsum = 0.0, fsum = 0.0;
      for (int k = 0; k < kAnchors; ++k) {
        double w = field_weight(st, anchors[static_cast<std::size_t>(k)]);
        wsum += w;
        fsum += w * coeff[static_cast<std::size_t>(k)];
      }
      double field = wsum > 1e-12 ? fsum / wsum : 0.0;

      double peak = (40.0 + 260.0 * (st.elevation - 1200.0) / 2200.0) * strength *
                    (1.0 + 0.3 * cfg.noise * field);
      peak = std::max(peak, 5.0);

      double jitter = cfg.noise * rng.uniform(-0.04, 0.04);
      int day_start = std::clamp(static_cast<int>(std::lround((0.12 + jitter) * m)), 1, m - 3);
      int day_peak = std::clamp(static_cast<int>(std::lround((0.55 + jitter) * m)),
                                day_start + 1, m - 2);
      int day_melt = std::clamp(static_cast<int>(std::lround((0.85 + jitter) * m)),
                                day_peak + 1, m - 1);

      std::vector<double> swe(static_cast<std::size_t>(m), 0.0);
      for (int j = 1; j <= m; ++j) {
        double v = 0.0;
        if (j > day_start && j <= day_peak) {
          v = peak * static_cast<double>(j - day_start) / (day_peak - day_start);
        } else if (j > day_peak && j < day_melt) {
          v = peak * static_cast<double>(day_melt - j) / (day_melt - day_peak);
        }
        if (v > 0.0 && cfg.noise > 0.0) {
          v *= 1.0 + 0.05 * cfg.noise * rng.normal();
          v = std::max(v, 0.0);
        }
        swe[static_cast<std::size_t>(j - 1)] = v;
      }

      for (int j = 1; j <= m; ++j) {
        double v = swe[static_cast<std::size_t>(j - 1)];
        DailyRecord r;
        r.station_id = st.station_id;
        r.season = season;
        r.day = j;

        double season_phase = std::sin(kPi * (j - 0.5) / m);
        double tavg = 14.0 - 6.0 * (st.elevation - 1200.0) / 1000.0 -
                      22.0 * season_phase + 2.0 * cfg.noise * rng.normal();
        double spread = 4.0 + cfg.noise * std::abs(rng.normal());
        double prev = j > 1 ? swe[static_cast<std::size_t>(j - 2)] : 0.0;
        double precip = std::max(v - prev, 0.0);
        if (cfg.noise > 0.0) {
          precip *= 1.0 + 0.3 * cfg.noise * std::abs(rng.normal());
          precip += 2.0 * cfg.noise * std::max(0.0, rng.normal());
        }
        double tb37 = 250.0 - 0.25 * v + 1.5 * cfg.noise * rng.normal();
        double tb19 = 254.0 - 0.08 * v + 1.5 * cfg.noise * rng.normal();

        r.swe = v;
        r.precip = precip;
        r.tmin = tavg - spread;
        r.tmax = tavg + spread;
        r.tavg = tavg;
        r.tb19v = tb19;
        r.tb37v = tb37;
        r.tb_diff = tb19 - tb37;

        if (cfg.missing_rate > 0.0) {
          if (rng.bernoulli(cfg.missing_rate)) r.swe.reset();
          if (rng.bernoulli(cfg.missing_rate)) r.precip.reset();
          if (rng.bernoulli(cfg.missing_rate)) r.tmin.reset();
          if (rng.bernoulli(cfg.missing_rate)) r.tmax.reset();
          if (rng.bernoulli(cfg.missing_rate)) r.tavg.reset();
          if (rng.bernoulli(cfg.missing_rate)) r.tb19v.reset();
          if (rng.bernoulli(cfg.missing_rate)) r.tb37v.reset();
          if (!r.tb19v || !r.tb37v) r.tb_diff.reset();
        }
        out.records.push_back(std::move(r));
      }
    }
  }
  return out;
}

}  // namespace swe::data
