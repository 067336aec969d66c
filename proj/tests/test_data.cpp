#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <functional>
#include <unistd.h>
#include <filesystem>
#include <fstream>

#include "swe/data.hpp"
#include "swe/error.hpp"
#include "swe/synthetic.hpp"

using namespace swe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("swe_data_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  out << content;
}

const char* kStationsHeader =
    "station_id,lat,lon,elevation_m,aspect_deg,slope_deg,land_cover\n";
const char* kDailyHeader =
    "station_id,date,swe_mm,precip_mm,tmin_c,tmax_c,tavg_c,tb19v_k,tb37v_k\n";

// two stations, two seasons of length m, complete unless `drop` returns true
std::vector<data::DailyRecord> grid_records(
    const std::vector<std::string>& ids, const std::vector<int>& seasons, int m,
    const std::function<bool(const std::string&, int, int)>& drop_swe = nullptr) {
  std::vector<data::DailyRecord> records;
  for (const auto& id : ids)
    for (int h : seasons)
      for (int j = 1; j <= m; ++j) {
        data::DailyRecord r;
        r.station_id = id;
        r.season = h;
        r.day = j;
        r.swe = (drop_swe && drop_swe(id, h, j)) ? std::nullopt
                                                 : std::optional<double>(j * 1.0);
        r.precip = 1.0;
        r.tmin = -5.0;
        r.tmax = 5.0;
        r.tavg = 0.0;
        r.tb19v = 250.0;
        r.tb37v = 240.0;
        r.tb_diff = 10.0;
        records.push_back(std::move(r));
      }
  return records;
}

std::vector<data::StationMeta> two_stations() {
  data::StationMeta a;
  a.station_id = "A01";
  a.latitude = 40.0;
  a.longitude = -110.0;
  a.elevation = 2000.0;
  a.southness = 0.25;
  a.land_cover = 1;
  data::StationMeta b = a;
  b.station_id = "B02";
  b.elevation = 2500.0;
  b.land_cover = 2;
  return {a, b};
}

}  // namespace

TEST_CASE("southness formula on the anchor angles") {
  CHECK(data::compute_southness(0.0, 0.0) == 0.0);
  CHECK(data::compute_southness(123.0, 0.0) == 0.0);
  CHECK(std::abs(data::compute_southness(90.0, 30.0)) < 1e-15);
  CHECK(data::compute_southness(0.0, 90.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(data::compute_southness(180.0, 90.0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(data::compute_southness(-1.0, 10.0), Error);
  CHECK_THROWS_AS(data::compute_southness(360.0, 10.0), Error);
  CHECK_THROWS_AS(data::compute_southness(10.0, 91.0), Error);
}

TEST_CASE("water-year day indexing starts Oct 1 and drops Feb 29") {
  auto d1 = data::water_year_day(2014, 10, 1, 270);
  REQUIRE(d1.has_value());
  CHECK(d1->first == 2015);
  CHECK(d1->second == 1);

  // 2016 is a leap year; water year 2016 contains Feb 29 2016
  CHECK_FALSE(data::water_year_day(2016, 2, 29, 270).has_value());
  auto feb28 = data::water_year_day(2016, 2, 28, 270);
  auto mar01 = data::water_year_day(2016, 3, 1, 270);
  REQUIRE(feb28.has_value());
  REQUIRE(mar01.has_value());
  CHECK(mar01->second == feb28->second + 1);  // the 29th vanished

  // past the season window
  CHECK_FALSE(data::water_year_day(2015, 8, 1, 270).has_value());
}

TEST_CASE("water-year date round-trips through the day index") {
  for (int season : {2015, 2016, 2020}) {
    for (int j : {1, 60, 151, 152, 200, 270}) {
      auto [y, mo, d] = data::water_year_date(season, j);
      auto back = data::water_year_day(y, mo, d, 270);
      REQUIRE(back.has_value());
      CHECK(back->first == season);
      CHECK(back->second == j);
    }
  }
}

TEST_CASE("load_station_data parses a 2x2 fixture field-exact") {
  TempDir tmp;
  write_file(tmp.file("stations.csv"),
             std::string(kStationsHeader) +
                 "A01,40.5,-111.25,2134,180,25,42\n"
                 "B02,41,-110,2750,90,10,7\n");
  write_file(tmp.file("daily.csv"),
             std::string(kDailyHeader) +
                 "A01,2014-10-01,120.5,3.2,-4,6,1,251.3,235.7\n"
                 "A01,2014-10-02,,0,-5,4,0.5,250,236\n"
                 "B02,2014-10-01,80,0,-2,8,3,249,241\n"
                 "B02,2014-10-02,81,1,-3,7,2,248.5,240.25\n");
  auto [stations, records] =
      data::load_station_data(tmp.file("stations.csv"), tmp.file("daily.csv"), 270);

  REQUIRE(stations.size() == 2);
  CHECK(stations[0].station_id == "A01");
  CHECK(stations[0].elevation == 2134.0);
  CHECK(stations[0].southness ==
        doctest::Approx(data::compute_southness(180, 25)).epsilon(1e-15));
  CHECK(stations[1].land_cover == 7);

  REQUIRE(records.size() == 4);
  CHECK(records[0].season == 2015);
  CHECK(records[0].day == 1);
  CHECK(records[0].swe == 120.5);
  CHECK(records[0].tb_diff == doctest::Approx(251.3 - 235.7));
  CHECK_FALSE(records[1].swe.has_value());  // blank field stays missing
  CHECK(records[1].precip == 0.0);          // zero is a value, not missing
}

TEST_CASE("empty daily file parses to an empty record list") {
  TempDir tmp;
  write_file(tmp.file("stations.csv"),
             std::string(kStationsHeader) + "A01,40,-110,2000,0,0,1\n");
  write_file(tmp.file("daily.csv"), kDailyHeader);
  auto [stations, records] =
      data::load_station_data(tmp.file("stations.csv"), tmp.file("daily.csv"));
  CHECK(stations.size() == 1);
  CHECK(records.empty());
}

TEST_CASE("malformed daily rows fail with the line number") {
  TempDir tmp;
  write_file(tmp.file("stations.csv"),
             std::string(kStationsHeader) + "A01,40,-110,2000,0,0,1\n");
  write_file(tmp.file("daily.csv"),
             std::string(kDailyHeader) +
                 "A01,2014-10-01,1,1,0,1,0,250,240\n"
                 "A01,2014-10-02,not_a_number,1,0,1,0,250,240\n");
  CHECK_THROWS_WITH_AS(
      data::load_station_data(tmp.file("stations.csv"), tmp.file("daily.csv")),
      doctest::Contains("line 3"), Error);
}

TEST_CASE("daily rows naming unknown stations are rejected") {
  TempDir tmp;
  write_file(tmp.file("stations.csv"),
             std::string(kStationsHeader) + "A01,40,-110,2000,0,0,1\n");
  write_file(tmp.file("daily.csv"),
             std::string(kDailyHeader) + "ZZZ,2014-10-01,1,1,0,1,0,250,240\n");
  CHECK_THROWS_WITH_AS(
      data::load_station_data(tmp.file("stations.csv"), tmp.file("daily.csv")),
      doctest::Contains("ZZZ"), Error);
}

TEST_CASE("inverted temperature bounds are rejected at load") {
  TempDir tmp;
  write_file(tmp.file("stations.csv"),
             std::string(kStationsHeader) + "A01,40,-110,2000,0,0,1\n");
  write_file(tmp.file("daily.csv"),
             std::string(kDailyHeader) + "A01,2014-10-01,1,1,5,-5,0,250,240\n");
  CHECK_THROWS_WITH_AS(
      data::load_station_data(tmp.file("stations.csv"), tmp.file("daily.csv")),
      doctest::Contains("tmin"), Error);
}

TEST_CASE("station filter keeps complete stations and drops leaky ones") {
  const int m = 100;
  std::vector<std::string> ids{"CLEAN", "LEAKY"};
  std::vector<int> seasons{2001, 2002};
  // LEAKY misses 11% of swe in one season
  auto records = grid_records(ids, seasons, m, [&](const std::string& id, int h, int j) {
    return id == "LEAKY" && h == 2002 && j <= 11;
  });
  auto retained = data::filter_stations(records, ids, seasons, m, 0.10);
  CHECK(retained == std::vector<std::string>{"CLEAN"});
}

TEST_CASE("exactly 10 percent missing is retained (rule is 'more than')") {
  const int m = 100;
  std::vector<std::string> ids{"EDGE"};
  std::vector<int> seasons{2001};
  auto records = grid_records(ids, seasons, m, [&](const std::string&, int, int j) {
    return j <= 10;  // exactly 10%
  });
  CHECK(data::filter_stations(records, ids, seasons, m, 0.10) ==
        std::vector<std::string>{"EDGE"});

  auto records11 = grid_records(ids, seasons, m, [&](const std::string&, int, int j) {
    return j <= 11;
  });
  CHECK(data::filter_stations(records11, ids, seasons, m, 0.10).empty());
}

TEST_CASE("filter is monotone in the threshold") {
  const int m = 50;
  std::vector<std::string> ids{"S1", "S2", "S3"};
  std::vector<int> seasons{2001};
  auto records = grid_records(ids, seasons, m, [&](const std::string& id, int, int j) {
    if (id == "S1") return false;
    if (id == "S2") return j <= 5;   // 10%
    return j <= 20;                  // 40%
  });
  std::size_t prev = 0;
  for (double thr : {0.0, 0.05, 0.10, 0.25, 0.50, 1.0}) {
    auto kept = data::filter_stations(records, ids, seasons, m, thr);
    CHECK(kept.size() >= prev);
    prev = kept.size();
  }
  CHECK(prev == 3);
}

TEST_CASE("gap filling: interior gaps interpolate, edges take nearest") {
  std::vector<double> vals = {0, 2, 0, 4, 0};
  std::vector<std::uint8_t> mask = {0, 1, 0, 1, 0};
  auto filled = data::fill_gaps(vals, mask);
  CHECK(filled == std::vector<double>{2, 2, 3, 4, 4});

  std::vector<double> lead = {0, 0, 5, 6};
  std::vector<std::uint8_t> lead_mask = {0, 0, 1, 1};
  CHECK(data::fill_gaps(lead, lead_mask) == std::vector<double>{5, 5, 5, 6});

  std::vector<std::uint8_t> none = {0, 0};
  CHECK_THROWS_AS(data::fill_gaps({1, 2}, none), Error);
}

TEST_CASE("assemble_season passes a complete season through unchanged") {
  const int m = 5;
  auto records = grid_records({"A"}, {2001}, m);
  auto arrays = data::assemble_season(records, "A", 2001, m);
  REQUIRE(arrays.alpha.size() == 5);
  for (int d = 0; d < m; ++d) {
    CHECK(arrays.alpha[static_cast<std::size_t>(d)][0] == 1.0);  // precip
    CHECK(arrays.swe[static_cast<std::size_t>(d)] == d + 1.0);
    CHECK(arrays.swe_present[static_cast<std::size_t>(d)] == 1);
  }
}

TEST_CASE("assemble_season interpolates a single interior gap") {
  const int m = 3;
  auto records = grid_records({"A"}, {2001}, m);
  records[1].precip.reset();        // day 2 gap between 1.0 and 1.0
  records[1].tavg = std::nullopt;
  records[0].precip = 2.0;
  records[2].precip = 4.0;
  auto arrays = data::assemble_season(records, "A", 2001, m);
  CHECK(arrays.alpha[1][0] == 3.0);  // midpoint of 2 and 4
}

TEST_CASE("assemble_season rejects a fully missing variable") {
  const int m = 4;
  auto records = grid_records({"A"}, {2001}, m);
  for (auto& r : records) r.tb19v.reset();
  CHECK_THROWS_WITH_AS(data::assemble_season(records, "A", 2001, m),
                       doctest::Contains("tb19v"), Error);
}

TEST_CASE("gamma window averages across adjacent seasons") {
  const int m = 3;
  std::map<int, data::SeasonArrays> by_season;
  for (int h : {2000, 2001, 2002}) {
    auto records = grid_records({"A"}, {h}, m);
    for (auto& r : records) r.precip = h - 1999;  // 1, 2, 3
    by_season[h] = data::assemble_season(records, "A", h, m);
  }

  // w=0: the day's own value
  CHECK(data::compute_gamma(by_season, 2, 2001, 0)[0] == 2.0);
  // w=1 centered: mean of {1,2,3}
  CHECK(data::compute_gamma(by_season, 2, 2001, 1)[0] == 2.0);
  // w=1 at the range edge: clamped to {2000, 2001}
  CHECK(data::compute_gamma(by_season, 2, 2000, 1)[0] == 1.5);
  // all-identical seasons return the common value exactly
  CHECK(data::compute_gamma(by_season, 1, 2001, 5)[1] == -5.0);  // tmin constant
}

TEST_CASE("train/test split matches the 13/5 layout on 18 seasons") {
  std::vector<int> seasons;
  for (int y = 2002; y <= 2019; ++y) seasons.push_back(y);
  auto [train, test] = data::split_train_test(seasons, {2007, 2008, 2015, 2017, 2018});
  CHECK(train.size() == 13);
  CHECK(test.size() == 5);
  CHECK(test == std::vector<int>{2007, 2008, 2015, 2017, 2018});

  auto [train2, test2] = data::split_train_test(seasons, {2010});
  CHECK(test2 == std::vector<int>{2010});
  CHECK(train2.size() == 17);

  CHECK_THROWS_WITH_AS(data::split_train_test(seasons, {1999}),
                       doctest::Contains("1999"), Error);
}

TEST_CASE("full-scale key count is exactly 1,569,780") {
  CHECK(data::example_key_count(323, 18, 270) == 1569780u);
}

TEST_CASE("normalization centers constant features without scaling") {
  auto stations = two_stations();
  auto records = grid_records({"A01", "B02"}, {2001, 2002}, 6);
  data::DatasetConfig cfg;
  cfg.season_length = 6;
  cfg.gamma_window = 1;
  cfg.test_years = {2002};
  auto ds = data::build_dataset(stations, records, cfg);

  // precip is constant 1.0 everywhere: z-scoring is skipped, centering applies
  int f = -1;
  for (int i = 0; i < ds.feature_dim(); ++i)
    if (ds.feature_names[static_cast<std::size_t>(i)] == "precip") f = i;
  REQUIRE(f >= 0);
  CHECK(ds.norm_stats.stddev[static_cast<std::size_t>(f)] == 1.0);
  CHECK(ds.norm_stats.mean[static_cast<std::size_t>(f)] == 1.0);
  CHECK(ds.features[ds.findex(0, 0, 0, f)] == 0.0);
}

TEST_CASE("training features are standardized; test seasons are not re-fit") {
  data::SyntheticConfig scfg;
  scfg.n_stations = 5;
  scfg.season_length = 12;
  scfg.n_seasons = 3;
  scfg.noise = 0.5;
  scfg.seed = 99;
  auto gen = data::generate_synthetic(scfg);
  data::DatasetConfig cfg;
  cfg.season_length = 12;
  cfg.gamma_window = 1;
  cfg.test_years = {2003};
  auto ds = data::build_dataset(gen.stations, gen.records, cfg);

  int f = -1;
  for (int i = 0; i < ds.feature_dim(); ++i)
    if (ds.feature_names[static_cast<std::size_t>(i)] == "tavg") f = i;
  REQUIRE(f >= 0);

  auto stats_over = [&](const std::vector<int>& years) {
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (int y : years) {
      int s = ds.season_index(y);
      for (int i = 0; i < ds.n_stations(); ++i)
        for (int d = 0; d < ds.season_length; ++d) {
          double v = ds.features[ds.findex(i, d, s, f)];
          sum += v;
          sq += v * v;
          ++count;
        }
    }
    double mean = sum / count;
    return std::make_pair(mean, std::sqrt(sq / count - mean * mean));
  };
  auto [train_mean, train_std] = stats_over(ds.train_seasons);
  CHECK(std::abs(train_mean) < 1e-9);
  CHECK(train_std == doctest::Approx(1.0).epsilon(1e-9));

  auto [test_mean, test_std] = stats_over(ds.test_seasons);
  CHECK(std::abs(test_mean) > 1e-6);  // no leakage: test stats differ from (0,1)
}

TEST_CASE("synthetic generation is a pure function of its seed") {
  data::SyntheticConfig cfg;
  cfg.n_stations = 4;
  cfg.season_length = 15;
  cfg.n_seasons = 2;
  cfg.noise = 0.3;
  cfg.seed = 1234;
  auto a = data::generate_synthetic(cfg);
  auto b = data::generate_synthetic(cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].swe == b.records[i].swe);
    CHECK(a.records[i].tavg == b.records[i].tavg);
  }
  cfg.seed = 1235;
  auto c = data::generate_synthetic(cfg);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.records.size(); ++i)
    any_diff |= (a.records[i].swe != c.records[i].swe);
  CHECK(any_diff);
}

TEST_CASE("noise-free synthetic peaks grow with elevation and melt out") {
  data::SyntheticConfig cfg;
  cfg.n_stations = 6;
  cfg.season_length = 30;
  cfg.n_seasons = 2;
  cfg.noise = 0.0;
  cfg.seed = 5;
  auto gen = data::generate_synthetic(cfg);

  std::map<std::string, double> elevation;
  for (const auto& s : gen.stations) elevation[s.station_id] = s.elevation;

  std::map<std::pair<std::string, int>, double> peak;
  for (const auto& r : gen.records) {
    auto key = std::make_pair(r.station_id, r.season);
    peak[key] = std::max(peak[key], r.swe.value());
    if (r.day == cfg.season_length) CHECK(r.swe.value() == 0.0);  // melt-out
  }
  for (const auto& a : gen.stations)
    for (const auto& b : gen.stations) {
      if (elevation[a.station_id] < elevation[b.station_id]) {
        for (int h = 2001; h <= 2002; ++h)
          CHECK(peak[{a.station_id, h}] < peak[{b.station_id, h}]);
      }
    }
}

TEST_CASE("dataset cache round-trips byte-identically") {
  TempDir tmp;
  data::SyntheticConfig scfg;
  scfg.n_stations = 3;
  scfg.season_length = 8;
  scfg.n_seasons = 2;
  scfg.seed = 77;
  auto gen = data::generate_synthetic(scfg);
  data::DatasetConfig cfg;
  cfg.season_length = 8;
  cfg.test_years = {2002};
  auto ds = data::build_dataset(gen.stations, gen.records, cfg);

  data::save_dataset(tmp.file("a.bin"), ds);
  auto loaded = data::load_dataset(tmp.file("a.bin"));
  CHECK(loaded.features == ds.features);
  CHECK(loaded.labels == ds.labels);
  CHECK(loaded.feature_names == ds.feature_names);
  CHECK(loaded.stations.size() == ds.stations.size());
  CHECK(loaded.train_seasons == ds.train_seasons);

  data::save_dataset(tmp.file("b.bin"), loaded);
  std::ifstream fa(tmp.file("a.bin"), std::ios::binary);
  std::ifstream fb(tmp.file("b.bin"), std::ios::binary);
  std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(ca == cb);

  CHECK_THROWS_AS(data::load_dataset(tmp.file("missing.bin")), Error);
}

TEST_CASE("corrupted cache magic is rejected") {
  TempDir tmp;
  write_file(tmp.file("bad.bin"), "NOTADATASET");
  CHECK_THROWS_WITH_AS(data::load_dataset(tmp.file("bad.bin")),
                       doctest::Contains("magic"), Error);
}

TEST_CASE("station csv writer round-trips through the loader") {
  TempDir tmp;
  data::SyntheticConfig scfg;
  scfg.n_stations = 4;
  scfg.season_length = 6;
  scfg.n_seasons = 1;
  scfg.seed = 3;
  auto gen = data::generate_synthetic(scfg);
  data::write_station_csv(tmp.file("stations.csv"), gen.stations, gen.aspect_slope);
  data::write_daily_csv(tmp.file("daily.csv"), gen.records);
  auto [stations, records] =
      data::load_station_data(tmp.file("stations.csv"), tmp.file("daily.csv"), 6);
  REQUIRE(stations.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(stations[i].station_id == gen.stations[i].station_id);
    CHECK(stations[i].elevation == gen.stations[i].elevation);
    CHECK(stations[i].southness ==
          doctest::Approx(gen.stations[i].southness).epsilon(1e-12));
  }
  CHECK(records.size() == gen.records.size());
}
