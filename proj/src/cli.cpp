#include "swe/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

#include "swe/data.hpp"
#include "swe/error.hpp"
#include "swe/evaluation.hpp"
#include "swe/gradcheck_suite.hpp"
#include "swe/models.hpp"
#include "swe/synthetic.hpp"
#include "swe/training.hpp"

namespace swe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Ties CLI options to config-file keys: a value from --config applies only
// when the flag was not passed on the command line.
class ConfigBindings {
 public:
  template <typename T>
  CLI::Option* bind(CLI::App* sub, const std::string& flag, T& var,
                    const std::string& desc) {
    CLI::Option* opt = sub->add_option(flag, var, desc);
    add(sub->get_name(), flag, opt, [&var](const json& v) { var = v.get<T>(); });
    return opt;
  }

  CLI::Option* bind_flag(CLI::App* sub, const std::string& flag, bool& var,
                         const std::string& desc) {
    CLI::Option* opt = sub->add_flag(flag, var, desc);
    add(sub->get_name(), flag, opt, [&var](const json& v) { var = v.get<bool>(); });
    return opt;
  }

  void apply(const json& cfg) const {
    for (const auto& b : bindings_) {
      if (b.opt->count() > 0) continue;
      if (!cfg.contains(b.section)) continue;
      const json& section = cfg.at(b.section);
      if (!section.contains(b.key)) continue;
      b.apply(section.at(b.key));
    }
  }

 private:
  struct Binding {
    CLI::Option* opt;
    std::string section, key;
    std::function<void(const json&)> apply;
  };
  std::vector<Binding> bindings_;

  void add(const std::string& section, const std::string& flag,
           CLI::Option* opt, std::function<void(const json&)> fn) {
    std::string key = flag;
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    bindings_.push_back({opt, section, key, std::move(fn)});
  }
};

std::vector<int> parse_year_list(const std::string& csv) {
  std::vector<int> years;
  std::string field;
  auto flush = [&]() {
    if (field.empty()) return;
    years.push_back(std::stoi(field));
    field.clear();
  };
  for (char c : csv) {
    if (c == ',') flush();
    else field += c;
  }
  flush();
  return years;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot write " + path.string());
  out << j.dump(2) << "\n";
  require(out.good(), "write failed for " + path.string());
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file: " + path);
  json j = json::parse(in);
  require(j.is_object() && j.contains("swe_config") &&
              j.at("swe_config").get<int>() == 1,
          "config file must be a JSON object with \"swe_config\": 1");
  return j;
}

void check_checkpoint_compat(const model::CheckpointMeta& meta,
                             const data::SeasonDataset& ds) {
  std::vector<std::string> ids;
  for (const auto& s : ds.stations) ids.push_back(s.station_id);
  require(meta.station_order == ids,
          "checkpoint station order does not match the dataset");
  require(meta.norm_stats.feature_names == ds.feature_names,
          "checkpoint feature layout does not match the dataset");
}

std::vector<int> split_years(const data::SeasonDataset& ds, const std::string& split) {
  if (split == "test") return ds.test_seasons;
  if (split == "train") return ds.train_seasons;
  if (split == "all") return ds.seasons;
  fail("unknown split '" + split + "' (expected test|train|all)");
}

std::vector<eval::PredictionRow> predict_rows(const model::AnyModel& m,
                                              const data::SeasonDataset& ds,
                                              const std::vector<int>& years) {
  std::vector<eval::PredictionRow> rows;
  std::string tag = model::to_string(m.kind);
  std::vector<int> sidx;
  for (int y : years) {
    int s = ds.season_index(y);
    require(s >= 0, "predict: season " + std::to_string(y) + " not in dataset");
    sidx.push_back(s);
  }
  int n = ds.n_stations(), mdays = ds.season_length, F = ds.feature_dim();

  switch (m.kind) {
    case model::ModelKind::spatial: {
      require(m.spatial.has_value(), "predict: spatial model absent");
      require(m.spatial->config().n_locations == n &&
                  m.spatial->config().feature_dim == F,
              "predict: spatial model dims do not match dataset");
      for (int s : sidx)
        for (int d = 0; d < mdays; ++d) {
          ad::Tensor x = train::spatial_example_input(ds, d, s);
          ad::Tensor y = m.spatial->predict(x);
          for (int i = 0; i < n; ++i)
            rows.push_back({tag, ds.stations[static_cast<std::size_t>(i)].station_id,
                            ds.seasons[static_cast<std::size_t>(s)], d + 1,
                            y[static_cast<std::size_t>(i)]});
        }
      break;
    }
    case model::ModelKind::temporal: {
      require(m.temporal.has_value(), "predict: temporal model absent");
      require(m.temporal->config().season_length == mdays &&
                  m.temporal->config().feature_dim == F,
              "predict: temporal model dims do not match dataset");
      for (int i = 0; i < n; ++i)
        for (int s : sidx) {
          ad::Tensor x = train::temporal_example_input(ds, i, s);
          ad::Tensor y = m.temporal->predict(x);
          for (int d = 0; d < mdays; ++d)
            rows.push_back({tag, ds.stations[static_cast<std::size_t>(i)].station_id,
                            ds.seasons[static_cast<std::size_t>(s)], d + 1,
                            y[static_cast<std::size_t>(d)]});
        }
      break;
    }
    case model::ModelKind::lstm: {
      require(m.lstm.has_value(), "predict: lstm model absent");
      require(m.lstm->config().feature_dim == F,
              "predict: lstm model dims do not match dataset");
      for (int i = 0; i < n; ++i)
        for (int s : sidx) {
          ad::Tensor x = train::temporal_example_input(ds, i, s);
          ad::Tensor y = m.lstm->predict(x);
          for (int d = 0; d < mdays; ++d)
            rows.push_back({tag, ds.stations[static_cast<std::size_t>(i)].station_id,
                            ds.seasons[static_cast<std::size_t>(s)], d + 1,
                            y[static_cast<std::size_t>(d)]});
        }
      break;
    }
    case model::ModelKind::lr: {
      require(m.lr.has_value(), "predict: lr model absent");
      require(m.lr->feature_dim == F, "predict: lr model dims do not match dataset");
      std::vector<double> feat(static_cast<std::size_t>(F));
      for (int i = 0; i < n; ++i)
        for (int s : sidx)
          for (int d = 0; d < mdays; ++d) {
            for (int f = 0; f < F; ++f)
              feat[static_cast<std::size_t>(f)] = ds.features[ds.findex(i, d, s, f)];
            rows.push_back({tag, ds.stations[static_cast<std::size_t>(i)].station_id,
                            ds.seasons[static_cast<std::size_t>(s)], d + 1,
                            m.lr->predict(feat)});
          }
      break;
    }
  }
  return rows;
}

void sort_rows(std::vector<eval::PredictionRow>& rows) {
  std::sort(rows.begin(), rows.end(),
            [](const eval::PredictionRow& a, const eval::PredictionRow& b) {
              return std::tie(a.model, a.station_id, a.season, a.day) <
                     std::tie(b.model, b.station_id, b.season, b.day);
            });
}

std::vector<eval::PredictionRow> ensemble_rows(
    const std::vector<eval::PredictionRow>& spatial,
    const std::vector<eval::PredictionRow>& temporal) {
  require(spatial.size() == temporal.size(),
          "ensemble: prediction sets differ in size");
  using Key = std::tuple<std::string, int, int>;
  std::map<Key, double> a;
  for (const auto& r : spatial) {
    bool inserted = a.emplace(Key{r.station_id, r.season, r.day}, r.swe_mm).second;
    require(inserted, "ensemble: duplicate spatial prediction key");
  }
  std::vector<double> ys, yt;
  std::vector<Key> keys;
  for (const auto& r : temporal) {
    Key k{r.station_id, r.season, r.day};
    auto it = a.find(k);
    require(it != a.end(), "ensemble: temporal prediction for " + r.station_id +
                               "/" + std::to_string(r.season) + "/" +
                               std::to_string(r.day) + " has no spatial partner");
    keys.push_back(k);
    ys.push_back(it->second);
    yt.push_back(r.swe_mm);
  }
  std::vector<double> mean = model::ensemble_predict(ys, yt);
  std::vector<eval::PredictionRow> rows;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    rows.push_back({"ensemble", std::get<0>(keys[i]), std::get<1>(keys[i]),
                    std::get<2>(keys[i]), mean[i]});
  }
  return rows;
}

model::CheckpointMeta meta_from_dataset(const data::SeasonDataset& ds) {
  model::CheckpointMeta meta;
  meta.norm_stats = ds.norm_stats;
  for (const auto& s : ds.stations) meta.station_order.push_back(s.station_id);
  meta.train_seasons = ds.train_seasons;
  meta.test_seasons = ds.test_seasons;
  return meta;
}

int run_gradcheck(bool tiny) {
  auto cases = diag::gradcheck_suite(tiny);
  double worst = 0.0;
  bool ok = true;
  for (const auto& c : cases) {
    bool pass = c.max_rel_err < diag::kGradCheckThreshold;
    ok = ok && pass;
    worst = std::max(worst, c.max_rel_err);
    std::printf("%-24s max rel err %.3e  %s\n", c.name.c_str(), c.max_rel_err,
                pass ? "ok" : "FAIL");
  }
  std::printf("gradcheck: %zu cases, worst %.3e (threshold %.0e): %s\n",
              cases.size(), worst, diag::kGradCheckThreshold,
              ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

int run_report(const std::string& summary_path) {
  std::ifstream in(summary_path);
  require(in.good(), "cannot open summary: " + summary_path);
  json j = json::parse(in);
  std::printf("model results (%s)\n", summary_path.c_str());
  std::printf("%-10s %8s %8s %8s %8s %8s %8s %10s\n", "model", "<0", "0-.25",
              ".25-.5", ".5-.75", ".75-1", "undef", "NSE>0.5");
  for (const auto& [name, mj] : j.at("models").items()) {
    const auto& bins = mj.at("nse_bins");
    auto counts = bins.at("counts").get<std::vector<int>>();
    std::printf("%-10s %8d %8d %8d %8d %8d %8d %9.2f%%\n", name.c_str(),
                counts[0], counts[1], counts[2], counts[3], counts[4],
                bins.at("undefined").get<int>(),
                100.0 * mj.at("fraction_nse_above_0.5").get<double>());
    if (mj.contains("daily_error_mm") && !mj.at("daily_error_mm").is_null()) {
      std::printf("%10s daily err mean %+.2f mm, annual-max err mean %+.2f mm\n", "",
                  mj.at("daily_error_mm").at("mean").get<double>(),
                  mj.at("annual_max_error_mm").at("mean").get<double>());
    }
  }
  if (j.contains("elevation_groups")) {
    std::printf("\nmedian NSE by elevation group\n");
    for (const auto& g : j.at("elevation_groups")) {
      std::printf("%-12s (n=%d):", g.at("group").get<std::string>().c_str(),
                  g.at("count").get<int>());
      for (const auto& [model, med] : g.at("median_nse").items()) {
        if (med.is_null()) std::printf("  %s=n/a", model.c_str());
        else std::printf("  %s=%.3f", model.c_str(), med.get<double>());
      }
      if (!g.at("best_model").is_null())
        std::printf("  best=%s", g.at("best_model").get<std::string>().c_str());
      std::printf("\n");
    }
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"attention models for daily snow water-equivalent prediction"};
  app.require_subcommand(1);
  ConfigBindings bind;

  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config file; command-line flags override it");

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset cache");
  struct {
    std::string out;
    int n = 8, m = 30, seasons = 4, first_season = 2001;
    double noise = 0.1, missing_rate = 0.0;
    std::uint64_t seed = 0;
    int gamma_window = 1;
    std::string test_years;  // empty -> last generated season
    bool emit_csv = false;
  } sy;
  bind.bind(synth, "--out", sy.out, "output directory")->required();
  bind.bind(synth, "--n", sy.n, "number of stations");
  bind.bind(synth, "--m", sy.m, "days per season");
  bind.bind(synth, "--seasons", sy.seasons, "number of seasons");
  bind.bind(synth, "--first-season", sy.first_season, "first water year");
  bind.bind(synth, "--noise", sy.noise, "noise level (0 = deterministic curves)");
  bind.bind(synth, "--missing-rate", sy.missing_rate, "fraction of values dropped");
  bind.bind(synth, "--seed", sy.seed, "random seed");
  bind.bind(synth, "--gamma-window", sy.gamma_window, "window w for gamma features");
  bind.bind(synth, "--test-years", sy.test_years,
            "comma-separated test water years (default: last season)");
  bind.bind_flag(synth, "--emit-csv", sy.emit_csv,
                 "also write stations.csv and daily.csv");

  // ---- prepare ----
  auto* prepare = app.add_subcommand("prepare", "build a dataset cache from CSVs");
  struct {
    std::string stations, daily, out;
    int season_length = 270;
    int gamma_window = 1;
    std::string test_years = "2007,2008,2015,2017,2018";
  } pr;
  bind.bind(prepare, "--stations", pr.stations, "stations.csv path")->required();
  bind.bind(prepare, "--daily", pr.daily, "daily.csv path")->required();
  bind.bind(prepare, "--out", pr.out, "output directory")->required();
  bind.bind(prepare, "--season-length", pr.season_length, "days per season");
  bind.bind(prepare, "--gamma-window", pr.gamma_window, "window w for gamma features");
  bind.bind(prepare, "--test-years", pr.test_years, "comma-separated test water years");

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train a model on a dataset cache");
  struct {
    std::string data, model = "spatial", out;
    std::uint64_t seed = 0;
    int epochs = 50;
    int batch_size = 0;  // 0 -> 16 spatial, 32 temporal/lstm
    double lr0 = 1e-4, weight_decay = 0.01, grad_clip = 1.0;
    double scheduler_factor = 0.6;
    int scheduler_period = 3;
    int embed_dim = 32, heads = 2, encoder_layers = 2, ffn_dim = 0;
    double encoder_dropout = 0.0, dropout_reduction = 0.20, dropout_output = 0.10;
    int output_hidden = 0;
    int lstm_hidden = 128;
    double ridge = 1e-8;
    int save_every = 0;  // interval checkpoints; 0 = final only
    bool paper_config = false;
  } tr;
  bind.bind(train_cmd, "--data", tr.data, "dataset cache path")->required();
  bind.bind(train_cmd, "--model", tr.model, "spatial|temporal|lstm|lr");
  bind.bind(train_cmd, "--out", tr.out, "run output directory")->required();
  bind.bind(train_cmd, "--seed", tr.seed, "random seed");
  bind.bind(train_cmd, "--epochs", tr.epochs, "training epochs");
  bind.bind(train_cmd, "--batch-size", tr.batch_size,
            "examples per optimizer step (0 = per-model default)");
  bind.bind(train_cmd, "--lr0", tr.lr0, "initial learning rate");
  bind.bind(train_cmd, "--weight-decay", tr.weight_decay, "AdamW weight decay");
  bind.bind(train_cmd, "--grad-clip", tr.grad_clip, "global-norm clip (0 = off)");
  bind.bind(train_cmd, "--scheduler-factor", tr.scheduler_factor, "lr decay factor");
  bind.bind(train_cmd, "--scheduler-period", tr.scheduler_period,
            "epochs between lr decays");
  bind.bind(train_cmd, "--embed-dim", tr.embed_dim, "embedding width d");
  bind.bind(train_cmd, "--heads", tr.heads, "attention heads");
  bind.bind(train_cmd, "--encoder-layers", tr.encoder_layers, "encoder stack depth");
  bind.bind(train_cmd, "--ffn-dim", tr.ffn_dim, "encoder FFN width (0 = 4d)");
  bind.bind(train_cmd, "--encoder-dropout", tr.encoder_dropout, "encoder dropout");
  bind.bind(train_cmd, "--dropout-reduction", tr.dropout_reduction,
            "dropout in reduction layers");
  bind.bind(train_cmd, "--dropout-output", tr.dropout_output,
            "dropout in the first output layer");
  bind.bind(train_cmd, "--output-hidden", tr.output_hidden,
            "output hidden width (0 = d)");
  bind.bind(train_cmd, "--lstm-hidden", tr.lstm_hidden, "LSTM hidden width");
  bind.bind(train_cmd, "--ridge", tr.ridge, "ridge jitter for the lr baseline");
  bind.bind(train_cmd, "--save-every", tr.save_every,
            "write an interval checkpoint every N epochs (0 = final only)");
  bind.bind_flag(train_cmd, "--paper-config", tr.paper_config,
                 "use d=512, 16 heads, 24 encoder layers");

  // ---- predict ----
  auto* predict = app.add_subcommand("predict", "write predictions for a split");
  struct {
    std::string data, checkpoint, out, split = "test";
    std::string model;  // set to "ensemble" to average two checkpoints
    std::string spatial_checkpoint, temporal_checkpoint;
  } pd;
  bind.bind(predict, "--data", pd.data, "dataset cache path")->required();
  bind.bind(predict, "--checkpoint", pd.checkpoint, "model checkpoint path");
  bind.bind(predict, "--model", pd.model, "override; 'ensemble' averages two checkpoints");
  bind.bind(predict, "--spatial-checkpoint", pd.spatial_checkpoint,
            "spatial checkpoint (ensemble)");
  bind.bind(predict, "--temporal-checkpoint", pd.temporal_checkpoint,
            "temporal checkpoint (ensemble)");
  bind.bind(predict, "--out", pd.out, "output predictions csv")->required();
  bind.bind(predict, "--split", pd.split, "test|train|all");

  // ---- evaluate ----
  auto* evaluate = app.add_subcommand("evaluate", "score prediction files");
  struct {
    std::string data, out;
    std::vector<std::string> preds;
  } ev;
  bind.bind(evaluate, "--data", ev.data, "dataset cache path")->required();
  evaluate->add_option("--pred", ev.preds, "predictions csv (repeatable)");
  bind.bind(evaluate, "--out", ev.out, "report output directory")->required();

  // ---- report ----
  auto* report = app.add_subcommand("report", "print a summary.json as a table");
  std::string report_summary;
  bind.bind(report, "--summary", report_summary, "summary.json path")->required();

  // ---- gradcheck ----
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  bool gc_tiny = false;
  bind.bind_flag(gradcheck, "--tiny", gc_tiny, "small model dimensions");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!config_path.empty()) bind.apply(load_config_file(config_path));

    if (synth->parsed()) {
      data::SyntheticConfig cfg;
      cfg.n_stations = sy.n;
      cfg.season_length = sy.m;
      cfg.n_seasons = sy.seasons;
      cfg.first_season = sy.first_season;
      cfg.noise = sy.noise;
      cfg.missing_rate = sy.missing_rate;
      cfg.seed = sy.seed;
      data::SyntheticResult gen = data::generate_synthetic(cfg);

      data::DatasetConfig dcfg;
      dcfg.season_length = sy.m;
      dcfg.gamma_window = sy.gamma_window;
      dcfg.test_years = sy.test_years.empty()
                            ? std::vector<int>{sy.first_season + sy.seasons - 1}
                            : parse_year_list(sy.test_years);
      data::SeasonDataset ds = data::build_dataset(gen.stations, gen.records, dcfg);

      fs::create_directories(sy.out);
      data::save_dataset((fs::path(sy.out) / "dataset.bin").string(), ds);
      if (sy.emit_csv) {
        data::write_station_csv((fs::path(sy.out) / "stations.csv").string(),
                                gen.stations, gen.aspect_slope);
        data::write_daily_csv((fs::path(sy.out) / "daily.csv").string(), gen.records);
      }
      json echo{{"swe_config", 1},
                {"synth",
                 {{"out", sy.out},
                  {"n", sy.n},
                  {"m", sy.m},
                  {"seasons", sy.seasons},
                  {"first-season", sy.first_season},
                  {"noise", sy.noise},
                  {"missing-rate", sy.missing_rate},
                  {"seed", sy.seed},
                  {"gamma-window", sy.gamma_window},
                  {"test-years", dcfg.test_years},
                  {"emit-csv", sy.emit_csv}}}};
      write_json_file(fs::path(sy.out) / "effective_config.json", echo);
      std::printf("synth: %d stations x %d seasons x %d days -> %s\n", sy.n,
                  sy.seasons, sy.m, (fs::path(sy.out) / "dataset.bin").c_str());
      return 0;
    }

    if (prepare->parsed()) {
      auto [stations, records] =
          data::load_station_data(pr.stations, pr.daily, pr.season_length);
      data::DatasetConfig dcfg;
      dcfg.season_length = pr.season_length;
      dcfg.gamma_window = pr.gamma_window;
      dcfg.test_years = parse_year_list(pr.test_years);
      data::SeasonDataset ds = data::build_dataset(stations, records, dcfg);
      fs::create_directories(pr.out);
      data::save_dataset((fs::path(pr.out) / "dataset.bin").string(), ds);
      json echo{{"swe_config", 1},
                {"prepare",
                 {{"stations", pr.stations},
                  {"daily", pr.daily},
                  {"out", pr.out},
                  {"season-length", pr.season_length},
                  {"gamma-window", pr.gamma_window},
                  {"test-years", dcfg.test_years}}}};
      write_json_file(fs::path(pr.out) / "effective_config.json", echo);
      std::printf("prepare: %d stations retained, %d seasons -> %s\n",
                  ds.n_stations(), ds.n_seasons(),
                  (fs::path(pr.out) / "dataset.bin").c_str());
      return 0;
    }

    if (train_cmd->parsed()) {
      data::SeasonDataset ds = data::load_dataset(tr.data);
      model::ModelKind kind = model::model_kind_from_string(tr.model);
      if (tr.paper_config) {
        tr.embed_dim = 512;
        tr.heads = 16;
        tr.encoder_layers = 24;
      }
      int batch = tr.batch_size > 0
                      ? tr.batch_size
                      : (kind == model::ModelKind::spatial ? 16 : 32);

      model::AnyModel m;
      m.kind = kind;
      switch (kind) {
        case model::ModelKind::spatial: {
          model::SpatialModelConfig c;
          c.n_locations = ds.n_stations();
          c.feature_dim = ds.feature_dim();
          c.embed_dim = tr.embed_dim;
          c.encoder.n_heads = tr.heads;
          c.encoder.n_layers = tr.encoder_layers;
          c.encoder.ffn_hidden_dim = tr.ffn_dim;
          c.encoder.dropout_rate = tr.encoder_dropout;
          c.output_hidden_dim = tr.output_hidden;
          c.dropout_reduction = tr.dropout_reduction;
          c.dropout_output = tr.dropout_output;
          m.spatial.emplace(c, tr.seed);
          break;
        }
        case model::ModelKind::temporal: {
          model::TemporalModelConfig c;
          c.season_length = ds.season_length;
          c.feature_dim = ds.feature_dim();
          c.embed_dim = tr.embed_dim;
          c.encoder.n_heads = tr.heads;
          c.encoder.n_layers = tr.encoder_layers;
          c.encoder.ffn_hidden_dim = tr.ffn_dim;
          c.encoder.dropout_rate = tr.encoder_dropout;
          c.output_hidden_dim = tr.output_hidden;
          c.dropout_reduction = tr.dropout_reduction;
          c.dropout_output = tr.dropout_output;
          m.temporal.emplace(c, tr.seed);
          break;
        }
        case model::ModelKind::lstm: {
          model::LstmBaselineConfig c;
          c.feature_dim = ds.feature_dim();
          c.hidden_dim = tr.lstm_hidden;
          m.lstm.emplace(c, tr.seed);
          break;
        }
        case model::ModelKind::lr:
          break;
      }

      train::TrainConfig tcfg;
      tcfg.lr0 = tr.lr0;
      tcfg.scheduler_factor = tr.scheduler_factor;
      tcfg.scheduler_period_epochs = tr.scheduler_period;
      tcfg.epochs = tr.epochs;
      tcfg.batch_size = batch;
      tcfg.weight_decay = tr.weight_decay;
      tcfg.grad_clip = tr.grad_clip;
      tcfg.seed = tr.seed;
      tcfg.lr_ridge = tr.ridge;

      fs::create_directories(tr.out);
      model::CheckpointMeta meta = meta_from_dataset(ds);
      train::EpochCallback on_epoch;
      if (tr.save_every > 0) {
        on_epoch = [&](int epoch, const train::EpochStats&) {
          if ((epoch + 1) % tr.save_every != 0) return;
          char name[48];
          std::snprintf(name, sizeof(name), "checkpoint_epoch%04d.json", epoch);
          model::save_checkpoint((fs::path(tr.out) / name).string(), m, meta);
        };
      }
      train::TrainHistory history = train::train_model(m, ds, tcfg, on_epoch);

      model::save_checkpoint((fs::path(tr.out) / "checkpoint.json").string(), m,
                             meta);
      train::write_history_csv((fs::path(tr.out) / "history.csv").string(), history);
      json echo{{"swe_config", 1},
                {"train",
                 {{"data", tr.data},
                  {"model", tr.model},
                  {"out", tr.out},
                  {"seed", tr.seed},
                  {"epochs", tr.epochs},
                  {"batch-size", batch},
                  {"lr0", tr.lr0},
                  {"weight-decay", tr.weight_decay},
                  {"grad-clip", tr.grad_clip},
                  {"scheduler-factor", tr.scheduler_factor},
                  {"scheduler-period", tr.scheduler_period},
                  {"embed-dim", tr.embed_dim},
                  {"heads", tr.heads},
                  {"encoder-layers", tr.encoder_layers},
                  {"ffn-dim", tr.ffn_dim},
                  {"encoder-dropout", tr.encoder_dropout},
                  {"dropout-reduction", tr.dropout_reduction},
                  {"dropout-output", tr.dropout_output},
                  {"output-hidden", tr.output_hidden},
                  {"lstm-hidden", tr.lstm_hidden},
                  {"ridge", tr.ridge},
                  {"save-every", tr.save_every},
                  {"paper-config", tr.paper_config}}}};
      write_json_file(fs::path(tr.out) / "effective_config.json", echo);
      if (kind == model::ModelKind::lr) {
        std::printf("train lr: closed-form fit -> %s\n",
                    (fs::path(tr.out) / "checkpoint.json").c_str());
      } else if (!history.epochs.empty()) {
        std::printf("train %s: %d epochs, final loss %.6g -> %s\n",
                    tr.model.c_str(), tr.epochs, history.epochs.back().loss,
                    (fs::path(tr.out) / "checkpoint.json").c_str());
      } else {
        std::printf("train %s: 0 epochs (initialized parameters) -> %s\n",
                    tr.model.c_str(),
                    (fs::path(tr.out) / "checkpoint.json").c_str());
      }
      return 0;
    }

    if (predict->parsed()) {
      data::SeasonDataset ds = data::load_dataset(pd.data);
      std::vector<int> years = split_years(ds, pd.split);
      std::vector<eval::PredictionRow> rows;
      if (pd.model == "ensemble") {
        require(!pd.spatial_checkpoint.empty() && !pd.temporal_checkpoint.empty(),
                "ensemble prediction needs --spatial-checkpoint and "
                "--temporal-checkpoint");
        model::LoadedCheckpoint cs = model::load_checkpoint(pd.spatial_checkpoint);
        model::LoadedCheckpoint ct = model::load_checkpoint(pd.temporal_checkpoint);
        require(cs.model.kind == model::ModelKind::spatial,
                "--spatial-checkpoint does not hold a spatial model");
        require(ct.model.kind == model::ModelKind::temporal,
                "--temporal-checkpoint does not hold a temporal model");
        check_checkpoint_compat(cs.meta, ds);
        check_checkpoint_compat(ct.meta, ds);
        rows = ensemble_rows(predict_rows(cs.model, ds, years),
                             predict_rows(ct.model, ds, years));
      } else {
        require(!pd.checkpoint.empty(), "predict needs --checkpoint");
        model::LoadedCheckpoint c = model::load_checkpoint(pd.checkpoint);
        if (!pd.model.empty()) {
          require(model::model_kind_from_string(pd.model) == c.model.kind,
                  "--model does not match the checkpoint kind");
        }
        check_checkpoint_compat(c.meta, ds);
        rows = predict_rows(c.model, ds, years);
      }
      sort_rows(rows);
      eval::write_predictions_csv(pd.out, rows);
      std::printf("predict: %zu rows -> %s\n", rows.size(), pd.out.c_str());
      return 0;
    }

    if (evaluate->parsed()) {
      require(!ev.preds.empty(),
              "evaluate: no predictions given; pass --pred <predictions.csv>");
      data::SeasonDataset ds = data::load_dataset(ev.data);
      std::map<std::string, std::vector<eval::PredictionRow>> by_model;
      for (const auto& path : ev.preds) {
        for (auto& row : eval::read_predictions_csv(path))
          by_model[row.model].push_back(std::move(row));
      }
      std::vector<std::string> models;
      std::vector<std::vector<eval::LocationScore>> scores;
      for (const auto& [name, rows] : by_model) {
        std::vector<const eval::PredictionRow*> ptrs;
        for (const auto& r : rows) ptrs.push_back(&r);
        eval::PredictionGrid grid = eval::grid_from_rows(ds, ptrs);
        models.push_back(name);
        scores.push_back(eval::evaluate_locations(ds, grid));
      }
      fs::create_directories(ev.out);
      eval::write_location_scores_csv(
          (fs::path(ev.out) / "location_scores.csv").string(), models, scores);
      eval::write_summary_json((fs::path(ev.out) / "summary.json").string(),
                               models, scores);
      json echo{{"swe_config", 1},
                {"evaluate",
                 {{"data", ev.data}, {"pred", ev.preds}, {"out", ev.out}}}};
      write_json_file(fs::path(ev.out) / "effective_config.json", echo);
      std::printf("evaluate: %zu models, %d locations -> %s\n", models.size(),
                  ds.n_stations(), ev.out.c_str());
      return 0;
    }

    if (report->parsed()) return run_report(report_summary);
    if (gradcheck->parsed()) return run_gradcheck(gc_tiny);

    fail("no subcommand selected");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "swe: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace swe::cli
