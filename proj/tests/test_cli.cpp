#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <json.hpp>

#include "swe/cli.hpp"
#include "swe/data.hpp"

using namespace swe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("swe_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

int run(std::initializer_list<std::string> args) {
  return cli::run(std::vector<std::string>(args));
}

}  // namespace

TEST_CASE("synth is deterministic: same seed, byte-identical caches") {
  TempDir tmp;
  auto args = [&](const std::string& out) {
    return std::vector<std::string>{"synth", "--out", out,          "--n",
                                    "5",     "--m",   "12",         "--seasons",
                                    "3",     "--seed", "7",         "--noise",
                                    "0.2",   "--test-years", "2003"};
  };
  REQUIRE(cli::run(args(tmp.sub("a"))) == 0);
  REQUIRE(cli::run(args(tmp.sub("b"))) == 0);
  CHECK(slurp(tmp.sub("a") + "/dataset.bin") == slurp(tmp.sub("b") + "/dataset.bin"));

  // rerunning with byte-identical arguments overwrites with identical bytes
  std::string before = slurp(tmp.sub("a") + "/effective_config.json");
  REQUIRE(cli::run(args(tmp.sub("a"))) == 0);
  CHECK(slurp(tmp.sub("a") + "/effective_config.json") == before);
}

TEST_CASE("evaluate without predictions fails and names the missing input") {
  TempDir tmp;
  REQUIRE(run({"synth", "--out", tmp.sub("d"), "--n", "4", "--m", "8",
               "--seasons", "2", "--seed", "1", "--test-years", "2002"}) == 0);
  CHECK(run({"evaluate", "--data", tmp.sub("d") + "/dataset.bin", "--out",
             tmp.sub("rep")}) != 0);
}

TEST_CASE("unknown flags and missing subcommands exit nonzero") {
  CHECK(run({"synth", "--bogus-flag", "1"}) != 0);
  CHECK(run({}) != 0);
  CHECK(run({"predict", "--data", "nowhere.bin", "--out", "x.csv"}) != 0);
}

TEST_CASE("config file supplies defaults, flags override") {
  TempDir tmp;
  std::ofstream cfg(tmp.sub("cfg.json"));
  cfg << R"({"swe_config":1,"synth":{"n":5,"m":10,"seasons":2,"seed":3,)"
      << R"("test-years":"2002"}})";
  cfg.close();

  REQUIRE(run({"--config", tmp.sub("cfg.json"), "synth", "--out", tmp.sub("from_cfg")}) == 0);
  auto ds = data::load_dataset(tmp.sub("from_cfg") + "/dataset.bin");
  CHECK(ds.n_stations() == 5);
  CHECK(ds.season_length == 10);

  REQUIRE(run({"--config", tmp.sub("cfg.json"), "synth", "--out",
               tmp.sub("flag_wins"), "--n", "7"}) == 0);
  auto ds2 = data::load_dataset(tmp.sub("flag_wins") + "/dataset.bin");
  CHECK(ds2.n_stations() == 7);  // flag overrides the config file
  CHECK(ds2.season_length == 10);
}

TEST_CASE("config file without the version key is rejected") {
  TempDir tmp;
  std::ofstream cfg(tmp.sub("bad.json"));
  cfg << R"({"synth":{"n":5}})";
  cfg.close();
  CHECK(run({"--config", tmp.sub("bad.json"), "synth", "--out", tmp.sub("x")}) != 0);
}

TEST_CASE("the full pipeline runs: synth, train, predict, evaluate, report") {
  TempDir tmp;
  REQUIRE(run({"synth", "--out", tmp.sub("data"), "--n", "4", "--m", "10",
               "--seasons", "3", "--seed", "5", "--noise", "0.2",
               "--test-years", "2003", "--emit-csv"}) == 0);
  CHECK(fs::exists(tmp.sub("data") + "/stations.csv"));
  CHECK(fs::exists(tmp.sub("data") + "/daily.csv"));

  REQUIRE(run({"train", "--data", tmp.sub("data") + "/dataset.bin", "--model",
               "spatial", "--out", tmp.sub("run"), "--epochs", "1",
               "--embed-dim", "8", "--heads", "2", "--encoder-layers", "1",
               "--seed", "1"}) == 0);
  CHECK(fs::exists(tmp.sub("run") + "/checkpoint.json"));
  CHECK(fs::exists(tmp.sub("run") + "/history.csv"));
  CHECK(fs::exists(tmp.sub("run") + "/effective_config.json"));

  REQUIRE(run({"predict", "--data", tmp.sub("data") + "/dataset.bin",
               "--checkpoint", tmp.sub("run") + "/checkpoint.json", "--out",
               tmp.sub("pred.csv")}) == 0);
  REQUIRE(run({"evaluate", "--data", tmp.sub("data") + "/dataset.bin", "--pred",
               tmp.sub("pred.csv"), "--out", tmp.sub("report")}) == 0);
  CHECK(fs::exists(tmp.sub("report") + "/location_scores.csv"));
  CHECK(fs::exists(tmp.sub("report") + "/summary.json"));
  CHECK(run({"report", "--summary", tmp.sub("report") + "/summary.json"}) == 0);
}

TEST_CASE("prepare consumes the emitted CSVs and matches synth output") {
  TempDir tmp;
  REQUIRE(run({"synth", "--out", tmp.sub("data"), "--n", "4", "--m", "10",
               "--seasons", "2", "--seed", "9", "--noise", "0.1",
               "--test-years", "2002", "--emit-csv"}) == 0);
  REQUIRE(run({"prepare", "--stations", tmp.sub("data") + "/stations.csv",
               "--daily", tmp.sub("data") + "/daily.csv", "--out",
               tmp.sub("prep"), "--season-length", "10", "--test-years",
               "2002"}) == 0);
  auto a = data::load_dataset(tmp.sub("data") + "/dataset.bin");
  auto b = data::load_dataset(tmp.sub("prep") + "/dataset.bin");
  CHECK(a.n_stations() == b.n_stations());
  CHECK(a.feature_names == b.feature_names);
  CHECK(a.labels == b.labels);
}

TEST_CASE("train rejects an unknown model kind") {
  TempDir tmp;
  REQUIRE(run({"synth", "--out", tmp.sub("d"), "--n", "4", "--m", "8",
               "--seasons", "2", "--seed", "2", "--test-years", "2002"}) == 0);
  CHECK(run({"train", "--data", tmp.sub("d") + "/dataset.bin", "--model",
             "perceptron", "--out", tmp.sub("r")}) != 0);
}

TEST_CASE("gradcheck subcommand exits zero on the tiny suite") {
  CHECK(run({"gradcheck", "--tiny"}) == 0);
}

TEST_CASE("save-every writes interval checkpoints") {
  TempDir tmp;
  REQUIRE(run({"synth", "--out", tmp.sub("d"), "--n", "4", "--m", "8",
               "--seasons", "2", "--seed", "4", "--test-years", "2002"}) == 0);
  REQUIRE(run({"train", "--data", tmp.sub("d") + "/dataset.bin", "--model",
               "lstm", "--out", tmp.sub("r"), "--epochs", "4", "--lstm-hidden",
               "4", "--save-every", "2", "--seed", "4"}) == 0);
  CHECK(fs::exists(tmp.sub("r") + "/checkpoint_epoch0001.json"));
  CHECK(fs::exists(tmp.sub("r") + "/checkpoint_epoch0003.json"));
  CHECK(fs::exists(tmp.sub("r") + "/checkpoint.json"));
}

TEST_CASE("ensemble predict needs both checkpoints") {
  TempDir tmp;
  REQUIRE(run({"synth", "--out", tmp.sub("d"), "--n", "4", "--m", "8",
               "--seasons", "2", "--seed", "2", "--test-years", "2002"}) == 0);
  CHECK(run({"predict", "--data", tmp.sub("d") + "/dataset.bin", "--model",
             "ensemble", "--out", tmp.sub("p.csv")}) != 0);
}
