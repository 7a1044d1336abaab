#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "liftpose/checkpoint.hpp"
#include "liftpose/training.hpp"

using namespace liftpose;
using liftpose::testing::scratch_dir;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "liftpose");
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Small architecture and batch.
fs::path small_config_file(const fs::path& dir) {
  TrainConfig c = liftpose::testing::small_config();
  const fs::path p = dir / "small.json";
  std::ofstream(p) << to_json(c);
  return p;
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const std::string& value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    ::setenv(name, value.c_str(), 1);
  }
  ~ScopedEnv() {
    if (old_) ::setenv(name_, old_->c_str(), 1);
    else ::unsetenv(name_);
  }

 private:
  const char* name_;
  std::optional<std::string> old_;
};

}  // namespace

TEST_CASE("cli: synth, train, eval and probe pipeline") {
  const fs::path dir = scratch_dir("cli_pipeline");
  const std::string data = (dir / "train.jsonl").string(), eval = (dir / "eval.jsonl").string();
  REQUIRE(cli({"synth", "--out", data, "--count", "48", "--seed", "1"}).code == 0);
  REQUIRE(cli({"synth", "--out", eval, "--count", "16", "--seed", "2"}).code == 0);
  CHECK(read_text(data).rfind("# config_hash=", 0) == 0);

  const fs::path cfg = small_config_file(dir);
  const Run train = cli({"train", "--config", cfg.string(), "--rep", "ind-lt", "--data", data, "--eval", eval,
                         "--out", (dir / "run").string()});
  REQUIRE(train.code == 0);
  CHECK(train.out.find("epoch 2") != std::string::npos);
  for (const char* f : {"config.json", "run.jsonl", "model.ckpt", "last.ckpt", "metrics.csv"})
    CHECK(fs::exists(dir / "run" / f));
  const Checkpoint ck = load_checkpoint(dir / "run" / "model.ckpt");
  CHECK(ck.header.representation == "ind-lt");
  CHECK(read_text(dir / "run" / "metrics.csv").rfind("# config_hash=" + ck.header.config_hash, 0) == 0);

  const Run ev = cli({"eval", "--ckpt", (dir / "run" / "model.ckpt").string(), "--data", eval, "--report",
                      (dir / "report.csv").string(), "--rep", "ind-lt"});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("representation ind-lt") != std::string::npos);
  CHECK(read_text(dir / "report.csv").find("scope,key,poses,mpjpe_mm,pck3d_pct,auc") != std::string::npos);
  CHECK(cli({"eval", "--ckpt", (dir / "run" / "model.ckpt").string(), "--data", eval, "--rep", "full"}).code == 1);
  CHECK(cli({"eval", "--ckpt", (dir / "run" / "model.ckpt").string(), "--data", eval, "--no-scale"}).code == 0);

  const Run probe = cli({"probe", "--ckpt", (dir / "run" / "model.ckpt").string(), "--data", eval, "--out",
                         (dir / "probe").string(), "--max-poses", "4"});
  REQUIRE(probe.code == 0);
  CHECK(probe.out.find("(leg/torso): 0\n") != std::string::npos);
  CHECK(fs::exists(dir / "probe" / "sensitivity.csv"));
  CHECK(fs::exists(dir / "probe" / "curves" / "left_wrist.csv"));
}

TEST_CASE("cli: identical arguments give byte-identical outputs") {
  const fs::path dir = scratch_dir("cli_determinism");
  const std::string data = (dir / "d.jsonl").string();
  REQUIRE(cli({"synth", "--out", data, "--count", "40", "--seed", "3"}).code == 0);
  const fs::path cfg = small_config_file(dir);
  for (const char* run : {"a", "b"}) {
    REQUIRE(cli({"train", "--config", cfg.string(), "--seed", "4", "--data", data, "--eval", data, "--out",
                 (dir / run).string()})
                .code == 0);
    REQUIRE(cli({"probe", "--ckpt", (dir / run / "model.ckpt").string(), "--data", data, "--out",
                 (dir / run / "probe").string(), "--pose-index", "1"})
                .code == 0);
  }
  for (const char* f : {"metrics.csv", "run.jsonl", "config.json", "model.ckpt", "probe/sensitivity.csv"})
    CHECK(read_text(dir / "a" / f) == read_text(dir / "b" / f));
}

TEST_CASE("cli: stability subcommand") {
  const fs::path dir = scratch_dir("cli_stability");
  const std::string data = (dir / "d.jsonl").string();
  REQUIRE(cli({"synth", "--out", data, "--count", "32", "--seed", "5"}).code == 0);
  const fs::path cfg = small_config_file(dir);
  const Run r = cli({"stability", "--config", cfg.string(), "--epochs", "3", "--seeds", "0,1", "--data", data,
                     "--window", "2:3", "--jobs", "1", "--out", (dir / "s").string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"stability_curves.csv", "stability_summary.csv", "stability_table.txt", "config.json"})
    CHECK(fs::exists(dir / "s" / f));
  CHECK(fs::exists(dir / "s" / "seed_1" / "run.jsonl"));
  CHECK(cli({"stability", "--config", cfg.string(), "--seeds", "0", "--data", data, "--out",
             (dir / "t").string()})
            .code == 1);
  CHECK(cli({"stability", "--config", cfg.string(), "--seeds", "0,1", "--window", "3:9", "--data", data,
             "--out", (dir / "t").string()})
            .code == 1);
}

TEST_CASE("cli: errors exit non-zero with a message") {
  const fs::path dir = scratch_dir("cli_errors");
  Run r = cli({"train", "--data", (dir / "missing.jsonl").string(), "--out", (dir / "x").string()});
  CHECK(r.code != 0);
  r = cli({"frobnicate"});
  CHECK(r.code != 0);
  r = cli({});
  CHECK(r.code != 0);

  const std::string data = (dir / "d.jsonl").string();
  REQUIRE(cli({"synth", "--out", data, "--count", "8"}).code == 0);
  r = cli({"train", "--rep", "half", "--data", data, "--out", (dir / "x").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("error: ") == 0);
  CHECK(r.err.find("ind-lt") != std::string::npos);
  r = cli({"train", "--weights", "1,2", "--data", data, "--out", (dir / "x").string()});
  CHECK(r.code == 1);
  r = cli({"train", "--profile", "large", "--config", data, "--data", data, "--out", (dir / "x").string()});
  CHECK(r.code != 0);

  std::ofstream(dir / "broken.jsonl") << "{\"id\": 1\n";
  r = cli({"train", "--data", (dir / "broken.jsonl").string(), "--out", (dir / "x").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("broken.jsonl:1") != std::string::npos);
}

TEST_CASE("cli: LIFTPOSE_OUT_DIR prefixes relative output paths") {
  const fs::path dir = scratch_dir("cli_env");
  {
    ScopedEnv env("LIFTPOSE_OUT_DIR", (dir / "base").string());
    REQUIRE(cli({"synth", "--out", "nested/d.jsonl", "--count", "4"}).code == 0);
    REQUIRE(cli({"synth", "--out", (dir / "abs.jsonl").string(), "--count", "4"}).code == 0);
  }
  CHECK(fs::exists(dir / "base" / "nested" / "d.jsonl"));
  CHECK(fs::exists(dir / "abs.jsonl"));
  CHECK(read_text(dir / "base" / "nested" / "d.jsonl") == read_text(dir / "abs.jsonl"));
}
