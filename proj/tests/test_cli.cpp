#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "vje/run_config.hpp"

using namespace vje;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "vje");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("vje_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig tiny() {
  RunConfig c;
  c.data.n_classes = 2;
  c.data.samples_per_class = 32;
  c.data.test_samples_per_class = 16;
  c.data.input_dim = 8;
  c.model.encoder.input_dim = 8;
  c.model.encoder.hidden_dims = {8};
  c.model.encoder.embed_dim = 4;
  c.model.inference.embed_dim = 4;
  c.model.inference.bottleneck_dim = 2;
  c.model.inference.depth = 2;
  c.vje.embed_dim = 4;
  c.optim.total_epochs = 2;
  c.optim.warmup_epochs = 1;
  c.optim.batch_size = 16;
  return c;
}

fs::path write_config(const fs::path& dir, const Json& j, const std::string& name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"no-such-command"}).code == cli::kConfigError);
  CHECK(run({"train"}).code == cli::kConfigError);
}

TEST_CASE("invalid config values name the field") {
  TempDir tmp;
  Json j = to_json(tiny());
  j["vje"]["beta"] = -1.0;
  const auto r = run({"train", "--config", write_config(tmp.path, j).string(), "--out", (tmp.path / "o").string()});
  CHECK(r.code == cli::kConfigError);
  CHECK(r.err.find("beta") != std::string::npos);

  Json unknown = to_json(tiny());
  unknown["vje"]["gamma"] = 1.0;
  const auto u = run({"train", "--config", write_config(tmp.path, unknown).string()});
  CHECK(u.code == cli::kConfigError);
  CHECK(u.err.find("gamma") != std::string::npos);
}

TEST_CASE("train, eval, anomaly and sweep") {
  TempDir tmp;
  const auto cfg = write_config(tmp.path, to_json(tiny())).string();
  const auto out = (tmp.path / "run").string();

  const auto t = run({"train", "--config", cfg, "--out", out});
  REQUIRE_MESSAGE(t.code == 0, t.err);
  CHECK(fs::exists(fs::path(out) / "metrics.csv"));
  CHECK(fs::exists(fs::path(out) / "checkpoint.json"));
  CHECK(fs::exists(fs::path(out) / "config.resolved.json"));

  const auto ckpt = (fs::path(out) / "checkpoint.json").string();
  const auto e = run({"eval", "--checkpoint", ckpt, "--config", cfg, "--k", "5", "--out", out});
  CHECK_MESSAGE(e.code == 0, e.err);
  CHECK(e.out.find("knn_z") != std::string::npos);
  CHECK(fs::exists(fs::path(out) / "eval.csv"));
  // 64 training examples.
  CHECK(run({"eval", "--checkpoint", ckpt, "--config", cfg, "--k", "65"}).code == cli::kConfigError);

  const auto a = run({"anomaly", "--config", cfg, "--inlier", "0", "--out", out});
  CHECK_MESSAGE(a.code == 0, a.err);
  CHECK(fs::exists(fs::path(out) / "auroc.csv"));
  CHECK(fs::exists(fs::path(out) / "scores.csv"));
  CHECK(run({"anomaly", "--config", cfg, "--inlier", "7", "--out", out}).code == cli::kConfigError);

  const auto s = run({"sweep", "--config", cfg, "--betas", "1", "--nus", "3", "--classes", "0", "--out", out});
  CHECK_MESSAGE(s.code == 0, s.err);
  CHECK(fs::exists(fs::path(out) / "sweep.csv"));
  CHECK(run({"sweep", "--config", cfg, "--betas", "1,x", "--out", out}).code == cli::kConfigError);
  CHECK(run({"sweep", "--config", cfg, "--nus", "-1,3", "--out", out}).code == cli::kConfigError);
}

TEST_CASE("missing files") {
  CHECK(run({"train", "--config", "/nonexistent/config.json"}).code == cli::kConfigError);
  TempDir tmp;
  const auto cfg = write_config(tmp.path, to_json(tiny())).string();
  std::ofstream(tmp.path / "bad.json") << "{";
  CHECK(run({"eval", "--checkpoint", (tmp.path / "bad.json").string(), "--config", cfg}).code == cli::kConfigError);
}
