#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "vje/anomaly.hpp"
#include "vje/checkpoint.hpp"
#include "vje/csv.hpp"
#include "vje/data.hpp"
#include "vje/error.hpp"
#include "vje/knn.hpp"
#include "vje/model.hpp"
#include "vje/run_config.hpp"
#include "vje/train.hpp"
#include "vje/verify.hpp"

namespace vje::cli {

namespace fs = std::filesystem;

namespace {

// Model weights are initialized from this substream of the run seed.
constexpr std::uint64_t kInitStream = 20;

OneClassSetup setup_from(const RunConfig& cfg) { return {cfg.data, cfg.model, cfg.vje, cfg.optim}; }

int cmd_train(const fs::path& config_path, const std::string& out_flag, std::ostream& out) {
  RunConfig cfg = load_run_config(config_path);
  if (!out_flag.empty()) cfg.out_dir = out_flag;
  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);

  const Json resolved = to_json(cfg);
  write_text_file(dir / "config.resolved.json", resolved.dump(2) + "\n");

  const SyntheticData data = gen_dataset(cfg.data);
  Rng init_rng(derive_seed(cfg.seed, {kInitStream}));
  Model model = Model::initialized(cfg.model, init_rng);

  TrainOptions opts;
  opts.seed = cfg.seed;
  opts.out_dir = dir;
  opts.checkpoint_every = cfg.checkpoint_every;
  opts.config_echo = resolved;
  opts.on_epoch = [&](const EpochMetrics& m) {
    out << "epoch " << m.epoch << "  total " << std::setprecision(6) << m.loss.total << "  var_mean "
        << m.var_mean << "  var_cv " << m.var_cv << "  lr " << m.lr << "\n";
  };
  const TrainResult r = train(model, data.train, cfg.data, cfg.vje, cfg.optim, opts);
  out << "final var_mean " << r.final_stats.var_mean << " var_cv " << r.final_stats.var_cv << "\n";
  return kOk;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& config_path, std::size_t k, const std::string& out_dir,
             std::ostream& out) {
  const RunConfig cfg = load_run_config(config_path);
  Model model(cfg.model);
  load_checkpoint(checkpoint, model);
  const SyntheticData data = gen_dataset(cfg.data);

  double acc[2] = {0.0, 0.0};
  const EmbedSpace spaces[2] = {EmbedSpace::z, EmbedSpace::mu};
  for (int i = 0; i < 2; ++i) {
    acc[i] = knn_accuracy(embed_all(model, data.train.inputs, spaces[i]), data.train.labels,
                          embed_all(model, data.test.inputs, spaces[i]), data.test.labels, k);
  }
  out << std::setprecision(17) << "knn_z " << acc[0] << "\nknn_mu " << acc[1] << "\n";

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    CsvTable t(cfg.seed, {"k", "knn_z", "knn_mu"});
    t.add_row({std::to_string(k), fmt_double(acc[0]), fmt_double(acc[1])});
    t.write(fs::path(out_dir) / "eval.csv");
  }
  return kOk;
}

int cmd_anomaly(const fs::path& config_path, std::size_t inlier, const std::string& out_dir, std::ostream& out) {
  const RunConfig cfg = load_run_config(config_path);
  const double beta = cfg.vje.beta;
  const double nu = cfg.vje.nu;
  const OneClassResult r = one_class_run(inlier, setup_from(cfg), cell_seed(cfg.seed, beta, nu, inlier));

  SweepCell cell;
  cell.beta = beta;
  cell.nu = nu;
  cell.cls = inlier;
  cell.auroc = r.auroc;
  cell.status = r.final_stats.var_mean < kCollapseVarMean ? "collapsed" : "ok";

  fs::create_directories(out_dir);
  write_text_file(fs::path(out_dir) / "auroc.csv", sweep_csv({cell}, cfg.seed));
  write_text_file(fs::path(out_dir) / "scores.csv", scores_csv(r.scores, cfg.seed));
  out << std::setprecision(6) << "auroc joint " << r.auroc.joint << "  var " << r.auroc.var << "  ent "
      << r.auroc.ent << "  (" << cell.status << ")\n";
  return kOk;
}

int cmd_sweep(const fs::path& config_path, const std::vector<double>& betas, const std::vector<double>& nus,
              std::vector<std::size_t> classes, unsigned threads, const std::string& out_dir, std::ostream& out,
              std::ostream& err) {
  const RunConfig cfg = load_run_config(config_path);
  if (betas.empty()) throw ConfigError("betas: empty grid");
  if (nus.empty()) throw ConfigError("nus: empty grid");
  for (double b : betas) {
    if (!(b >= 0.0)) throw ConfigError("betas: beta must be >= 0, got " + std::to_string(b));
  }
  for (double n : nus) {
    if (!(n > 0.0)) throw ConfigError("nus: nu must be > 0, got " + std::to_string(n));
  }
  if (classes.empty()) {
    for (std::size_t c = 0; c < cfg.data.n_classes; ++c) classes.push_back(c);
  }
  for (std::size_t c : classes) {
    if (c >= cfg.data.n_classes) throw ConfigError("classes: " + std::to_string(c) + " out of range");
  }

  const auto cells = sweep(betas, nus, classes, setup_from(cfg), cfg.seed, threads);
  fs::create_directories(out_dir);
  write_text_file(fs::path(out_dir) / "sweep.csv", sweep_csv(cells, cfg.seed));

  bool partial = false;
  for (const auto& c : cells) {
    out << std::setprecision(6) << "beta " << c.beta << " nu " << c.nu << " class " << c.cls << "  joint "
        << c.auroc.joint << "  var " << c.auroc.var << "  ent " << c.auroc.ent << "  " << c.status << "\n";
    if (c.status == "error") {
      partial = true;
      err << "cell beta=" << c.beta << " nu=" << c.nu << " class=" << c.cls << ": " << c.message << "\n";
    }
  }
  return partial ? kPartial : kOk;
}

int cmd_verify(const std::string& report_path, std::ostream& out) {
  const verify::Report r = verify::run_all();
  out << r.text();
  if (!report_path.empty()) {
    const fs::path p(report_path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    verify::write_report(r, p);
  }
  return r.all_passed() ? kOk : kVerifyFailed;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variational joint embedding: training, evaluation, anomaly scoring, verification"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;

  auto* train_cmd = app.add_subcommand("train", "train a model and write metrics.csv and checkpoint.json");
  train_cmd->add_option("--config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out_dir, "output directory (default: out_dir from the config)");

  std::string checkpoint;
  std::size_t k = 30;
  auto* eval_cmd = app.add_subcommand("eval", "k-NN accuracy on z and mu");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint.json")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--k", k, "neighbours")->capture_default_str();
  eval_cmd->add_option("--out", out_dir, "directory for eval.csv");

  std::size_t inlier = 0;
  auto* anomaly_cmd = app.add_subcommand("anomaly", "one-class run: train on one class, score the test split");
  anomaly_cmd->add_option("--config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  anomaly_cmd->add_option("--inlier", inlier, "inlier class")->required();
  anomaly_cmd->add_option("--out", out_dir, "directory for auroc.csv and scores.csv")->required();

  std::vector<double> betas{0.0, 1.0, 2.0};
  std::vector<double> nus{0.5, 3.0, 20.0};
  std::vector<std::size_t> classes;
  unsigned threads = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "beta x nu grid of one-class runs");
  sweep_cmd->add_option("--config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--betas", betas, "comma-separated beta values")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--nus", nus, "comma-separated nu values")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--classes", classes, "inlier classes (default: all)")->delimiter(',');
  sweep_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--out", out_dir, "directory for sweep.csv")->required();

  std::string report;
  auto* verify_cmd = app.add_subcommand("verify", "run the property battery");
  verify_cmd->add_option("--report", report, "text report path; report.csv is written next to it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(config, out_dir, out);
    if (eval_cmd->parsed()) return cmd_eval(checkpoint, config, k, out_dir, out);
    if (anomaly_cmd->parsed()) return cmd_anomaly(config, inlier, out_dir, out);
    if (sweep_cmd->parsed()) return cmd_sweep(config, betas, nus, classes, threads, out_dir, out, err);
    if (verify_cmd->parsed()) return cmd_verify(report, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace vje::cli
