#include "vje/train.hpp"

#include <cmath>

#include "vje/checkpoint.hpp"
#include "vje/csv.hpp"
#include "vje/error.hpp"
#include "vje/optim.hpp"

namespace vje {

PosteriorStats posterior_stats(const Model& model, const std::vector<Vector>& inputs) {
  PosteriorStats st;
  if (inputs.empty()) return st;
  double cv_sum = 0.0;
  for (const auto& x : inputs) {
    const dist::PosteriorParams q = model.infer(model.encode(x));
    const auto d = static_cast<double>(q.dim());
    double mean = 0.0;
    for (double v : q.sigma2) mean += v;
    mean /= d;
    double ss = 0.0;
    for (double v : q.sigma2) ss += (v - mean) * (v - mean);
    cv_sum += std::sqrt(ss / d) / mean;
    st.var_mean += mean;
    st.kl += dist::kl_diag_gauss(q);
  }
  const auto n = static_cast<double>(inputs.size());
  st.var_mean /= n;
  st.kl /= n;
  st.var_cv = st.var_mean < 1e-6 ? kCvUndefined : cv_sum / n;
  return st;
}

std::string metrics_csv(const std::vector<EpochMetrics>& history, std::uint64_t seed) {
  CsvTable t(seed, {"epoch", "l_dir", "l_rad", "l_kl", "total", "var_mean", "var_cv", "lr"});
  for (const auto& m : history) {
    t.add_row({std::to_string(m.epoch), fmt_double(m.loss.l_dir), fmt_double(m.loss.l_rad), fmt_double(m.loss.l_kl),
               fmt_double(m.loss.total), fmt_double(m.var_mean), fmt_double(m.var_cv), fmt_double(m.lr)});
  }
  return t.str();
}

TrainResult train(Model& model, const Dataset& data, const SyntheticDataConfig& views, const VjeConfig& vje,
                  const OptimConfig& opt, const TrainOptions& opts) {
  vje.validate();
  opt.validate();
  if (data.size() == 0) throw ConfigError("train: empty dataset");
  if (vje.embed_dim != model.embed_dim()) throw ConfigError("vje.embed_dim: does not match the model");

  Rng rng(derive_seed(opts.seed, {std::uint64_t{10}}));
  Sgd sgd(model.params(), opt);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t steps = (data.size() + opt.batch_size - 1) / opt.batch_size;

  TrainResult result;
  auto checkpoint = [&](const std::filesystem::path& path, std::size_t epoch) {
    save_checkpoint(path, model, {opts.config_echo, epoch, rng.counter()});
  };

  for (std::size_t epoch = 0; epoch < opt.total_epochs; ++epoch) {
    shuffle_indices(order, rng);
    LossBreakdown sum;
    double lr = 0.0;
    for (std::size_t b = 0; b < steps; ++b) {
      const std::size_t lo = b * opt.batch_size;
      const std::size_t hi = std::min(lo + opt.batch_size, data.size());
      lr = lr_at(opt, static_cast<double>(epoch) + static_cast<double>(b) / static_cast<double>(steps));
      try {
        ad::Tape tape;
        const BoundParams bound = model.bind(tape);
        ad::Var batch_total;
        for (std::size_t k = lo; k < hi; ++k) {
          auto [x1, x2] = make_views(data.inputs[order[k]], views, rng);
          ad::Var z1 = model.encode(tape, bound, x1);
          ad::Var z2 = model.encode(tape, bound, x2);
          const StepLoss l = vje_step_loss(tape, z1, z2, model, bound, vje, rng);
          batch_total = batch_total.valid() ? batch_total + l.total : l.total;
          sum.l_dir += l.values.l_dir;
          sum.l_rad += l.values.l_rad;
          sum.l_kl += l.values.l_kl;
          sum.total += l.values.total;
        }
        const ad::GradientMap grads = tape.backward(ad::scale(batch_total, 1.0 / static_cast<double>(hi - lo)));
        model.params().zero_grad();
        model.params().accumulate(grads);
        sgd.step(model.params(), lr);
        if (!model.params().all_finite()) throw NumericError("non-finite parameters after the update");
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) + ": " + e.what());
      }
    }
    const auto n = static_cast<double>(data.size());
    EpochMetrics m;
    m.epoch = epoch;
    m.loss = {sum.l_dir / n, sum.l_rad / n, sum.l_kl / n, sum.total / n};
    const PosteriorStats st = posterior_stats(model, data.inputs);
    m.var_mean = st.var_mean;
    m.var_cv = st.var_cv;
    m.lr = lr;
    result.history.push_back(m);
    if (opts.on_epoch) opts.on_epoch(m);
    if (opts.out_dir && opts.checkpoint_every > 0 && (epoch + 1) % opts.checkpoint_every == 0 &&
        epoch + 1 < opt.total_epochs) {
      checkpoint(*opts.out_dir / ("checkpoint_epoch" + std::to_string(epoch + 1) + ".json"), epoch + 1);
    }
  }

  result.final_stats = posterior_stats(model, data.inputs);
  result.final_stats.epoch = opt.total_epochs;
  result.rng_counter = rng.counter();
  if (opts.out_dir) {
    write_text_file(*opts.out_dir / "metrics.csv", metrics_csv(result.history, opts.seed));
    checkpoint(*opts.out_dir / "checkpoint.json", opt.total_epochs);
  }
  return result;
}

}  // namespace vje
