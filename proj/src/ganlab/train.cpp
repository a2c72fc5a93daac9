#include <cmath>

#include "sf/ganlab.hpp"

namespace sf {

std::string to_string(NormMode mode) {
  switch (mode) {
    case NormMode::None: return "none";
    case NormMode::SN: return "sn";
    case NormMode::SRStatic: return "sr-static";
    case NormMode::SRDynamic: return "sr-dynamic";
  }
  return "none";
}

NormMode parse_norm_mode(const std::string& text) {
  if (text == "none") return NormMode::None;
  if (text == "sn") return NormMode::SN;
  if (text == "sr-static") return NormMode::SRStatic;
  if (text == "sr-dynamic") return NormMode::SRDynamic;
  throw std::invalid_argument("norm_mode: unknown value '" + text +
                              "' (expected none, sn, sr-static or sr-dynamic)");
}

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string(name) + ": must be positive");
  };
  dataset.validate();
  positive(batch, "batch");
  positive(width, "width");
  positive(depth, "depth");
  positive(latent_dim, "latent_dim");
  positive(g_width, "g_width");
  positive(n_critic, "n_critic");
  positive(snapshot_every, "snapshot_every");
  positive(eval_samples, "eval_samples");
  if (!(sr_fraction > 0.0 && sr_fraction <= 1.0))
    throw std::invalid_argument("sr_fraction: must lie in (0, 1]");
  if (!(lr > 0.0)) throw std::invalid_argument("lr: must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1: must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2: must lie in [0, 1)");
  if (!(monitor.tau > 0.0 && monitor.tau < 1.0))
    throw std::invalid_argument("tau: must lie in (0, 1)");
  if (monitor.window == 0) throw std::invalid_argument("window: must be positive");
  if (!(monitor.radius_sigmas > 0.0)) throw std::invalid_argument("radius_sigmas: must be positive");
}

NormHook TrainConfig::discriminator_hook() const {
  switch (norm_mode) {
    case NormMode::None: return NormHook::none();
    case NormMode::SN: return NormHook::sn();
    case NormMode::SRStatic: return NormHook::sr_static(sr_fraction);
    case NormMode::SRDynamic: return NormHook::sr_dynamic();
  }
  return NormHook::none();
}

std::vector<LayerSpec> discriminator_layers(const TrainConfig& config) {
  const NormHook hook = config.discriminator_hook();
  std::vector<LayerSpec> layers;
  std::size_t in = 2;
  for (std::size_t d = 0; d + 1 < config.depth; ++d) {
    layers.emplace_back(DenseSpec{in, config.width, hook, true});
    layers.emplace_back(ActivationSpec{ActivationKind::LeakyReLU, 0.1});
    in = config.width;
  }
  layers.emplace_back(DenseSpec{in, 1, hook, true});
  return layers;
}

std::vector<LayerSpec> generator_layers(const TrainConfig& config) {
  return {
      DenseSpec{config.latent_dim, config.g_width, NormHook::none(), true},
      ActivationSpec{ActivationKind::LeakyReLU, 0.1},
      DenseSpec{config.g_width, config.g_width, NormHook::none(), true},
      ActivationSpec{ActivationKind::LeakyReLU, 0.1},
      DenseSpec{config.g_width, 2, NormHook::none(), true},
  };
}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
  return std::mt19937_64(seq);
}

Matrix latent(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, dim);
  for (double& x : z.data()) x = normal(rng);
  return z;
}

Vector first_column(const Matrix& m) { return m.column(0); }

Matrix as_column(const Vector& v) { return Matrix(v.size(), 1, v); }

bool finite(double x) { return std::isfinite(x); }

class Trainer {
 public:
  Trainer(const TrainConfig& config, const CriticObserver& observer)
      : cfg_(config),
        observer_(observer),
        init_rng_(stream(config.seed, 1)),
        data_rng_(stream(config.seed, 2)),
        latent_rng_(stream(config.seed, 3)),
        d_(discriminator_layers(config), init_rng_),
        g_(generator_layers(config), init_rng_) {
    const AdamConfig adam{config.lr, config.beta1, config.beta2, 1e-8};
    adam_d_ = AdamState(adam, d_.parameters());
    adam_g_ = AdamState(adam, g_.parameters());
    auto eval_rng = stream(config.seed, 4);
    eval_latent_ = latent(config.eval_samples, config.latent_dim, eval_rng);
    out_.config = config;
  }

  RunArtifacts run() {
    record(0);
    for (std::size_t it = 1; it <= cfg_.iterations; ++it) {
      try {
        step(it);
      } catch (const TrainingDiverged&) {
        throw;
      } catch (const std::exception& e) {
        abort(it, e.what());
      }
      if (it % cfg_.snapshot_every == 0) record(it);
    }
    finish();
    return std::move(out_);
  }

 private:
  void step(std::size_t it) {
    double loss_d = 0.0;
    for (std::size_t c = 0; c < cfg_.n_critic; ++c) {
      const Matrix real = sample_mixture(cfg_.dataset, cfg_.batch, data_rng_);
      const Matrix fake = g_.predict(latent(cfg_.batch, cfg_.latent_dim, latent_rng_));
      const Tape tr = d_.forward(real);
      const Tape tf = d_.forward(fake);
      const Vector dr = first_column(tr.output);
      const Vector df = first_column(tf.output);
      loss_d = -hinge_loss_d(dr, df);
      if (!finite(loss_d)) abort(it, "non-finite discriminator loss");
      const HingeGradients hg = hinge_loss_d_grad(dr, df);
      Gradients gr = d_.backward(tr, as_column(hg.d_real));
      const Gradients gf = d_.backward(tf, as_column(hg.d_fake));
      for (std::size_t k = 0; k < gr.weights.size(); ++k) {
        gr.weights[k] += gf.weights[k];
        if (!gr.biases[k].empty()) gr.biases[k] += gf.biases[k];
      }
      adam_step(adam_d_, d_, gr);
      if (observer_) observer_(it, d_);
    }

    const Tape tg = g_.forward(latent(cfg_.batch, cfg_.latent_dim, latent_rng_));
    const Tape td = d_.forward(tg.output);
    const Vector df = first_column(td.output);
    const double loss_g = hinge_loss_g(df);
    if (!finite(loss_g)) abort(it, "non-finite generator loss");
    const Gradients through_d = d_.backward(td, as_column(hinge_loss_g_grad(df)));
    const Gradients gg = g_.backward(tg, through_d.input);
    adam_step(adam_g_, g_, gg);
    out_.losses.push_back({it, loss_d, loss_g});
  }

  void record(std::size_t it) {
    auto snaps = snapshot(d_, it);
    Evaluation ev;
    ev.iteration = it;
    const Matrix samples = g_.predict(eval_latent_);
    if (!samples.all_finite()) abort(it, "non-finite generator samples");
    ev.metrics = mode_metrics(samples, cfg_.dataset, cfg_.monitor.radius_sigmas);
    for (const auto& s : snaps) ev.collapse_scores.push_back(collapse_score(s, cfg_.monitor.tau));
    out_.evaluations.push_back(std::move(ev));
    out_.spectra.insert(out_.spectra.end(), snaps.begin(), snaps.end());
  }

  void finish() {
    out_.samples = g_.predict(eval_latent_);
    out_.gamma = d_.gamma_states();
    out_.collapse = build_collapse_report(out_.spectra, cfg_.monitor);
  }

  [[noreturn]] void abort(std::size_t it, const std::string& why) {
    out_.aborted = true;
    out_.abort_reason = "iteration " + std::to_string(it) + ": " + why;
    out_.gamma = d_.gamma_states();
    if (!out_.spectra.empty()) out_.collapse = build_collapse_report(out_.spectra, cfg_.monitor);
    throw TrainingDiverged(out_.abort_reason, std::move(out_));
  }

  const TrainConfig& cfg_;
  const CriticObserver& observer_;
  std::mt19937_64 init_rng_;
  std::mt19937_64 data_rng_;
  std::mt19937_64 latent_rng_;
  Network d_;
  Network g_;
  AdamState adam_d_;
  AdamState adam_g_;
  Matrix eval_latent_;
  RunArtifacts out_;
};

}  // namespace

RunArtifacts train(const TrainConfig& config, const CriticObserver& observer) {
  config.validate();
  Trainer trainer(config, observer);
  return trainer.run();
}

}  // namespace sf
