#include <cmath>
#include <string>

#include "sf/netcore.hpp"

namespace sf {

namespace {

double activate(ActivationKind kind, double slope, double x) {
  switch (kind) {
    case ActivationKind::ReLU: return x > 0.0 ? x : 0.0;
    case ActivationKind::LeakyReLU: return x > 0.0 ? x : slope * x;
    case ActivationKind::Tanh: return std::tanh(x);
  }
  return x;
}

double activate_grad(ActivationKind kind, double slope, double x) {
  switch (kind) {
    case ActivationKind::ReLU: return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::LeakyReLU: return x > 0.0 ? 1.0 : slope;
    case ActivationKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

}  // namespace

Network::Network(std::vector<LayerSpec> layers, std::mt19937_64& rng)
    : specs_(std::move(layers)) {
  for (const auto& l : specs_) {
    if (const auto* d = std::get_if<DenseSpec>(&l)) {
      if (d->in_dim == 0 || d->out_dim == 0) throw DimensionError("dense layer with zero width");
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(d->in_dim)));
      Matrix w(d->out_dim, d->in_dim);
      for (double& x : w.data()) x = normal(rng);
      weights_.push_back(std::move(w));
    }
  }
  validate();
}

Network::Network(std::vector<LayerSpec> layers, std::vector<Matrix> weights)
    : specs_(std::move(layers)), weights_(std::move(weights)) {
  validate();
}

void Network::validate() {
  dense_.clear();
  dense_of_layer_.assign(specs_.size(), -1);
  std::size_t current = 0;
  bool have_dim = false;
  for (std::size_t li = 0; li < specs_.size(); ++li) {
    if (const auto* d = std::get_if<DenseSpec>(&specs_[li])) {
      if (have_dim && d->in_dim != current) {
        throw DimensionError("layer " + std::to_string(li) + " expects input width " +
                             std::to_string(d->in_dim) + " but receives " +
                             std::to_string(current));
      }
      if (!have_dim) input_dim_ = d->in_dim;
      have_dim = true;
      current = d->out_dim;
      dense_of_layer_[li] = static_cast<std::ptrdiff_t>(dense_.size());
      dense_.push_back({li, *d, std::nullopt, {}});
    } else if (!have_dim) {
      throw DimensionError("network must start with a dense layer");
    }
  }
  if (dense_.empty()) throw DimensionError("network has no dense layers");
  biases_.clear();
  for (const auto& slot : dense_)
    biases_.push_back(slot.spec.bias ? Matrix(1, slot.spec.out_dim) : Matrix());
  output_dim_ = current;
  if (weights_.size() != dense_.size()) {
    throw DimensionError("expected " + std::to_string(dense_.size()) + " weight matrices, got " +
                         std::to_string(weights_.size()));
  }
  for (std::size_t k = 0; k < dense_.size(); ++k) {
    const auto& s = dense_[k].spec;
    if (weights_[k].rows() != s.out_dim || weights_[k].cols() != s.in_dim) {
      throw DimensionError("weight " + std::to_string(k) + " has shape " +
                           weights_[k].shape_string() + ", expected " +
                           std::to_string(s.out_dim) + "x" + std::to_string(s.in_dim));
    }
  }
  refresh();
}

void Network::refresh() {
  for (std::size_t k = 0; k < dense_.size(); ++k) {
    auto& slot = dense_[k];
    const Matrix& w = weights_[k];
    switch (slot.spec.hook.kind) {
      case NormHook::Kind::None:
        slot.reg.reset();
        break;
      case NormHook::Kind::SN:
        slot.reg = spectral_normalize(w);
        break;
      case NormHook::Kind::SRStatic: {
        SvdFactors f = svd(w);
        const std::size_t i = static_index_from_fraction(f.rank(), slot.spec.hook.fraction);
        const CompensationPlan plan = static_plan(f, i);
        slot.reg = apply_sr(w, f, plan);
        break;
      }
      case NormHook::Kind::SRDynamic: {
        SvdFactors f = svd(w);
        auto [plan, gamma] = dynamic_plan(f, slot.gamma);
        slot.gamma = std::move(gamma);
        slot.reg = apply_sr(w, f, plan);
        break;
      }
    }
  }
  ++version_;
}

std::size_t Network::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& w : weights_) n += w.size();
  for (const auto& b : biases_) n += b.size();
  return n;
}

std::vector<Matrix> Network::parameters() const {
  std::vector<Matrix> out = weights_;
  for (const auto& b : biases_)
    if (!b.empty()) out.push_back(b);
  return out;
}

void Network::set_parameters(std::vector<Matrix> params) {
  std::vector<Matrix> w(std::make_move_iterator(params.begin()),
                        std::make_move_iterator(params.begin() +
                                                static_cast<std::ptrdiff_t>(std::min(params.size(), weights_.size()))));
  std::size_t next = w.size();
  std::vector<Matrix> b = biases_;
  for (auto& bias : b) {
    if (bias.empty()) continue;
    if (next >= params.size()) throw DimensionError("set_parameters: too few parameter matrices");
    if (params[next].rows() != bias.rows() || params[next].cols() != bias.cols())
      throw DimensionError("set_parameters: bias shape mismatch " + params[next].shape_string() +
                           " vs " + bias.shape_string());
    if (!params[next].all_finite())
      throw std::invalid_argument("set_parameters: bias has non-finite entries");
    bias = std::move(params[next++]);
  }
  if (next != params.size()) throw DimensionError("set_parameters: too many parameter matrices");
  biases_ = std::move(b);
  set_weights(std::move(w));
}

std::vector<Matrix> Gradients::flat() const {
  std::vector<Matrix> out = weights;
  for (const auto& b : biases)
    if (!b.empty()) out.push_back(b);
  return out;
}

void Network::set_weights(std::vector<Matrix> weights) {
  if (weights.size() != weights_.size()) {
    throw DimensionError("set_weights: expected " + std::to_string(weights_.size()) +
                         " matrices, got " + std::to_string(weights.size()));
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k].rows() != weights_[k].rows() || weights[k].cols() != weights_[k].cols()) {
      throw DimensionError("set_weights: weight " + std::to_string(k) + " has shape " +
                           weights[k].shape_string() + ", expected " +
                           weights_[k].shape_string());
    }
    if (!weights[k].all_finite()) {
      throw std::invalid_argument("set_weights: weight " + std::to_string(k) +
                                  " has non-finite entries");
    }
  }
  weights_ = std::move(weights);
  refresh();
}

const Matrix& Network::effective_weight(std::size_t dense_index) const {
  const auto& slot = dense_.at(dense_index);
  return slot.reg ? slot.reg->w_bar : weights_[dense_index];
}

const std::optional<RegularizedWeight>& Network::regularized(std::size_t dense_index) const {
  return dense_.at(dense_index).reg;
}

const NormHook& Network::hook(std::size_t dense_index) const {
  return dense_.at(dense_index).spec.hook;
}

const GammaState& Network::gamma(std::size_t dense_index) const {
  return dense_.at(dense_index).gamma;
}

std::vector<GammaState> Network::gamma_states() const {
  std::vector<GammaState> out;
  out.reserve(dense_.size());
  for (const auto& slot : dense_) out.push_back(slot.gamma);
  return out;
}

Tape Network::forward(const Matrix& x) const {
  if (x.cols() != input_dim_) {
    throw DimensionError("forward: input has " + std::to_string(x.cols()) +
                         " columns, network expects " + std::to_string(input_dim_));
  }
  Tape tape;
  tape.version = version_;
  tape.owner = this;
  tape.inputs.reserve(specs_.size());
  Matrix h = x;
  for (std::size_t li = 0; li < specs_.size(); ++li) {
    tape.inputs.push_back(h);
    if (dense_of_layer_[li] >= 0) {
      const auto k = static_cast<std::size_t>(dense_of_layer_[li]);
      h = matmul_nt(h, effective_weight(k));
      if (const Matrix& b = biases_[k]; !b.empty()) {
        for (std::size_t r = 0; r < h.rows(); ++r) {
          auto row = h.row(r);
          for (std::size_t c = 0; c < row.size(); ++c) row[c] += b(0, c);
        }
      }
    } else {
      const auto& a = std::get<ActivationSpec>(specs_[li]);
      for (double& v : h.data()) v = activate(a.kind, a.slope, v);
    }
  }
  tape.output = std::move(h);
  return tape;
}

Gradients Network::backward(const Tape& tape, const Matrix& upstream) const {
  if (tape.owner != this || tape.version != version_) {
    throw ContractViolation("backward: tape was recorded against a different weight version");
  }
  if (upstream.rows() != tape.output.rows() || upstream.cols() != tape.output.cols()) {
    throw DimensionError("backward: upstream " + upstream.shape_string() +
                         " does not match output " + tape.output.shape_string());
  }
  Gradients grads;
  grads.weights.resize(dense_.size());
  grads.biases.resize(dense_.size());
  Matrix g = upstream;
  for (std::size_t li = specs_.size(); li-- > 0;) {
    const Matrix& x = tape.inputs[li];
    if (dense_of_layer_[li] >= 0) {
      const auto k = static_cast<std::size_t>(dense_of_layer_[li]);
      const Matrix& w_eff = effective_weight(k);
      Matrix g_eff = matmul_tn(g, x);
      if (!biases_[k].empty()) {
        Matrix gb(1, g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto row = g.row(r);
          for (std::size_t c = 0; c < row.size(); ++c) gb(0, c) += row[c];
        }
        grads.biases[k] = std::move(gb);
      }
      const auto& reg = dense_[k].reg;
      grads.weights[k] =
          reg ? sr_gradient(weights_[k], reg->factors, reg->plan, g_eff) : std::move(g_eff);
      g = matmul(g, w_eff);
    } else {
      const auto& a = std::get<ActivationSpec>(specs_[li]);
      auto gd = g.data();
      auto xd = x.data();
      for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= activate_grad(a.kind, a.slope, xd[i]);
    }
  }
  grads.input = std::move(g);
  return grads;
}

AdamState::AdamState(AdamConfig cfg, std::span<const Matrix> params) : config(cfg) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params) {
    m.emplace_back(p.rows(), p.cols());
    v.emplace_back(p.rows(), p.cols());
  }
}

void adam_step(AdamState& state, std::span<Matrix> params, std::span<const Matrix> grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DimensionError("adam_step: parameter, gradient and state counts differ");
  }
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].size() != grads[p].size() || params[p].size() != state.m[p].size()) {
      throw DimensionError("adam_step: shape mismatch for parameter " + std::to_string(p));
    }
    auto x = params[p].data();
    auto g = grads[p].data();
    auto m = state.m[p].data();
    auto v = state.v[p].data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bias1;
      const double vhat = v[i] / bias2;
      x[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

void adam_step(AdamState& state, Network& net, const Gradients& grads) {
  std::vector<Matrix> p = net.parameters();
  const std::vector<Matrix> g = grads.flat();
  adam_step(state, std::span<Matrix>(p), std::span<const Matrix>(g));
  net.set_parameters(std::move(p));
}

}  // namespace sf
