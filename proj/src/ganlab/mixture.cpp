#include "sf/mixture.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sf {

MixtureSpec MixtureSpec::ring8() {
  MixtureSpec s{"ring8", {}};
  for (int k = 0; k < 8; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / 8.0;
    s.components.push_back({2.0 * std::cos(angle), 2.0 * std::sin(angle), 0.02, 1.0 / 8.0});
  }
  return s;
}

MixtureSpec MixtureSpec::grid25() {
  MixtureSpec s{"grid25", {}};
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) s.components.push_back({2.0 * i, 2.0 * j, 0.05, 1.0 / 25.0});
  return s;
}

MixtureSpec MixtureSpec::preset(const std::string& name) {
  if (name == "ring8") return ring8();
  if (name == "grid25") return grid25();
  throw std::invalid_argument("unknown dataset preset '" + name + "' (expected ring8 or grid25)");
}

std::vector<std::string> MixtureSpec::preset_names() { return {"ring8", "grid25"}; }

void MixtureSpec::validate() const {
  if (components.empty()) throw std::invalid_argument("mixture has no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.stddev > 0.0)) throw std::invalid_argument("mixture component std must be positive");
    if (!(c.weight > 0.0)) throw std::invalid_argument("mixture component weight must be positive");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights sum to " + std::to_string(total) + ", not 1");
  }
}

Matrix sample_mixture(const MixtureSpec& spec, std::size_t n, std::mt19937_64& rng) {
  spec.validate();
  if (n == 0) throw std::invalid_argument("sample_mixture: n must be positive");
  std::vector<double> weights;
  for (const auto& c : spec.components) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = spec.components[pick(rng)];
    out(i, 0) = c.mean_x + c.stddev * normal(rng);
    out(i, 1) = c.mean_y + c.stddev * normal(rng);
  }
  return out;
}

Matrix sample_mixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_mixture(spec, n, rng);
}

}  // namespace sf
