#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sf/linalg.hpp"

namespace sf {

struct MixtureComponent {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double stddev = 1.0;
  double weight = 1.0;

  friend bool operator==(const MixtureComponent&, const MixtureComponent&) = default;
};

/// Isotropic 2-D Gaussian mixture used as the real data distribution.
struct MixtureSpec {
  std::string name;
  std::vector<MixtureComponent> components;

  /// Eight modes on a radius-2 circle, std 0.02.
  static MixtureSpec ring8();
  /// 5×5 grid with spacing 2 centred on the origin, std 0.05.
  static MixtureSpec grid25();
  /// Looks up "ring8" or "grid25"; throws std::invalid_argument otherwise.
  static MixtureSpec preset(const std::string& name);
  static std::vector<std::string> preset_names();

  void validate() const;
  std::size_t size() const noexcept { return components.size(); }

  friend bool operator==(const MixtureSpec&, const MixtureSpec&) = default;
};

/// n×2 matrix of i.i.d. draws.
Matrix sample_mixture(const MixtureSpec& spec, std::size_t n, std::mt19937_64& rng);
Matrix sample_mixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace sf
