#include <algorithm>

#include "sf/netcore.hpp"

namespace sf {

namespace {

void require_nonempty(std::span<const double> v, const char* name) {
  if (v.empty()) throw std::invalid_argument(std::string(name) + " batch is empty");
}

}  // namespace

double hinge_loss_d(std::span<const double> d_real, std::span<const double> d_fake) {
  require_nonempty(d_real, "d_real");
  require_nonempty(d_fake, "d_fake");
  double real = 0.0;
  for (double d : d_real) real += std::min(0.0, -1.0 + d);
  double fake = 0.0;
  for (double d : d_fake) fake += std::min(0.0, -1.0 - d);
  return real / static_cast<double>(d_real.size()) + fake / static_cast<double>(d_fake.size());
}

double hinge_loss_g(std::span<const double> d_fake) {
  require_nonempty(d_fake, "d_fake");
  double s = 0.0;
  for (double d : d_fake) s += d;
  return -s / static_cast<double>(d_fake.size());
}

HingeGradients hinge_loss_d_grad(std::span<const double> d_real,
                                 std::span<const double> d_fake) {
  require_nonempty(d_real, "d_real");
  require_nonempty(d_fake, "d_fake");
  const double nr = static_cast<double>(d_real.size());
  const double nf = static_cast<double>(d_fake.size());
  HingeGradients g{Vector(d_real.size()), Vector(d_fake.size())};
  // Kinks at the margin take the flat branch.
  for (std::size_t i = 0; i < d_real.size(); ++i) g.d_real[i] = d_real[i] < 1.0 ? -1.0 / nr : 0.0;
  for (std::size_t i = 0; i < d_fake.size(); ++i) g.d_fake[i] = d_fake[i] > -1.0 ? 1.0 / nf : 0.0;
  return g;
}

Vector hinge_loss_g_grad(std::span<const double> d_fake) {
  require_nonempty(d_fake, "d_fake");
  return Vector(d_fake.size(), -1.0 / static_cast<double>(d_fake.size()));
}

}  // namespace sf
