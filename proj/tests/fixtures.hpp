#pragma once

// Synthetic striped images shared by the solver-level tests.

#include <cstdint>

#include "stripefree/commands.hpp"
#include "stripefree/kernels.hpp"
#include "stripefree/noise.hpp"

namespace fixture {

using namespace stripefree;

struct StripeInstance {
  ImageGrid clean;
  ImageGrid noise;
  ImageGrid u0;
  ImageGrid psi;
};

// Phantom plus psi * lambda with psi a Gaussian elongated along the last
// axis, scaled so that ||noise|| = fraction ||clean||.
inline StripeInstance stripes(const Shape& shape, double fraction, std::uint64_t seed, double sigma_short = 0.5,
                              const Marginal& m = marginal::BernoulliUniform{1.0}) {
  std::vector<double> sig(shape.rank(), sigma_short);
  sig.back() = static_cast<double>(shape.extent(shape.rank() - 1));
  StripeInstance s;
  s.clean = phantom(shape);
  s.psi = sample_kernel(kernel::GaussianAnisotropic{sig, 1.0}, shape);
  s.noise = sample_stationary(m, s.psi, seed).b;
  s.noise *= fraction * norm2(s.clean) / norm2(s.noise);
  s.u0 = s.clean + s.noise;
  return s;
}

}  // namespace fixture
