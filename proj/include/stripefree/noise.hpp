#pragma once

// White-noise marginals, stationary fields B = psi * Lambda, and measures of
// how far a pixel of B is from a Gaussian.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "stripefree/fft.hpp"
#include "stripefree/kernels.hpp"
#include "stripefree/random.hpp"

namespace stripefree {

namespace marginal {

struct Gaussian {
  double sigma = 1.0;
};

/// Uniform on [-half_width, half_width].
struct Uniform {
  double half_width = 1.0;
};

/// 0 with probability 1 - gamma, otherwise uniform on [-1, 1].
struct BernoulliUniform {
  double gamma = 1.0;
};

}  // namespace marginal

using Marginal = std::variant<marginal::Gaussian, marginal::Uniform, marginal::BernoulliUniform>;

/// Second moment sigma^2 and third absolute moment rho of a zero-mean marginal.
struct Moments {
  double variance = 0.0;
  double third_abs = 0.0;
};

inline void validate(const Marginal& m) {
  std::visit(
      [](const auto& v) {
        using M = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<M, marginal::Gaussian>) {
          if (!(v.sigma > 0.0)) throw InvalidArgument("gaussian marginal: sigma must be > 0");
        } else if constexpr (std::is_same_v<M, marginal::Uniform>) {
          if (!(v.half_width > 0.0)) throw InvalidArgument("uniform marginal: half width must be > 0");
        } else {
          if (!(v.gamma > 0.0 && v.gamma <= 1.0))
            throw InvalidArgument("bernoulli-uniform marginal: gamma must lie in (0, 1]");
        }
      },
      m);
}

inline Moments marginal_moments(const Marginal& m) {
  validate(m);
  return std::visit(
      [](const auto& v) -> Moments {
        using M = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<M, marginal::Gaussian>) {
          const double s = v.sigma;
          return {s * s, s * s * s * std::sqrt(8.0 / M_PI)};
        } else if constexpr (std::is_same_v<M, marginal::Uniform>) {
          const double a = v.half_width;
          return {a * a / 3.0, a * a * a / 4.0};
        } else {
          return {v.gamma / 3.0, v.gamma / 4.0};
        }
      },
      m);
}

inline double draw(const Marginal& m, Rng& rng) {
  return std::visit(
      [&rng](const auto& v) -> double {
        using M = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<M, marginal::Gaussian>) {
          return v.sigma * rng.normal();
        } else if constexpr (std::is_same_v<M, marginal::Uniform>) {
          return rng.uniform(-v.half_width, v.half_width);
        } else {
          // Two draws per sample keep the stream layout independent of gamma.
          const double u = rng.uniform();
          const double value = rng.uniform(-1.0, 1.0);
          return u < v.gamma ? value : 0.0;
        }
      },
      m);
}

struct StationarySample {
  ImageGrid lambda;
  ImageGrid b;
};

/// Draws lambda i.i.d. from `m` with a mt19937_64 stream seeded by `seed`
/// and returns it with b = psi * lambda.
inline StationarySample sample_stationary(const Marginal& m, const ImageGrid& psi, std::uint64_t seed) {
  validate(m);
  Rng rng(seed);
  ImageGrid lambda(psi.shape());
  for (auto& v : lambda.values()) v = draw(m, rng);
  ImageGrid b = circular_convolve(lambda, psi);
  return {std::move(lambda), std::move(b)};
}

/// Absolute constant of the Berry-Esseen inequality.
inline constexpr double kBerryEsseenConstant = 0.56;

/// 0.56 rho / sigma^3, the marginal-only factor of the bound.
inline double berry_esseen_coefficient(const Marginal& m) {
  const Moments mo = marginal_moments(m);
  return kBerryEsseenConstant * mo.third_abs / std::pow(mo.variance, 1.5);
}

/// min(1, 0.56 (rho / sigma^3) ||psi||_3^3 / ||psi||_2^3). A sup-distance
/// between two cdfs never exceeds 1, hence the cap.
inline double berry_esseen_bound(const Marginal& m, const ImageGrid& psi) {
  return std::min(1.0, berry_esseen_coefficient(m) * kernel_ratio_f(psi));
}

/// Standard normal cdf.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// sup_x |F_empirical(x) - Phi(x)| for samples already standardized by the
/// caller (divide B(x) by sigma ||psi||_2).
inline double ks_distance_to_normal(std::vector<double> samples) {
  if (samples.empty()) throw InvalidArgument("ks_distance_to_normal: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double phi = normal_cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - phi, phi - static_cast<double>(i) / n});
  }
  return d;
}

/// Dvoretzky-Kiefer-Wolfowitz half-width: with probability >= 1 - delta the
/// empirical cdf of n samples is within this distance of the true cdf.
inline double dkw_slack(std::size_t n, double delta) {
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

struct GaussianityReport {
  double bound = 0.0;
  double ks_distance = 0.0;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
};

/// Monte-Carlo check of the bound at a single pixel: draws `count`
/// independent realizations of B(0) = sum_y Lambda(-y) psi(y), standardizes
/// by sigma ||psi||_2 and measures the KS distance to N(0, 1).
inline GaussianityReport gaussianity_report(const Marginal& m, const ImageGrid& psi,
                                            std::size_t count, std::uint64_t seed) {
  const Moments mo = marginal_moments(m);
  const double s = std::sqrt(mo.variance) * norm2(psi);
  if (s == 0.0) throw InvalidArgument("gaussianity_report: kernel is identically zero");
  std::vector<double> taps;
  for (double v : psi.values())
    if (v != 0.0) taps.push_back(v);
  Rng rng(seed);
  std::vector<double> samples(count);
  for (auto& x : samples) {
    double acc = 0.0;
    for (double w : taps) acc += w * draw(m, rng);
    x = acc / s;
  }
  GaussianityReport r;
  r.bound = berry_esseen_bound(m, psi);
  r.ks_distance = ks_distance_to_normal(std::move(samples));
  r.sample_count = count;
  r.seed = seed;
  return r;
}

}  // namespace stripefree
