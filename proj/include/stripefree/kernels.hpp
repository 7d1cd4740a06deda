#pragma once

// Parametric noise kernels psi and the shape functionals that control how
// close psi * Lambda is to a Gaussian field.

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "stripefree/grid.hpp"

namespace stripefree {

namespace kernel {

struct Dirac {
  double amplitude = 1.0;
};

/// C exp(-sum_k x_k^2 / (2 sigma_k^2)), axes aligned with the grid.
struct GaussianAnisotropic {
  std::vector<double> sigmas;
  double amplitude = 1.0;
};

/// amplitude on the box |x_k| <= half_extents[k].
struct IndicatorBox {
  std::vector<std::size_t> half_extents;
  double amplitude = 1.0;
};

/// amplitude * max(|x|, cutoff)^exponent (radial).
struct PowerDecay {
  double exponent = -0.5;
  double cutoff = 1.0;
  double amplitude = 1.0;
};

struct FromGrid {
  ImageGrid grid;
};

}  // namespace kernel

using KernelSpec = std::variant<kernel::Dirac, kernel::GaussianAnisotropic, kernel::IndicatorBox,
                                kernel::PowerDecay, kernel::FromGrid>;

/// Throws InvalidArgument unless every scale parameter is admissible.
inline void validate(const KernelSpec& spec) {
  std::visit(
      [](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, kernel::GaussianAnisotropic>) {
          if (k.sigmas.empty()) throw InvalidArgument("gaussian kernel needs sigmas");
          for (double s : k.sigmas)
            if (!(s > 0.0)) throw InvalidArgument("gaussian sigma must be > 0");
          if (!(k.amplitude > 0.0)) throw InvalidArgument("gaussian amplitude must be > 0");
        } else if constexpr (std::is_same_v<K, kernel::IndicatorBox>) {
          if (k.half_extents.empty()) throw InvalidArgument("box kernel needs half extents");
        } else if constexpr (std::is_same_v<K, kernel::PowerDecay>) {
          if (!(k.cutoff >= 1.0)) throw InvalidArgument("power-decay cutoff must be >= 1");
        }
      },
      spec);
}

/// Signed periodic offset of index i on an axis of extent n: 0, 1, ..., n/2, -(n-1)/2, ..., -1.
inline long centered_offset(std::size_t i, std::size_t n) {
  return (2 * i <= n) ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
}

/// Evaluates the kernel at integer offsets around the origin, stored
/// periodically (offset x lives at index x mod n_k).
inline ImageGrid sample_kernel(const KernelSpec& spec, const Shape& shape) {
  validate(spec);
  const std::size_t d = shape.rank();
  ImageGrid out(shape);

  auto offsets = [&](std::size_t i) {
    const auto c = shape.coords(i);
    std::array<double, kMaxRank> x{0, 0, 0};
    for (std::size_t k = 0; k < d; ++k)
      x[k] = static_cast<double>(centered_offset(c[k], shape.extent(k)));
    return x;
  };

  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, kernel::Dirac>) {
          out[0] = k.amplitude;
        } else if constexpr (std::is_same_v<K, kernel::GaussianAnisotropic>) {
          if (k.sigmas.size() != d)
            throw DimensionMismatch("gaussian kernel has " + std::to_string(k.sigmas.size()) +
                                    " sigmas for a rank-" + std::to_string(d) + " grid");
          for (std::size_t i = 0; i < out.size(); ++i) {
            const auto x = offsets(i);
            double e = 0.0;
            for (std::size_t a = 0; a < d; ++a) e += x[a] * x[a] / (2.0 * k.sigmas[a] * k.sigmas[a]);
            out[i] = k.amplitude * std::exp(-e);
          }
        } else if constexpr (std::is_same_v<K, kernel::IndicatorBox>) {
          if (k.half_extents.size() != d)
            throw DimensionMismatch("box kernel rank does not match grid");
          for (std::size_t i = 0; i < out.size(); ++i) {
            const auto x = offsets(i);
            bool inside = true;
            for (std::size_t a = 0; a < d; ++a)
              inside = inside && std::abs(x[a]) <= static_cast<double>(k.half_extents[a]);
            out[i] = inside ? k.amplitude : 0.0;
          }
        } else if constexpr (std::is_same_v<K, kernel::PowerDecay>) {
          for (std::size_t i = 0; i < out.size(); ++i) {
            const auto x = offsets(i);
            double r2 = 0.0;
            for (std::size_t a = 0; a < d; ++a) r2 += x[a] * x[a];
            const double r = std::max(std::sqrt(r2), k.cutoff);
            out[i] = k.amplitude * std::pow(r, k.exponent);
          }
        } else {
          require_same_shape(k.grid.shape(), shape, "kernel from grid");
          out = k.grid;
        }
      },
      spec);
  return out;
}

/// Berry-Esseen shape ratio sum |psi|^3 / (sum psi^2)^{3/2}.
inline double kernel_ratio_f(const ImageGrid& psi) {
  double s2 = 0.0, s3 = 0.0;
  for (double v : psi.values()) {
    const double a = std::abs(v);
    s2 += a * a;
    s3 += a * a * a;
  }
  if (s2 == 0.0) throw InvalidArgument("kernel_ratio_f: kernel is identically zero");
  return s3 / std::pow(s2, 1.5);
}

/// One factor of the closed-form upper bound on lim f(n) for an axis-aligned
/// Gaussian of unit amplitude.
inline double gaussian_g(double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_g: sigma must be > 0");
  const double num = 1.0 + sigma * std::sqrt(2.0 * M_PI / 3.0);
  const double den = std::max(1.0, sigma * std::sqrt(M_PI) - 1.0);
  return num / std::pow(den, 1.5);
}

inline double gaussian_g_bound(const std::vector<double>& sigmas) {
  double p = 1.0;
  for (double s : sigmas) p *= gaussian_g(s);
  return p;
}

/// Change in kernel_ratio_f, under 2x enlargement of every extent, below
/// which a sampled kernel is considered converged.
inline constexpr double kGridConvergenceTolerance = 1e-4;

struct ConvergedKernel {
  ImageGrid grid;
  double ratio_f = 0.0;
  int doublings = 0;
};

/// Samples `spec` on `initial` and doubles every extent until kernel_ratio_f
/// moves by less than 1e-4 (relative). Gives up after `max_doublings`.
inline ConvergedKernel sample_grid_converged(const KernelSpec& spec, const Shape& initial,
                                             int max_doublings = 12) {
  std::vector<std::size_t> ext = initial.extents();
  ConvergedKernel cur{sample_kernel(spec, initial), 0.0, 0};
  cur.ratio_f = kernel_ratio_f(cur.grid);
  for (int it = 1; it <= max_doublings; ++it) {
    for (auto& e : ext) e *= 2;
    ConvergedKernel next{sample_kernel(spec, Shape(ext)), 0.0, it};
    next.ratio_f = kernel_ratio_f(next.grid);
    const bool done = std::abs(next.ratio_f - cur.ratio_f) < kGridConvergenceTolerance * cur.ratio_f;
    cur = std::move(next);
    if (done) return cur;
  }
  throw NumericalFailure("kernel sampling did not converge after " +
                         std::to_string(max_doublings) + " doublings");
}

/// A starting grid for Gaussian kernels: about 8 sigma wide per axis.
inline Shape gaussian_support_shape(const std::vector<double>& sigmas) {
  std::vector<std::size_t> ext;
  for (double s : sigmas) ext.push_back(static_cast<std::size_t>(std::ceil(8.0 * s)) + 1);
  return Shape(ext);
}

}  // namespace stripefree
