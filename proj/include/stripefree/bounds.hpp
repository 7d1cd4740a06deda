#pragma once

// Analytical estimates of the removed noise b(alpha) = psi * lambda(alpha):
// the alpha-selection upper bound, its operator-norm certificate, the
// small-alpha limit and the large-alpha lower bound.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "stripefree/fft.hpp"
#include "stripefree/filter_bank.hpp"
#include "stripefree/grid.hpp"
#include "stripefree/solver.hpp"

namespace stripefree {

/// Relative size below which a per-frequency denominator counts as zero.
inline constexpr double kSpectralGuard = 1e-14;

struct HFilters {
  std::vector<ImageGrid> h;      // h_k = psi * psi~ * d~_k
  std::vector<Spectrum> h_hat;   // |psi_hat|^2 conj(d_hat_k)
  double bound_paper = 0.0;      // max_{k, xi} |h_hat_k|
  double bound_tight = 0.0;      // max_xi sqrt(sum_k |h_hat_k|^2)
};

inline HFilters compute_h_filters(const ImageGrid& psi) {
  const Shape& shape = psi.shape();
  const Spectrum ps = dft(psi);
  HFilters out;
  ImageGrid energy(shape);
  for (std::size_t k = 0; k < shape.rank(); ++k) {
    const Spectrum d = difference_symbol(shape, k);
    Spectrum h(shape);
    for (std::size_t i = 0; i < h.size(); ++i) {
      h[i] = std::norm(ps[i]) * std::conj(d[i]);
      const double a = std::abs(h[i]);
      out.bound_paper = std::max(out.bound_paper, a);
      energy[i] += a * a;
    }
    out.h.push_back(idft_real(h));
    out.h_hat.push_back(std::move(h));
  }
  for (double e : energy.values()) out.bound_tight = std::max(out.bound_tight, std::sqrt(e));
  return out;
}

/// Psi Psi^T grad^T q, the map whose infinity-to-2 norm bounds ||b(alpha)|| * alpha.
inline ImageGrid apply_noise_operator(const ImageGrid& psi, const VectorField& q) {
  require_same_shape(psi.shape(), q.shape(), "noise operator");
  Spectrum t = dft(gradient_adjoint(q));
  const Spectrum ps = dft(psi);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] *= std::norm(ps[i]);
  return real_part(idft(t));
}

/// Value of the infinity-to-2 norm together with a Fourier witness.
///
/// The witness is the complex field q_k*(x) = exp(2 pi i <xi*, x / n>) on the
/// maximizing direction k* and frequency xi*, stored as real and imaginary
/// parts. Its pointwise modulus is 1 and, the operator being real,
/// ||Op q|| = sqrt(||Op Re q||^2 + ||Op Im q||^2) = value.
struct OperatorNormCertificate {
  double value = 0.0;  // sqrt(n) * bound_paper
  VectorField witness_re;
  VectorField witness_im;
  std::size_t direction = 0;
  std::size_t frequency = 0;  // flat index of xi*
  /// ||Op q|| for the complex witness, evaluated by applying the operator.
  double witness_value = 0.0;
  /// Best value reached by a real cosine witness cos(2 pi <xi*, x/n> + phi);
  /// equals `value` only when xi* is its own conjugate.
  double real_witness_value = 0.0;
};

inline OperatorNormCertificate opnorm_infty_to_2(const ImageGrid& psi) {
  const Shape& shape = psi.shape();
  const HFilters hf = compute_h_filters(psi);
  OperatorNormCertificate c;
  c.value = std::sqrt(static_cast<double>(shape.size())) * hf.bound_paper;

  double best = -1.0;
  for (std::size_t k = 0; k < hf.h_hat.size(); ++k)
    for (std::size_t i = 0; i < shape.size(); ++i)
      if (std::abs(hf.h_hat[k][i]) > best) {
        best = std::abs(hf.h_hat[k][i]);
        c.direction = k;
        c.frequency = i;
      }

  const auto xi = shape.coords(c.frequency);
  c.witness_re = VectorField(shape);
  c.witness_im = VectorField(shape);
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const auto x = shape.coords(i);
    double phase = 0.0;
    for (std::size_t a = 0; a < shape.rank(); ++a)
      phase += static_cast<double>((xi[a] * x[a]) % shape.extent(a)) / static_cast<double>(shape.extent(a));
    c.witness_re[c.direction][i] = std::cos(2.0 * M_PI * phase);
    c.witness_im[c.direction][i] = std::sin(2.0 * M_PI * phase);
  }
  const ImageGrid re = apply_noise_operator(psi, c.witness_re);
  const ImageGrid im = apply_noise_operator(psi, c.witness_im);
  const double a = norm2(re), b = norm2(im);
  c.witness_value = std::hypot(a, b);
  // max_phi ||cos(phi) Op Re - sin(phi) Op Im|| is the top singular value of
  // the n x 2 matrix [Op Re, Op Im].
  const double ab = dot(re, im);
  const double tr = 0.5 * (a * a + b * b);
  const double det = a * a * b * b - ab * ab;
  c.real_witness_value = std::sqrt(tr + std::sqrt(std::max(0.0, tr * tr - det)));
  return c;
}

struct AlphaSelection {
  double eta = 0.0;
  double alpha = 0.0;
  double predicted_b_norm = 0.0;  // min(sqrt(n) bound_paper / alpha, cap_norm)
  double cap_norm = 0.0;          // ||u0 - mean(u0)||
  double bound_paper = 0.0;
  double bound_tight = 0.0;
};

/// alpha = sqrt(n) ||h_hat||_inf / (||u0|| eta), the choice that makes the
/// upper bound on ||b|| equal to eta ||u0||.
inline AlphaSelection alpha_for_target(const ImageGrid& u0, const ImageGrid& psi, double eta) {
  require_same_shape(u0.shape(), psi.shape(), "alpha_for_target");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("alpha_for_target: eta must lie in (0, 1)");
  const double un = norm2(u0);
  if (un == 0.0) throw InvalidArgument("alpha_for_target: image is identically zero");
  const HFilters hf = compute_h_filters(psi);
  const double sn = std::sqrt(static_cast<double>(u0.size()));
  AlphaSelection s;
  s.eta = eta;
  s.bound_paper = hf.bound_paper;
  s.bound_tight = hf.bound_tight;
  s.alpha = sn * hf.bound_paper / (un * eta);
  if (!(s.alpha > 0.0)) throw InvalidArgument("alpha_for_target: kernel has no energy off the zero frequency");
  s.cap_norm = norm2(remove_mean(u0));
  s.predicted_b_norm = std::min(sn * hf.bound_paper / s.alpha, s.cap_norm);
  return s;
}

namespace detail {

inline std::string frequency_name(const Shape& shape, std::size_t flat) {
  const auto c = shape.coords(flat);
  std::string s = "(";
  for (std::size_t a = 0; a < shape.rank(); ++a) {
    if (a) s += ", ";
    s += std::to_string(c[a]);
  }
  return s + ")";
}

}  // namespace detail

/// Limit of lambda_i(alpha) as alpha -> 0: the minimum-energy split
/// sum_i psi_i * lambda_i = u0 - mean(u0).
inline std::vector<ImageGrid> lambda0_closed_form(const ImageGrid& u0, const FilterBank& bank) {
  const Shape& shape = u0.shape();
  require_same_shape(bank.shape(), shape, "lambda0_closed_form");
  std::vector<Spectrum> ps;
  for (const auto& e : bank) ps.push_back(dft(e.psi));

  ImageGrid denom(shape);
  for (std::size_t j = 0; j < bank.size(); ++j)
    for (std::size_t i = 0; i < shape.size(); ++i) denom[i] += std::norm(ps[j][i]) / bank[j].alpha;
  const double guard = kSpectralGuard * norm_inf(denom);
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (!(denom[i] > guard))
      throw RankDeficient("every filter vanishes at frequency " + detail::frequency_name(shape, i));

  const Spectrum uh = dft(u0);
  std::vector<ImageGrid> out;
  for (std::size_t j = 0; j < bank.size(); ++j) {
    Spectrum l(shape);
    for (std::size_t i = 1; i < shape.size(); ++i)
      l[i] = std::conj(ps[j][i]) * uh[i] / (bank[j].alpha * denom[i]);
    out.push_back(real_part(idft(l)));
  }
  return out;
}

inline constexpr double kSmallAlphaTolerance = 1e-4;

/// Largest alpha at which the solver output satisfies
/// ||b(alpha) - (u0 - mean u0)|| <= 1e-4 ||u0 - mean u0||, found by a
/// decade search from sqrt(n) bound_paper / ||u0 - mean u0|| followed by
/// bisection on log(alpha) down to a ratio of `resolution`.
inline double small_alpha_threshold(const ImageGrid& u0, const ImageGrid& psi, const SolverConfig& cfg,
                                    double resolution = 1.01) {
  require_same_shape(u0.shape(), psi.shape(), "small_alpha_threshold");
  if (!(resolution > 1.0)) throw InvalidArgument("small_alpha_threshold: resolution must be > 1");
  const Spectrum ps = dft(psi);
  double maxmod = 0.0, minmod = std::numeric_limits<double>::infinity();
  for (const auto& c : ps.values()) {
    maxmod = std::max(maxmod, std::abs(c));
    minmod = std::min(minmod, std::abs(c));
  }
  if (!(minmod > kSpectralGuard * maxmod)) throw RankDeficient("small_alpha_threshold: psi_hat vanishes");

  const ImageGrid target = remove_mean(u0);
  const double tn = norm2(target);
  if (tn == 0.0) return std::numeric_limits<double>::infinity();

  auto holds = [&](double alpha) {
    const Solution s = solve(Problem{u0, psi, alpha, Prior::L2}, cfg);
    ImageGrid e = s.b;
    e -= target;
    return norm2(e) <= kSmallAlphaTolerance * tn;
  };

  const double alpha0 = std::sqrt(static_cast<double>(u0.size())) * compute_h_filters(psi).bound_paper / tn;
  double lo = alpha0, hi = alpha0;
  if (holds(alpha0)) {
    do {
      lo = hi;
      hi = lo * 10.0;
      if (hi > 1e12 * alpha0) return lo;
    } while (holds(hi));
  } else {
    do {
      hi = lo;
      lo = hi / 10.0;
      if (lo < 1e-12 * alpha0)
        throw NumericalFailure("small_alpha_threshold: predicate fails down to 1e-12 times the initial alpha");
    } while (!holds(lo));
  }
  while (hi / lo > resolution) {
    const double mid = std::sqrt(lo * hi);
    (holds(mid) ? lo : hi) = mid;
  }
  return lo;
}

struct LowerBound {
  double bound = 0.0;
  double alpha_min_validity = 0.0;  // 1 / ||A^+ b1||_inf
  bool applicable = false;          // alpha >= alpha_min_validity
  ImageGrid b1;                     // zero-mean part of Psi^{-1} u0
  VectorField preimage;             // A^+ b1 with A = Psi^T grad^T
};

/// ||b(alpha)|| >= min|psi_hat| ||b1|| / (alpha ||A^+ b1||_inf), valid for
/// alpha >= 1 / ||A^+ b1||_inf, with ||.||_inf the pointwise Euclidean maximum.
inline LowerBound lower_bound(const ImageGrid& u0, const ImageGrid& psi, double alpha) {
  const Shape& shape = u0.shape();
  require_same_shape(psi.shape(), shape, "lower_bound");
  if (!(alpha > 0.0)) throw InvalidArgument("lower_bound: alpha must be > 0");
  const Spectrum ps = dft(psi);
  double maxmod = 0.0, minmod = std::numeric_limits<double>::infinity();
  for (const auto& c : ps.values()) {
    maxmod = std::max(maxmod, std::abs(c));
    minmod = std::min(minmod, std::abs(c));
  }
  if (!(minmod > kSpectralGuard * maxmod)) throw RankDeficient("lower_bound: psi_hat vanishes");

  const Spectrum uh = dft(u0);
  const ImageGrid energy = gradient_symbol_energy(shape);
  Spectrum b1h(shape);
  for (std::size_t i = 1; i < shape.size(); ++i) b1h[i] = uh[i] / ps[i];

  LowerBound out;
  out.b1 = real_part(idft(b1h));
  std::vector<ImageGrid> channels;
  for (std::size_t k = 0; k < shape.rank(); ++k) {
    const Spectrum d = difference_symbol(shape, k);
    Spectrum qk(shape);
    for (std::size_t i = 1; i < shape.size(); ++i) qk[i] = d[i] * b1h[i] / (std::conj(ps[i]) * energy[i]);
    channels.push_back(real_part(idft(qk)));
  }
  out.preimage = VectorField(std::move(channels));

  const double pinf = iso_norm(out.preimage, NormKind::Linf);
  const double b1n = norm2(out.b1);
  if (b1n == 0.0 || pinf == 0.0) {
    out.applicable = true;
    return out;
  }
  out.alpha_min_validity = 1.0 / pinf;
  out.applicable = alpha >= out.alpha_min_validity;
  if (out.applicable) out.bound = minmod * b1n / (alpha * pinf);
  return out;
}

}  // namespace stripefree
