#pragma once

// Reduction of an m-filter Gaussian-prior problem to a single filter with the
// same noise covariance, and recovery of the per-filter components.

#include <cmath>
#include <vector>

#include "stripefree/bounds.hpp"
#include "stripefree/fft.hpp"
#include "stripefree/filter_bank.hpp"
#include "stripefree/solver.hpp"

namespace stripefree {

struct MergedFilter {
  ImageGrid psi;
  double alpha = 1.0;
  Spectrum spectrum;  // real, nonnegative
};

/// psi_hat = sqrt(sum_i |psi_hat_i|^2 / alpha_i), zero phase, alpha = 1.
inline MergedFilter merge_bank(const FilterBank& bank) {
  const Shape& shape = bank.shape();
  ImageGrid energy(shape);
  for (const auto& e : bank) {
    const Spectrum s = dft(e.psi);
    for (std::size_t i = 0; i < s.size(); ++i) energy[i] += std::norm(s[i]) / e.alpha;
  }
  MergedFilter m;
  m.spectrum = Spectrum(shape);
  for (std::size_t i = 0; i < energy.size(); ++i) m.spectrum[i] = std::sqrt(energy[i]);
  // |psi_hat_i| is even in xi for real psi_i, so the inverse is real.
  m.psi = real_part(idft(m.spectrum));
  return m;
}

struct NoiseComponent {
  ImageGrid lambda;
  ImageGrid b;  // psi_i * lambda_i
};

/// lambda_hat_i = conj(psi_hat_i) b_hat / (alpha_i sum_j |psi_hat_j|^2 / alpha_j),
/// and 0 at frequencies where the bank has no energy.
inline std::vector<NoiseComponent> split_components(const ImageGrid& b, const FilterBank& bank) {
  const Shape& shape = b.shape();
  require_same_shape(bank.shape(), shape, "split_components");
  std::vector<Spectrum> ps;
  for (const auto& e : bank) ps.push_back(dft(e.psi));
  ImageGrid denom(shape);
  for (std::size_t j = 0; j < bank.size(); ++j)
    for (std::size_t i = 0; i < shape.size(); ++i) denom[i] += std::norm(ps[j][i]) / bank[j].alpha;
  const double guard = kSpectralGuard * norm_inf(denom);

  const Spectrum bh = dft(b);
  std::vector<NoiseComponent> out;
  for (std::size_t j = 0; j < bank.size(); ++j) {
    Spectrum l(shape), c(shape);
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (!(denom[i] > guard)) continue;
      l[i] = std::conj(ps[j][i]) * bh[i] / (bank[j].alpha * denom[i]);
      c[i] = ps[j][i] * l[i];
    }
    out.push_back({real_part(idft(l)), real_part(idft(c))});
  }
  return out;
}

/// Direct solve over the stacked variable (lambda_1, ..., lambda_m). Meant
/// as a reference for the merged route on small grids.
inline StackedSolution solve_multi_direct(const ImageGrid& u0, const FilterBank& bank, const SolverConfig& cfg,
                                          Prior prior = Prior::L2) {
  require_same_shape(bank.shape(), u0.shape(), "solve_multi_direct");
  return solve_stacked(u0, bank.filters(), bank.alphas(), prior, cfg);
}

}  // namespace stripefree
