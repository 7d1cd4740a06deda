#pragma once

// Unnormalized multi-dimensional DFT (DC coefficient = sum of samples) and its
// inverse F^{-1} = F^* / n, backed by FFTW. Any extent is supported; nothing
// is padded.
//
// Plans are created once per shape under a mutex and executed through the
// new-array interface, which FFTW documents as thread safe.

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "stripefree/grid.hpp"

namespace stripefree {

namespace detail {

struct FftwPlans {
  fftw_plan forward = nullptr;   // c2c, sign -1
  fftw_plan backward = nullptr;  // c2c, sign +1
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

class FftwPlanCache {
 public:
  static FftwPlanCache& instance() {
    static FftwPlanCache cache;
    return cache;
  }

  const FftwPlans& plans(const Shape& shape) {
    const Key key{shape.rank(), shape.extent(0), shape.extent(1), shape.extent(2)};
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;

    std::array<int, kMaxRank> n{};
    const int rank = static_cast<int>(shape.rank());
    for (int k = 0; k < rank; ++k) n[k] = static_cast<int>(shape.extent(k));
    const std::size_t size = shape.size();

    // FFTW_ESTIMATE never touches the arrays, so scratch buffers suffice.
    auto* cin = fftw_alloc_complex(size);
    auto* cout = fftw_alloc_complex(size);
    auto* rin = fftw_alloc_real(size);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    FftwPlans p;
    p.forward = fftw_plan_dft(rank, n.data(), cin, cout, FFTW_FORWARD, flags);
    p.backward = fftw_plan_dft(rank, n.data(), cin, cout, FFTW_BACKWARD, flags);
    p.r2c = fftw_plan_dft_r2c(rank, n.data(), rin, cout, flags);
    p.c2r = fftw_plan_dft_c2r(rank, n.data(), cin, rin, flags);
    fftw_free(cin);
    fftw_free(cout);
    fftw_free(rin);
    return plans_.emplace(key, p).first->second;
  }

  static std::size_t half_size(const Shape& shape) {
    const std::size_t last = shape.extent(shape.rank() - 1);
    return shape.size() / last * (last / 2 + 1);
  }

  FftwPlanCache(const FftwPlanCache&) = delete;
  FftwPlanCache& operator=(const FftwPlanCache&) = delete;

 private:
  using Key = std::array<std::size_t, 4>;
  FftwPlanCache() = default;
  ~FftwPlanCache() {
    for (auto& [key, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
      fftw_destroy_plan(p.r2c);
      fftw_destroy_plan(p.c2r);
    }
  }

  std::mutex mutex_;
  std::map<Key, FftwPlans> plans_;
};

inline fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }
inline fftw_complex* as_fftw(const std::complex<double>* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(p));
}

}  // namespace detail

/// Forward DFT of a complex grid.
inline Spectrum dft(const ComplexGrid& u) {
  const auto& p = detail::FftwPlanCache::instance().plans(u.shape());
  Spectrum out(u.shape());
  fftw_execute_dft(p.forward, detail::as_fftw(u.data()), detail::as_fftw(out.data()));
  return out;
}

/// Forward DFT of a real grid: u_hat(xi) = sum_x u(x) exp(-2 pi i <xi, x/n>).
inline Spectrum dft(const ImageGrid& u) {
  ComplexGrid z(u.shape());
  for (std::size_t i = 0; i < u.size(); ++i) z[i] = u[i];
  return dft(z);
}

/// Inverse DFT, F^* / n.
inline ComplexGrid idft(const Spectrum& s) {
  const auto& p = detail::FftwPlanCache::instance().plans(s.shape());
  ComplexGrid out(s.shape());
  fftw_execute_dft(p.backward, detail::as_fftw(s.data()), detail::as_fftw(out.data()));
  const double inv_n = 1.0 / static_cast<double>(s.size());
  for (auto& v : out.values()) v *= inv_n;
  return out;
}

/// Imaginary residue tolerated when a spectrum is expected to be Hermitian.
inline constexpr double kImaginaryResidueTolerance = 1e-10;

/// Inverse DFT of a spectrum known to come from a real grid. Throws
/// NumericalFailure if the imaginary residue exceeds 1e-10 of the real norm.
inline ImageGrid idft_real(const Spectrum& s) {
  ComplexGrid z = idft(s);
  double re2 = 0.0, im2 = 0.0;
  ImageGrid out(s.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = z[i].real();
    re2 += z[i].real() * z[i].real();
    im2 += z[i].imag() * z[i].imag();
  }
  if (std::sqrt(im2) > kImaginaryResidueTolerance * std::sqrt(re2) + 1e-300 && im2 > 0.0) {
    throw NumericalFailure("inverse transform is not real: imaginary residue " +
                           std::to_string(std::sqrt(im2)) + " vs real norm " +
                           std::to_string(std::sqrt(re2)));
  }
  return out;
}

/// u * psi with periodic boundary conditions, computed as F^{-1}(u_hat . psi_hat).
inline ImageGrid circular_convolve(const ImageGrid& u, const ImageGrid& psi) {
  require_same_shape(u.shape(), psi.shape(), "circular_convolve");
  Spectrum a = dft(u);
  const Spectrum b = dft(psi);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  ComplexGrid z = idft(a);
  return real_part(z);
}

/// Symbol of the forward difference along `axis`: exp(2 pi i xi_k / n_k) - 1.
inline Spectrum difference_symbol(const Shape& shape, std::size_t axis) {
  Spectrum out(shape);
  const double nk = static_cast<double>(shape.extent(axis));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto c = shape.coords(i);
    const double angle = 2.0 * M_PI * static_cast<double>(c[axis]) / nk;
    out[i] = std::complex<double>(std::cos(angle) - 1.0, std::sin(angle));
  }
  return out;
}

/// sum_k |d_hat_k(xi)|^2 = sum_k 4 sin^2(pi xi_k / n_k)
inline ImageGrid gradient_symbol_energy(const Shape& shape) {
  ImageGrid out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto c = shape.coords(i);
    double s = 0.0;
    for (std::size_t k = 0; k < shape.rank(); ++k) {
      const double v = 2.0 * std::sin(M_PI * static_cast<double>(c[k]) /
                                      static_cast<double>(shape.extent(k)));
      s += v * v;
    }
    out[i] = s;
  }
  return out;
}

/// Real-to-half-complex transform pair used on hot paths (solver iterations).
/// The half spectrum keeps the last axis up to n_d/2 inclusive.
class HalfSpectrumTransform {
 public:
  explicit HalfSpectrumTransform(const Shape& shape)
      : shape_(shape),
        plans_(&detail::FftwPlanCache::instance().plans(shape)),
        half_size_(detail::FftwPlanCache::half_size(shape)),
        scratch_(half_size_) {}

  const Shape& shape() const { return shape_; }
  std::size_t half_size() const { return half_size_; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in.data()), detail::as_fftw(out.data()));
  }

  /// Normalized inverse. `in` is preserved.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    std::copy(in.begin(), in.end(), scratch_.begin());
    fftw_execute_dft_c2r(plans_->c2r, detail::as_fftw(scratch_.data()), out.data());
    const double inv_n = 1.0 / static_cast<double>(shape_.size());
    for (auto& v : out) v *= inv_n;
  }

  /// Restriction of a full spectrum to the half layout.
  std::vector<std::complex<double>> restrict_spectrum(const Spectrum& full) const {
    require_same_shape(full.shape(), shape_, "restrict_spectrum");
    const std::size_t last = shape_.extent(shape_.rank() - 1);
    const std::size_t half_last = last / 2 + 1;
    std::vector<std::complex<double>> out(half_size_);
    const std::size_t rows = shape_.size() / last;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < half_last; ++c) out[r * half_last + c] = full[r * last + c];
    return out;
  }

 private:
  Shape shape_;
  const detail::FftwPlans* plans_;
  std::size_t half_size_;
  std::vector<std::complex<double>> scratch_;
};

}  // namespace stripefree
