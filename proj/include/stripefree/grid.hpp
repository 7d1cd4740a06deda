#pragma once

// Periodic d-dimensional grids (d <= 3), their discrete gradient and the
// isotropic norms used throughout the library.
//
// Layout is row-major: axis 0 (x1) is the slowest, axis d-1 the fastest.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "stripefree/errors.hpp"

namespace stripefree {

inline constexpr std::size_t kMaxRank = 3;

/// Extents of a periodic grid. Invariant: 1 <= rank <= 3, every extent >= 1.
class Shape {
 public:
  Shape() = default;

  Shape(std::initializer_list<std::size_t> extents)
      : Shape(std::span<const std::size_t>(extents.begin(), extents.size())) {}

  explicit Shape(std::span<const std::size_t> extents) {
    if (extents.empty() || extents.size() > kMaxRank) {
      throw InvalidArgument("grid rank must be 1, 2 or 3, got " +
                            std::to_string(extents.size()));
    }
    rank_ = extents.size();
    for (std::size_t k = 0; k < rank_; ++k) {
      if (extents[k] == 0) throw InvalidArgument("grid extents must be >= 1");
      extents_[k] = extents[k];
    }
  }

  explicit Shape(const std::vector<std::size_t>& extents)
      : Shape(std::span<const std::size_t>(extents)) {}

  std::size_t rank() const { return rank_; }
  std::size_t extent(std::size_t axis) const { return extents_[axis]; }
  std::vector<std::size_t> extents() const {
    return {extents_.begin(), extents_.begin() + static_cast<std::ptrdiff_t>(rank_)};
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (std::size_t k = 0; k < rank_; ++k) n *= extents_[k];
    return n;
  }

  /// Distance in the flat array between neighbours along `axis`.
  std::size_t stride(std::size_t axis) const {
    std::size_t s = 1;
    for (std::size_t k = axis + 1; k < rank_; ++k) s *= extents_[k];
    return s;
  }

  std::size_t flat_index(std::span<const std::size_t> coords) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < rank_; ++k) idx = idx * extents_[k] + coords[k];
    return idx;
  }

  std::array<std::size_t, kMaxRank> coords(std::size_t flat) const {
    std::array<std::size_t, kMaxRank> c{0, 0, 0};
    for (std::size_t k = rank_; k-- > 0;) {
      c[k] = flat % extents_[k];
      flat /= extents_[k];
    }
    return c;
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t k = 0; k < rank_; ++k) {
      if (k) s += "x";
      s += std::to_string(extents_[k]);
    }
    return s;
  }

  friend bool operator==(const Shape& a, const Shape& b) {
    if (a.rank_ != b.rank_) return false;
    for (std::size_t k = 0; k < a.rank_; ++k)
      if (a.extents_[k] != b.extents_[k]) return false;
    return true;
  }

 private:
  std::array<std::size_t, kMaxRank> extents_{1, 1, 1};
  std::size_t rank_ = 1;
};

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) {
    throw DimensionMismatch(std::string(what) + ": shape " + a.to_string() +
                            " vs " + b.to_string());
  }
}

/// Real samples on a periodic grid.
template <typename T>
class BasicGrid {
 public:
  using value_type = T;

  BasicGrid() = default;
  explicit BasicGrid(const Shape& shape, T fill = T{})
      : shape_(shape), data_(shape.size(), fill) {}
  BasicGrid(const Shape& shape, std::vector<T> data)
      : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw DimensionMismatch("grid data length " + std::to_string(data_.size()) +
                              " does not match shape " + shape_.to_string());
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  const std::vector<T>& vector() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::initializer_list<std::size_t> c) {
    return data_[shape_.flat_index(std::span<const std::size_t>(c.begin(), c.size()))];
  }
  const T& at(std::initializer_list<std::size_t> c) const {
    return data_[shape_.flat_index(std::span<const std::size_t>(c.begin(), c.size()))];
  }

  BasicGrid& operator+=(const BasicGrid& o) {
    require_same_shape(shape_, o.shape_, "grid +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  BasicGrid& operator-=(const BasicGrid& o) {
    require_same_shape(shape_, o.shape_, "grid -=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  BasicGrid& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend BasicGrid operator+(BasicGrid a, const BasicGrid& b) { return a += b; }
  friend BasicGrid operator-(BasicGrid a, const BasicGrid& b) { return a -= b; }
  friend BasicGrid operator*(T s, BasicGrid a) { return a *= s; }

 private:
  Shape shape_;
  std::vector<T> data_;
};

/// Real-valued image u, u0, lambda, b or a sampled kernel psi.
using ImageGrid = BasicGrid<double>;
/// DFT coefficients; index layout identical to the spatial grid.
using Spectrum = BasicGrid<std::complex<double>>;
using ComplexGrid = BasicGrid<std::complex<double>>;

/// One ImageGrid per axis, all of the same shape (gradients, dual fields).
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const Shape& shape) : channels_(shape.rank(), ImageGrid(shape)) {}
  explicit VectorField(std::vector<ImageGrid> channels) : channels_(std::move(channels)) {
    if (channels_.empty()) throw InvalidArgument("vector field needs at least one channel");
    for (const auto& c : channels_) require_same_shape(c.shape(), channels_.front().shape(), "vector field channel");
  }

  const Shape& shape() const { return channels_.front().shape(); }
  std::size_t channel_count() const { return channels_.size(); }
  std::size_t pixel_count() const { return channels_.front().size(); }

  ImageGrid& operator[](std::size_t k) { return channels_[k]; }
  const ImageGrid& operator[](std::size_t k) const { return channels_[k]; }

  auto begin() { return channels_.begin(); }
  auto end() { return channels_.end(); }
  auto begin() const { return channels_.begin(); }
  auto end() const { return channels_.end(); }

  /// Euclidean length of the d-vector at pixel i.
  double magnitude(std::size_t i) const {
    double s = 0.0;
    for (const auto& c : channels_) s += c[i] * c[i];
    return std::sqrt(s);
  }

 private:
  std::vector<ImageGrid> channels_;
};

// ---------------------------------------------------------------------------
// Scalar reductions

inline double sum(const ImageGrid& u) {
  return std::accumulate(u.values().begin(), u.values().end(), 0.0);
}

inline double mean(const ImageGrid& u) { return sum(u) / static_cast<double>(u.size()); }

inline double dot(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a.shape(), b.shape(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double dot(const VectorField& a, const VectorField& b) {
  if (a.channel_count() != b.channel_count()) throw DimensionMismatch("dot: channel count");
  double s = 0.0;
  for (std::size_t k = 0; k < a.channel_count(); ++k) s += dot(a[k], b[k]);
  return s;
}

inline double norm2(const ImageGrid& u) { return std::sqrt(dot(u, u)); }

inline double norm1(const ImageGrid& u) {
  double s = 0.0;
  for (double v : u.values()) s += std::abs(v);
  return s;
}

inline double norm_inf(const ImageGrid& u) {
  double s = 0.0;
  for (double v : u.values()) s = std::max(s, std::abs(v));
  return s;
}

/// u - u^mean
inline ImageGrid remove_mean(ImageGrid u) {
  const double m = mean(u);
  for (auto& v : u.values()) v -= m;
  return u;
}

inline ImageGrid real_part(const ComplexGrid& z) {
  ImageGrid out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].real();
  return out;
}

inline ImageGrid imag_part(const ComplexGrid& z) {
  ImageGrid out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].imag();
  return out;
}

// ---------------------------------------------------------------------------
// Periodic finite differences

namespace detail {

// Calls f(i, j) for every flat index i with j its periodic successor along axis.
template <typename F>
void for_each_successor(const Shape& shape, std::size_t axis, F&& f) {
  const std::size_t e = shape.extent(axis);
  const std::size_t s = shape.stride(axis);
  const std::size_t outer = shape.size() / (e * s);
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = o * e * s;
    for (std::size_t c = 0; c < e; ++c) {
      const std::size_t cn = (c + 1 == e) ? 0 : c + 1;
      const std::size_t row = base + c * s;
      const std::size_t next = base + cn * s;
      for (std::size_t in = 0; in < s; ++in) f(row + in, next + in);
    }
  }
}

}  // namespace detail

/// Periodic forward difference along `axis`: u(x + e_k) - u(x).
inline ImageGrid partial_derivative(const ImageGrid& u, std::size_t axis) {
  ImageGrid out(u.shape());
  detail::for_each_successor(u.shape(), axis,
                             [&](std::size_t i, std::size_t j) { out[i] = u[j] - u[i]; });
  return out;
}

inline VectorField gradient(const ImageGrid& u) {
  VectorField g(u.shape());
  for (std::size_t k = 0; k < u.shape().rank(); ++k) g[k] = partial_derivative(u, k);
  return g;
}

/// Transpose of `gradient`: sum over k of q_k(x - e_k) - q_k(x).
inline ImageGrid gradient_adjoint(const VectorField& q) {
  if (q.channel_count() != q.shape().rank()) {
    throw DimensionMismatch("gradient_adjoint: field has " + std::to_string(q.channel_count()) +
                            " channels for a rank-" + std::to_string(q.shape().rank()) + " grid");
  }
  ImageGrid out(q.shape());
  for (std::size_t k = 0; k < q.channel_count(); ++k) {
    const ImageGrid& qk = q[k];
    // <D u, q> = sum_i (u[j] - u[i]) q[i]  =>  (D^T q)[j] += q[i], (D^T q)[i] -= q[i]
    detail::for_each_successor(q.shape(), k, [&](std::size_t i, std::size_t j) {
      out[j] += qk[i];
      out[i] -= qk[i];
    });
  }
  return out;
}

/// Isotropic l^p norm of a vector field, p in {1, 2, inf}.
enum class NormKind { L1, L2, Linf };

inline double iso_norm(const VectorField& q, NormKind p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < q.pixel_count(); ++i) {
    const double m = q.magnitude(i);
    switch (p) {
      case NormKind::L1: acc += m; break;
      case NormKind::L2: acc += m * m; break;
      case NormKind::Linf: acc = std::max(acc, m); break;
    }
  }
  return p == NormKind::L2 ? std::sqrt(acc) : acc;
}

/// Discrete isotropic total variation.
inline double tv_norm(const ImageGrid& u) { return iso_norm(gradient(u), NormKind::L1); }

}  // namespace stripefree
