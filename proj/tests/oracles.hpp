#pragma once

// Test-only reference implementations. Everything here works from dense
// matrices and textbook definitions, with no FFT, so it can check the
// library independently. Only meant for small grids.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stripefree/grid.hpp"

namespace oracle {

using stripefree::ImageGrid;
using stripefree::Shape;
using stripefree::Spectrum;
using stripefree::VectorField;
using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline std::vector<std::size_t> coords(const Shape& s, std::size_t flat) {
  std::vector<std::size_t> c(s.rank());
  for (std::size_t k = s.rank(); k-- > 0;) {
    c[k] = flat % s.extent(k);
    flat /= s.extent(k);
  }
  return c;
}

inline std::size_t flat(const Shape& s, const std::vector<std::size_t>& c) {
  std::size_t f = 0;
  for (std::size_t k = 0; k < s.rank(); ++k) f = f * s.extent(k) + c[k];
  return f;
}

// Unnormalized DFT straight from the definition, O(n^2).
inline Spectrum direct_dft(const stripefree::ComplexGrid& u, int sign = -1) {
  const Shape& s = u.shape();
  Spectrum out(s);
  for (std::size_t xi = 0; xi < u.size(); ++xi) {
    const auto cx = coords(s, xi);
    cplx acc = 0.0;
    for (std::size_t x = 0; x < u.size(); ++x) {
      const auto c = coords(s, x);
      double ph = 0.0;
      for (std::size_t k = 0; k < s.rank(); ++k)
        ph += static_cast<double>((cx[k] * c[k]) % s.extent(k)) / static_cast<double>(s.extent(k));
      acc += u[x] * std::polar(1.0, sign * 2.0 * M_PI * ph);
    }
    out[xi] = acc;
  }
  return out;
}

inline Spectrum direct_dft(const ImageGrid& u) {
  stripefree::ComplexGrid z(u.shape());
  for (std::size_t i = 0; i < u.size(); ++i) z[i] = u[i];
  return direct_dft(z, -1);
}

// (u * psi)(x) = sum_y u(y) psi(x - y), periodic.
inline ImageGrid direct_convolve(const ImageGrid& u, const ImageGrid& psi) {
  const Shape& s = u.shape();
  ImageGrid out(s);
  for (std::size_t x = 0; x < u.size(); ++x) {
    const auto cx = coords(s, x);
    double acc = 0.0;
    for (std::size_t y = 0; y < u.size(); ++y) {
      const auto cy = coords(s, y);
      std::vector<std::size_t> d(s.rank());
      for (std::size_t k = 0; k < s.rank(); ++k) d[k] = (cx[k] + s.extent(k) - cy[k]) % s.extent(k);
      acc += u[y] * psi[flat(s, d)];
    }
    out[x] = acc;
  }
  return out;
}

// C with (C lambda) = psi * lambda.
inline Matrix convolution_matrix(const ImageGrid& psi) {
  const Shape& s = psi.shape();
  const auto n = static_cast<Eigen::Index>(psi.size());
  Matrix c(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    const auto cx = coords(s, x);
    for (Eigen::Index y = 0; y < n; ++y) {
      const auto cy = coords(s, y);
      std::vector<std::size_t> d(s.rank());
      for (std::size_t k = 0; k < s.rank(); ++k) d[k] = (cx[k] + s.extent(k) - cy[k]) % s.extent(k);
      c(x, y) = psi[flat(s, d)];
    }
  }
  return c;
}

// Periodic forward differences stacked by axis: row k*n + x holds u(x+e_k) - u(x).
inline Matrix gradient_matrix(const Shape& s) {
  const std::size_t n = s.size(), d = s.rank();
  Matrix g = Matrix::Zero(d * n, n);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t x = 0; x < n; ++x) {
      auto c = coords(s, x);
      c[k] = (c[k] + 1) % s.extent(k);
      g(k * n + x, flat(s, c)) += 1.0;
      g(k * n + x, x) -= 1.0;
    }
  return g;
}

inline Vector to_vec(const ImageGrid& u) {
  Vector v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i];
  return v;
}

inline ImageGrid to_grid(const Shape& s, const Vector& v) {
  return ImageGrid(s, std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vector to_vec(const VectorField& q) {
  const std::size_t n = q.pixel_count();
  Vector v(q.channel_count() * n);
  for (std::size_t k = 0; k < q.channel_count(); ++k)
    for (std::size_t i = 0; i < n; ++i) v[k * n + i] = q[k][i];
  return v;
}

inline VectorField to_field(const Shape& s, const Vector& v) {
  std::vector<ImageGrid> ch;
  for (std::size_t k = 0; k < s.rank(); ++k) ch.push_back(to_grid(s, v.segment(k * s.size(), s.size())));
  return VectorField(std::move(ch));
}

// Largest singular value by power iteration on A^T A.
inline double power_iteration_norm(const Matrix& a, int iterations = 5000, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Vector x(a.cols());
  for (auto& v : x) v = nd(rng);
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    x.normalize();
    const Vector y = a * x;
    sigma = y.norm();
    x = a.transpose() * y;
  }
  return sigma;
}

// Per-pixel Euclidean magnitudes of a stacked field with d channels.
inline Vector pixel_magnitudes(const Vector& g, std::size_t d, std::size_t n) {
  Vector m = Vector::Zero(n);
  for (std::size_t k = 0; k < d; ++k) m += g.segment(k * n, n).cwiseAbs2();
  return m.cwiseSqrt();
}

// Gaussian-prior problem on dense operators:
//   P(lambda) = ||G (u0 - C lambda)||_{1,iso} + alpha/2 ||lambda||^2
//   D(q)      = -<u0, G^T q> - ||C^T G^T q||^2 / (2 alpha),  |q(x)| <= 1
// with lambda(q) = -C^T G^T q / alpha and q aligned with G(C lambda - u0).
struct DenseL2Problem {
  std::size_t n = 0, d = 0;
  Matrix c, g, gc, m;  // gc = G C, m = C^T G^T = gc^T
  Vector u0, gu0;
  double alpha = 1.0;

  DenseL2Problem(const ImageGrid& u0_, const ImageGrid& psi, double alpha_)
      : n(u0_.size()), d(u0_.shape().rank()), c(convolution_matrix(psi)), g(gradient_matrix(u0_.shape())),
        u0(to_vec(u0_)), alpha(alpha_) {
    gc = g * c;
    m = gc.transpose();
    gu0 = g * u0;
  }

  Vector residual_gradient(const Vector& lambda) const { return gc * lambda - gu0; }

  double primal(const Vector& lambda) const {
    return pixel_magnitudes(residual_gradient(lambda), d, n).sum() + 0.5 * alpha * lambda.squaredNorm();
  }

  double dual(const Vector& q) const { return -gu0.dot(q) - (m * q).squaredNorm() / (2.0 * alpha); }

  Vector lambda_of(const Vector& q) const { return -(m * q) / alpha; }

  void project(Vector& q) const {
    const Vector mag = pixel_magnitudes(q, d, n);
    for (std::size_t x = 0; x < n; ++x)
      if (mag[x] > 1.0)
        for (std::size_t k = 0; k < d; ++k) q[k * n + x] /= mag[x];
  }

  double relative_gap(const Vector& lambda, const Vector& q) const {
    const double p = primal(lambda);
    return (p - dual(q)) / (1.0 + std::abs(p));
  }
};

struct OracleSolution {
  Vector lambda;
  Vector q;
  double primal = 0.0;
  double dual = 0.0;
  double relative_gap = std::numeric_limits<double>::infinity();
  int fista_iterations = 0;
  std::size_t flat_pixels = 0;  // pixels where the residual gradient vanishes
};

namespace detail {

// Newton on the optimality system with the set Z of flat pixels fixed:
//   alpha lambda + M_A N(G(C lambda - u0))_A + M_Z q_Z = 0,   G(C lambda - u0)_Z = 0
// where N normalizes each pixel's gradient. q_Z is a free unknown; the
// equations on Z can be redundant, hence the rank-revealing solve.
inline OracleSolution active_set_newton(const DenseL2Problem& p, const Vector& q_start, double flat_rel) {
  const std::size_t n = p.n, d = p.d;
  Vector lambda = p.lambda_of(q_start);
  const Vector mag0 = pixel_magnitudes(p.residual_gradient(lambda), d, n);
  const double thr = flat_rel * mag0.maxCoeff();
  std::vector<std::size_t> zpix, apix;
  for (std::size_t x = 0; x < n; ++x) (mag0[x] <= thr ? zpix : apix).push_back(x);
  const std::size_t nz = zpix.size() * d;

  Vector qz(nz);
  for (std::size_t j = 0; j < zpix.size(); ++j)
    for (std::size_t k = 0; k < d; ++k) qz[j * d + k] = q_start[k * n + zpix[j]];

  auto full_q = [&](const Vector& gr, const Vector& qzv) {
    Vector q = Vector::Zero(d * n);
    const Vector mg = pixel_magnitudes(gr, d, n);
    for (std::size_t x : apix)
      for (std::size_t k = 0; k < d; ++k) q[k * n + x] = gr[k * n + x] / mg[x];
    for (std::size_t j = 0; j < zpix.size(); ++j)
      for (std::size_t k = 0; k < d; ++k) q[k * n + zpix[j]] = qzv[j * d + k];
    return q;
  };
  auto residual = [&](const Vector& lam, const Vector& qzv) {
    const Vector gr = p.residual_gradient(lam);
    Vector f(n + nz);
    f.head(n) = p.alpha * lam + p.m * full_q(gr, qzv);
    for (std::size_t j = 0; j < zpix.size(); ++j)
      for (std::size_t k = 0; k < d; ++k) f[n + j * d + k] = gr[k * n + zpix[j]];
    return f;
  };

  for (int it = 0; it < 40; ++it) {
    const Vector f = residual(lambda, qz);
    if (f.norm() <= 1e-15 * (1.0 + p.alpha * lambda.norm())) break;
    const Vector gr = p.residual_gradient(lambda);
    const Vector mg = pixel_magnitudes(gr, d, n);
    // Jacobian of the normalized gradient on A, as a dn x dn block-diagonal map.
    Matrix jn = Matrix::Zero(d * n, d * n);
    for (std::size_t x : apix)
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
          jn(a * n + x, b * n + x) =
              ((a == b ? 1.0 : 0.0) - gr[a * n + x] * gr[b * n + x] / (mg[x] * mg[x])) / mg[x];
    Matrix j = Matrix::Zero(n + nz, n + nz);
    j.topLeftCorner(n, n) = p.m * jn * p.gc;
    j.topLeftCorner(n, n).diagonal().array() += p.alpha;
    for (std::size_t jj = 0; jj < zpix.size(); ++jj)
      for (std::size_t k = 0; k < d; ++k) {
        const std::size_t row = k * n + zpix[jj];
        j.block(0, n + jj * d + k, n, 1) = p.m.col(row);
        j.block(n + jj * d + k, 0, 1, n) = p.gc.row(row);
      }
    const Vector step = j.completeOrthogonalDecomposition().solve(-f);
    lambda += step.head(n);
    qz += step.tail(nz);
  }

  OracleSolution s;
  s.lambda = lambda;
  s.q = full_q(p.residual_gradient(lambda), qz);
  p.project(s.q);
  s.primal = p.primal(lambda);
  s.dual = p.dual(s.q);
  s.relative_gap = (s.primal - s.dual) / (1.0 + std::abs(s.primal));
  s.flat_pixels = zpix.size();
  return s;
}

}  // namespace detail

// FISTA with adaptive restart on the dual, polished by active-set Newton
// once the flat pixels can be identified. The result carries its own
// certificate: relative_gap = (P(lambda) - D(q)) / (1 + |P|) with q feasible.
inline OracleSolution solve_dense_l2(const DenseL2Problem& p, int max_iterations = 1000000,
                                     double gap_tolerance = 1e-12) {
  const double L = std::pow(power_iteration_norm(p.m), 2) / p.alpha;
  const Eigen::Index dn = static_cast<Eigen::Index>(p.d * p.n);
  const Matrix mtm = p.m.transpose() * p.m / p.alpha;
  Vector q = Vector::Zero(dn), y = q, qprev = q;
  double t = 1.0;
  OracleSolution best;
  int next_polish = 500;
  for (int it = 1; it <= max_iterations; ++it) {
    const Vector grad = mtm * y + p.gu0;
    qprev = q;
    q = y - grad / L;
    p.project(q);
    if ((y - q).dot(q - qprev) > 0.0) t = 1.0;  // gradient restart
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = q + ((t - 1.0) / tn) * (q - qprev);
    t = tn;

    if (it == next_polish || it == max_iterations) {
      next_polish *= 2;
      OracleSolution cand;
      cand.lambda = p.lambda_of(q);
      cand.q = q;
      cand.primal = p.primal(cand.lambda);
      cand.dual = p.dual(q);
      cand.relative_gap = (cand.primal - cand.dual) / (1.0 + std::abs(cand.primal));
      if (cand.relative_gap < best.relative_gap) best = cand;
      for (double flat_rel : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        OracleSolution s = detail::active_set_newton(p, q, flat_rel);
        if (s.relative_gap < best.relative_gap) best = s;
      }
      best.fista_iterations = it;
      if (best.relative_gap <= gap_tolerance) break;
    }
  }
  return best;
}

// Lag-1 autocorrelation of a field along `axis`, periodic.
inline double lag1_correlation(const ImageGrid& b, std::size_t axis) {
  const Shape& s = b.shape();
  const double mu = stripefree::mean(b);
  double c0 = 0.0, c1 = 0.0;
  for (std::size_t x = 0; x < b.size(); ++x) {
    auto c = coords(s, x);
    c[axis] = (c[axis] + 1) % s.extent(axis);
    c0 += (b[x] - mu) * (b[x] - mu);
    c1 += (b[x] - mu) * (b[flat(s, c)] - mu);
  }
  return c1 / c0;
}

// Seeded random fields for property tests.
inline ImageGrid random_grid(const Shape& s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(lo, hi);
  ImageGrid u(s);
  for (auto& v : u.values()) v = ud(rng);
  return u;
}

inline VectorField random_field(const Shape& s, std::uint64_t seed) {
  std::vector<ImageGrid> ch;
  for (std::size_t k = 0; k < s.rank(); ++k) ch.push_back(random_grid(s, seed * 31 + k));
  return VectorField(std::move(ch));
}

// Random field with |q(x)| <= 1 everywhere, pushed to the boundary on about
// half of the pixels.
inline VectorField random_feasible_field(const Shape& s, std::uint64_t seed) {
  VectorField q = random_field(s, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (std::size_t x = 0; x < s.size(); ++x) {
    const double m = q.magnitude(x);
    if (m == 0.0) continue;
    const double r = (ud(rng) < 0.5 ? 1.0 : ud(rng)) / m;
    for (std::size_t k = 0; k < s.rank(); ++k) q[k][x] *= r;
  }
  return q;
}

}  // namespace oracle
