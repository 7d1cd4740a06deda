#pragma once

// Primal-dual (Chambolle-Pock) solver for
//
//   min_lambda  || grad(u0 - sum_i psi_i * lambda_i) ||_1 + sum_i R_i(lambda_i)
//
// with R_i = alpha_i/2 ||.||_2^2 (L2 prior) or alpha_i ||.||_1 (L1 prior).
//
// Sign convention: the dual field q is aligned with grad(b - u0), so at the
// optimum lambda_i = -Psi_i^T grad^T q / alpha_i and the dual objective is
// D(q) = -<grad u0, q> - sum_i ||Psi_i^T grad^T q||^2 / (2 alpha_i).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include "stripefree/fft.hpp"
#include "stripefree/filter_bank.hpp"
#include "stripefree/grid.hpp"

namespace stripefree {

enum class Prior { L2, L1 };

struct Problem {
  ImageGrid u0;
  ImageGrid psi;
  double alpha = 1.0;
  Prior prior = Prior::L2;

  void validate() const {
    require_same_shape(u0.shape(), psi.shape(), "problem");
    if (!(alpha > 0.0)) throw InvalidArgument("problem: alpha must be > 0");
  }
};

struct SolverConfig {
  int max_iterations = 200000;
  /// Stop when gap / (1 + |primal|) falls below this.
  double gap_tolerance = 1e-8;
  /// Strong-convexity step schedule (L2 prior only).
  bool accelerate = true;
  /// tau = step_ratio / L, sigma = 1 / (step_ratio L), so tau sigma L^2 = 1.
  double step_ratio = 1.0;
  /// Keep the per-iteration gap in Solution::gap_history.
  bool record_history = false;
  /// Restart from the best iterates with the initial steps once the gap has
  /// dropped below this fraction of its value at the previous restart.
  /// 0 disables restarts.
  double restart_factor = 0.1;

  void validate() const {
    if (max_iterations < 1) throw InvalidArgument("solver: max_iterations must be >= 1");
    if (!(gap_tolerance > 0.0)) throw InvalidArgument("solver: gap_tolerance must be > 0");
    if (!(step_ratio > 0.0)) throw InvalidArgument("solver: step_ratio must be > 0");
    if (!(restart_factor >= 0.0 && restart_factor < 1.0))
      throw InvalidArgument("solver: restart_factor must lie in [0, 1)");
  }
};

/// Parameters the iteration actually ran with.
struct SolverMetadata {
  double operator_norm = 0.0;
  double tau0 = 0.0;
  double sigma0 = 0.0;
  double convexity_modulus = 0.0;  // 0 when acceleration is off
  bool accelerated = false;
  int restarts = 0;
};

struct Solution {
  ImageGrid lambda;
  ImageGrid b;  // psi * lambda
  ImageGrid u;  // u0 - b
  VectorField q;
  int iterations = 0;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  bool converged = false;
  std::vector<double> gap_history;
  SolverMetadata metadata;
};

/// Result of the stacked m-filter iteration.
struct StackedSolution {
  std::vector<ImageGrid> lambdas;
  std::vector<ImageGrid> components;  // b_i = psi_i * lambda_i
  ImageGrid b;                        // sum_i b_i
  VectorField q;
  int iterations = 0;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  bool converged = false;
  std::vector<double> gap_history;
  SolverMetadata metadata;
};

/// Spectral norm of lambda -> grad(sum_i psi_i * lambda_i):
/// max_xi sqrt(sum_i |psi_hat_i|^2) sqrt(sum_k |d_hat_k|^2).
inline double stacked_operator_norm(const std::vector<ImageGrid>& psis) {
  if (psis.empty()) throw InvalidArgument("operator norm of an empty bank");
  const Shape& shape = psis.front().shape();
  ImageGrid energy(shape);
  for (const auto& psi : psis) {
    require_same_shape(psi.shape(), shape, "operator norm");
    const Spectrum s = dft(psi);
    for (std::size_t i = 0; i < s.size(); ++i) energy[i] += std::norm(s[i]);
  }
  const ImageGrid grad_energy = gradient_symbol_energy(shape);
  double best = 0.0;
  for (std::size_t i = 0; i < energy.size(); ++i) best = std::max(best, energy[i] * grad_energy[i]);
  return std::sqrt(best);
}

/// ||K|| for K = grad o Psi.
inline double operator_norm_K(const ImageGrid& psi) { return stacked_operator_norm({psi}); }

namespace detail {

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Pointwise projection onto { |q(x)| <= 1 }.
inline void project_unit_ball(VectorField& q) {
  for (std::size_t i = 0; i < q.pixel_count(); ++i) {
    const double m = q.magnitude(i);
    if (m > 1.0) {
      for (auto& c : q) c[i] /= m;
    }
  }
}

class StackedOperator {
 public:
  explicit StackedOperator(const std::vector<ImageGrid>& psis)
      : fft_(psis.front().shape()), half_(psis.size()) {
    for (std::size_t i = 0; i < psis.size(); ++i) {
      half_[i].resize(fft_.half_size());
      fft_.forward(psis[i].values(), half_[i]);
    }
    work_.resize(fft_.half_size());
    acc_.resize(fft_.half_size());
  }

  std::size_t filter_count() const { return half_.size(); }

  // b = sum_i psi_i * lambda_i
  void synthesize(const std::vector<ImageGrid>& lambdas, ImageGrid& b) {
    std::fill(acc_.begin(), acc_.end(), std::complex<double>(0.0));
    for (std::size_t i = 0; i < half_.size(); ++i) {
      fft_.forward(lambdas[i].values(), work_);
      for (std::size_t j = 0; j < acc_.size(); ++j) acc_[j] += half_[i][j] * work_[j];
    }
    fft_.inverse(acc_, b.values());
  }

  // g_i = Psi_i^T t for every i.
  void analyze(const ImageGrid& t, std::vector<ImageGrid>& g) {
    fft_.forward(t.values(), work_);
    for (std::size_t i = 0; i < half_.size(); ++i) {
      for (std::size_t j = 0; j < acc_.size(); ++j) acc_[j] = std::conj(half_[i][j]) * work_[j];
      fft_.inverse(acc_, g[i].values());
    }
  }

  // After analyze(t): b = -sum_i psi_i * Psi_i^T t / alpha_i, the noise
  // produced by lambda_i = -g_i / alpha_i.
  void synthesize_from_last_analysis(const std::vector<double>& alphas, ImageGrid& b) {
    std::fill(acc_.begin(), acc_.end(), std::complex<double>(0.0));
    for (std::size_t i = 0; i < half_.size(); ++i) {
      const double w = -1.0 / alphas[i];
      for (std::size_t j = 0; j < acc_.size(); ++j) acc_[j] += w * std::norm(half_[i][j]) * work_[j];
    }
    fft_.inverse(acc_, b.values());
  }

 private:
  HalfSpectrumTransform fft_;
  std::vector<std::vector<std::complex<double>>> half_;
  std::vector<std::complex<double>> work_;
  std::vector<std::complex<double>> acc_;
};

}  // namespace detail

inline constexpr int kMinRestartSpacing = 20;

/// Chambolle-Pock on the stacked variable (lambda_1, ..., lambda_m).
///
/// The returned primal iterate is the one with the lowest primal value seen,
/// the dual iterate the one with the highest dual value, so the reported gap
/// is nonincreasing in the iteration count. Restarts (see
/// SolverConfig::restart_factor) resume from that pair with the initial steps.
inline StackedSolution solve_stacked(const ImageGrid& u0, const std::vector<ImageGrid>& psis,
                                     const std::vector<double>& alphas, Prior prior,
                                     const SolverConfig& cfg,
                                     const std::vector<ImageGrid>* initial = nullptr) {
  cfg.validate();
  const std::size_t m = psis.size();
  if (m == 0 || alphas.size() != m) throw InvalidArgument("solve_stacked: need one alpha per filter");
  for (std::size_t i = 0; i < m; ++i) {
    require_same_shape(psis[i].shape(), u0.shape(), "solve_stacked");
    if (!(alphas[i] > 0.0)) throw InvalidArgument("solve_stacked: alpha must be > 0");
  }
  const Shape& shape = u0.shape();

  SolverMetadata meta;
  meta.operator_norm = stacked_operator_norm(psis);
  const double L = meta.operator_norm > 0.0 ? meta.operator_norm : 1.0;
  double tau = cfg.step_ratio / L;
  double sigma = 1.0 / (cfg.step_ratio * L);
  meta.tau0 = tau;
  meta.sigma0 = sigma;
  meta.accelerated = cfg.accelerate && prior == Prior::L2;
  const double gamma = *std::min_element(alphas.begin(), alphas.end());
  meta.convexity_modulus = meta.accelerated ? gamma : 0.0;

  detail::StackedOperator op(psis);

  std::vector<ImageGrid> lambda(m, ImageGrid(shape));
  if (initial) {
    if (initial->size() != m) throw InvalidArgument("solve_stacked: initial guess size");
    for (std::size_t i = 0; i < m; ++i) {
      require_same_shape((*initial)[i].shape(), shape, "initial guess");
      lambda[i] = (*initial)[i];
    }
  }
  std::vector<ImageGrid> g(m, ImageGrid(shape));
  ImageGrid b(shape), b_bar(shape), b_new(shape), b_dual(shape), r(shape);
  op.synthesize(lambda, b);
  b_bar = b;
  VectorField q(shape);

  auto regularizer = [&](const std::vector<ImageGrid>& lam) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (prior == Prior::L2) {
        const double n = norm2(lam[i]);
        s += 0.5 * alphas[i] * n * n;
      } else {
        s += alphas[i] * norm1(lam[i]);
      }
    }
    return s;
  };
  auto primal_of = [&](const ImageGrid& bb, const std::vector<ImageGrid>& lam) {
    ImageGrid res = u0;
    res -= bb;
    return tv_norm(res) + regularizer(lam);
  };

  StackedSolution best;
  best.lambdas = lambda;
  best.b = b;
  best.q = q;
  best.primal_value = primal_of(b, lambda);
  best.dual_value = 0.0;  // D(0)
  best.gap = best.primal_value - best.dual_value;
  best.metadata = meta;

  const std::size_t n = shape.size();
  int last_restart = 0;
  double gap_at_restart = best.gap;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    if (cfg.restart_factor > 0.0 && it - last_restart > kMinRestartSpacing &&
        best.gap < cfg.restart_factor * gap_at_restart) {
      last_restart = it;
      gap_at_restart = best.gap;
      ++best.metadata.restarts;
      tau = meta.tau0;
      sigma = meta.sigma0;
      lambda = best.lambdas;
      q = best.q;
      op.synthesize(lambda, b);
      b_bar = b;
    }

    // Dual ascent on q with the extrapolated b_bar.
    for (std::size_t j = 0; j < n; ++j) r[j] = b_bar[j] - u0[j];
    for (std::size_t k = 0; k < shape.rank(); ++k) {
      ImageGrid& qk = q[k];
      detail::for_each_successor(shape, k, [&](std::size_t i, std::size_t jn) {
        qk[i] += sigma * (r[jn] - r[i]);
      });
    }
    detail::project_unit_ball(q);

    // g_i = Psi_i^T grad^T q
    const ImageGrid t = gradient_adjoint(q);
    op.analyze(t, g);

    // Dual objective at q (L1: rescaled into the feasible box first).
    double dual = 0.0;
    double dual_scale = 1.0;
    if (prior == Prior::L2) {
      dual = -dot(u0, t);
      for (std::size_t i = 0; i < m; ++i) {
        const double gn = norm2(g[i]);
        dual -= gn * gn / (2.0 * alphas[i]);
      }
    } else {
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = norm_inf(g[i]);
        if (gi > alphas[i]) dual_scale = std::min(dual_scale, alphas[i] / gi);
      }
      dual = -dual_scale * dot(u0, t);
    }
    if (dual > best.dual_value) {
      best.dual_value = dual;
      best.q = q;
      if (dual_scale != 1.0)
        for (auto& c : best.q) c *= dual_scale;
    }

    // L2: the primal point paired with q by the optimality condition is
    // often a much better certificate than the current primal iterate.
    if (prior == Prior::L2) {
      op.synthesize_from_last_analysis(alphas, b_dual);
      double reg = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double gn = norm2(g[i]);
        reg += gn * gn / (2.0 * alphas[i]);
      }
      ImageGrid res = u0;
      res -= b_dual;
      const double candidate = tv_norm(res) + reg;
      if (candidate < best.primal_value) {
        best.primal_value = candidate;
        for (std::size_t i = 0; i < m; ++i) {
          best.lambdas[i] = g[i];
          best.lambdas[i] *= -1.0 / alphas[i];
        }
        best.b = b_dual;
      }
    }

    // Primal proximal step.
    for (std::size_t i = 0; i < m; ++i) {
      ImageGrid& li = lambda[i];
      const ImageGrid& gi = g[i];
      if (prior == Prior::L2) {
        const double shrink = 1.0 / (1.0 + tau * alphas[i]);
        for (std::size_t j = 0; j < n; ++j) li[j] = (li[j] - tau * gi[j]) * shrink;
      } else {
        const double thr = tau * alphas[i];
        for (std::size_t j = 0; j < n; ++j) li[j] = detail::soft_threshold(li[j] - tau * gi[j], thr);
      }
    }

    double theta = 1.0;
    if (meta.accelerated) {
      theta = 1.0 / std::sqrt(1.0 + 2.0 * gamma * tau);
      tau *= theta;
      sigma /= theta;
    }

    op.synthesize(lambda, b_new);
    for (std::size_t j = 0; j < n; ++j) b_bar[j] = b_new[j] + theta * (b_new[j] - b[j]);
    std::swap(b, b_new);

    const double primal = primal_of(b, lambda);
    if (primal < best.primal_value) {
      best.primal_value = primal;
      best.lambdas = lambda;
      best.b = b;
    }

    best.iterations = it;
    best.gap = best.primal_value - best.dual_value;
    if (cfg.record_history) best.gap_history.push_back(best.gap);
    if (best.gap <= cfg.gap_tolerance * (1.0 + std::abs(best.primal_value))) {
      best.converged = true;
      break;
    }
  }

  best.components.clear();
  for (std::size_t i = 0; i < m; ++i) best.components.push_back(circular_convolve(best.lambdas[i], psis[i]));
  best.b = ImageGrid(shape);
  for (const auto& c : best.components) best.b += c;
  return best;
}

/// Objective of the single-filter problem at lambda.
inline double primal_value(const Problem& p, const ImageGrid& lambda) {
  p.validate();
  require_same_shape(lambda.shape(), p.u0.shape(), "primal_value");
  ImageGrid res = p.u0;
  res -= circular_convolve(lambda, p.psi);
  double reg = 0.0;
  if (p.prior == Prior::L2) {
    const double n = norm2(lambda);
    reg = 0.5 * p.alpha * n * n;
  } else {
    reg = p.alpha * norm1(lambda);
  }
  return tv_norm(res) + reg;
}

/// Psi^T grad^T q
inline ImageGrid psi_adjoint_divergence(const ImageGrid& psi, const VectorField& q) {
  const ImageGrid t = gradient_adjoint(q);
  Spectrum ts = dft(t);
  const Spectrum ps = dft(psi);
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] *= std::conj(ps[i]);
  return real_part(idft(ts));
}

/// Dual objective at a feasible q (|q(x)| <= 1 + 1e-12). For the L1 prior q
/// is first rescaled so that ||Psi^T grad^T q||_inf <= alpha.
inline double dual_value(const Problem& p, const VectorField& q) {
  p.validate();
  if (iso_norm(q, NormKind::Linf) > 1.0 + 1e-12) throw InvalidArgument("dual_value: q is not feasible");
  const ImageGrid t = gradient_adjoint(q);
  const ImageGrid g = psi_adjoint_divergence(p.psi, q);
  if (p.prior == Prior::L2) {
    const double gn = norm2(g);
    return -dot(p.u0, t) - gn * gn / (2.0 * p.alpha);
  }
  const double gi = norm_inf(g);
  const double scale = gi > p.alpha ? p.alpha / gi : 1.0;
  return -scale * dot(p.u0, t);
}

struct DualGap {
  double dual = 0.0;
  double gap = 0.0;
};

inline DualGap dual_value_and_gap(const Problem& p, const ImageGrid& lambda, const VectorField& q) {
  DualGap r;
  r.dual = dual_value(p, q);
  r.gap = primal_value(p, lambda) - r.dual;
  return r;
}

inline DualGap dual_value_and_gap(const Problem& p, const Solution& sol) {
  return dual_value_and_gap(p, sol.lambda, sol.q);
}

/// Solves the single-filter problem. `initial` overrides the lambda = 0 start.
inline Solution solve(const Problem& p, const SolverConfig& cfg,
                      const std::optional<ImageGrid>& initial = std::nullopt) {
  p.validate();
  std::vector<ImageGrid> init;
  if (initial) init.push_back(*initial);
  StackedSolution s = solve_stacked(p.u0, {p.psi}, {p.alpha}, p.prior, cfg, initial ? &init : nullptr);
  Solution out;
  out.lambda = std::move(s.lambdas.front());
  out.b = circular_convolve(out.lambda, p.psi);
  out.u = p.u0;
  out.u -= out.b;
  out.q = std::move(s.q);
  out.iterations = s.iterations;
  out.primal_value = primal_value(p, out.lambda);
  out.dual_value = s.dual_value;
  out.gap = out.primal_value - out.dual_value;
  out.converged = s.converged;
  out.gap_history = std::move(s.gap_history);
  out.metadata = s.metadata;
  return out;
}

struct OptimalityResiduals {
  double primal = 0.0;  // ||lambda + Psi^T grad^T q / alpha|| / ||lambda||
  double dual = 0.0;    // max misalignment of q with grad(b - u0)/|grad(b - u0)|
};

/// Residuals of the L2 optimality conditions. `theta_rel` sets the gradient
/// threshold below which alignment is not checked, relative to max |grad(b - u0)|.
inline OptimalityResiduals optimality_residuals(const Problem& p, const ImageGrid& lambda,
                                                const VectorField& q, double theta_rel = 1e-6) {
  p.validate();
  if (p.prior != Prior::L2) throw InvalidArgument("optimality_residuals: L2 prior only");
  OptimalityResiduals r;
  ImageGrid diff = lambda;
  ImageGrid g = psi_adjoint_divergence(p.psi, q);
  g *= 1.0 / p.alpha;
  diff += g;
  const double ln = norm2(lambda);
  r.primal = ln > 0.0 ? norm2(diff) / ln : norm2(diff);

  ImageGrid resid = circular_convolve(lambda, p.psi);
  resid -= p.u0;
  const VectorField grad = gradient(resid);
  const double gmax = iso_norm(grad, NormKind::Linf);
  const double threshold = theta_rel * gmax;
  for (std::size_t i = 0; i < grad.pixel_count(); ++i) {
    const double m = grad.magnitude(i);
    if (m <= threshold || m == 0.0) continue;
    double e = 0.0;
    for (std::size_t k = 0; k < grad.channel_count(); ++k) {
      const double d = q[k][i] - grad[k][i] / m;
      e += d * d;
    }
    r.dual = std::max(r.dual, std::sqrt(e));
  }
  return r;
}

inline OptimalityResiduals optimality_residuals(const Problem& p, const Solution& sol,
                                                double theta_rel = 1e-6) {
  return optimality_residuals(p, sol.lambda, sol.q, theta_rel);
}

}  // namespace stripefree
