// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "stripefree/stripefree.hpp"

using namespace stripefree;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

double dist(const ImageGrid& a, const ImageGrid& b) {
  ImageGrid d = a;
  d -= b;
  return norm2(d);
}

SolverConfig cfg_gap(double gap, int maxit = 1000000) {
  SolverConfig c;
  c.gap_tolerance = gap;
  c.max_iterations = maxit;
  return c;
}

ImageGrid invertible_kernel(const Shape& s, double weight) {
  ImageGrid psi = sample_kernel(kernel::GaussianAnisotropic{{1.0, 2.0}, 1.0}, s);
  psi *= weight;
  psi[0] += 1.0;
  return psi;
}

std::vector<Shape> random_shapes(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Shape> out;
  for (int i = 0; i < count; ++i) {
    std::vector<std::size_t> e(1 + rng() % 3);
    for (auto& v : e) v = 1 + rng() % 12;
    out.emplace_back(e);
  }
  return out;
}

fs::path work_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stripefree_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------

void berry_esseen_coefficient_check(Outcome& o) {
  double worst = 0.0;
  for (double g : {0.001, 0.01, 0.05, 0.1, 0.5, 1.0}) {
    const double c = berry_esseen_coefficient(marginal::BernoulliUniform{g});
    const double analytic = 0.56 * (g / 4.0) / std::pow(g / 3.0, 1.5);
    worst = std::max(worst, std::abs(c / analytic - 1.0));
    o.require(std::abs(c * std::sqrt(g) - 0.56 * 0.75 * std::sqrt(3.0)) < 1e-12, "0.727/sqrt(gamma) at " + std::to_string(g));
    o.require(std::round(c * std::sqrt(g) * 100.0) / 100.0 == 0.73, "two-digit value 0.73");
  }
  o.detail << "coefficient*sqrt(gamma) = " << berry_esseen_coefficient(marginal::BernoulliUniform{1.0})
           << ", max rel err vs closed form " << worst;
}

void table_structure(Outcome& o) {
  const double expected[6][5] = {{1.00, 1.00, 1.00, 1.00, 1.00}, {1.00, 1.00, 0.98, 0.82, 0.69},
                              {0.88, 0.62, 0.44, 0.37, 0.31}, {0.62, 0.44, 0.31, 0.26, 0.22},
                              {0.28, 0.20, 0.14, 0.12, 0.10}, {0.20, 0.14, 0.10, 0.08, 0.07}};
  RunConfig cfg = default_run_config();
  cfg.output_dir = work_dir("table").string();
  cfg.bounds.gammas = {0.001, 0.01, 0.05, 0.1, 0.5, 1.0};
  cfg.bounds.sigma1 = {2, 8, 32, 64, 128};
  cfg.bounds.sigma2 = 2;
  const BoundsResult r = cmd_bounds(cfg);
  const std::size_t ng = 6, ns = 5;
  auto cell = [&](std::size_t i, std::size_t j) { return r.cells[i * ns + j].bound; };
  for (std::size_t j = 0; j < ns; ++j) o.require(cell(0, j) == 1.0, "capped row at sigma1 index " + std::to_string(j));
  for (std::size_t i = 0; i < ng; ++i)
    for (std::size_t j = 0; j < ns; ++j) {
      if (j + 1 < ns) {
        const double a = cell(i, j), b = cell(i, j + 1);
        o.require(a < 1.0 ? b < a : b <= a, "monotone along sigma1");
      }
      if (i + 1 < ng) {
        const double a = cell(i, j), b = cell(i + 1, j);
        o.require(a < 1.0 ? b < a : b <= a, "monotone along gamma");
      }
    }
  double worst = 0.0;
  o.detail << "computed|reference:";
  for (std::size_t i = 0; i < ng; ++i) {
    o.detail << " g=" << cfg.bounds.gammas[i] << "{";
    for (std::size_t j = 0; j < ns; ++j) {
      worst = std::max(worst, std::abs(cell(i, j) - expected[i][j]));
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%.3f|%.2f", j ? " " : "", cell(i, j), expected[i][j]);
      o.detail << buf;
    }
    o.detail << "}";
  }
  o.detail << "; max |computed - reference| = " << worst;

  // The same grid with sigma read as a standard deviation, for the audit.
  cfg.bounds.sigma_convention = "stddev";
  cfg.bounds.gammas = {0.001};
  const BoundsResult s = cmd_bounds(cfg);
  o.detail << "; stddev reading at gamma=0.001:";
  for (const auto& c : s.cells) o.detail << " " << c.bound;
}

void monte_carlo_gaussianity(Outcome& o) {
  const std::vector<double> sig{8.0, 2.0};
  const ImageGrid psi = sample_grid_converged(kernel::GaussianAnisotropic{sig, 1.0}, gaussian_support_shape(sig)).grid;
  const std::size_t count = 100000;
  const auto r = gaussianity_report(marginal::BernoulliUniform{1.0}, psi, count, 2024);
  const double slack = dkw_slack(count, 0.01);
  o.require(r.ks_distance <= r.bound + slack, "KS within bound + DKW");
  o.detail << "KS " << r.ks_distance << ", bound " << r.bound << ", DKW(0.01) " << slack;
}

void operator_norm_certification(Outcome& o) {
  const std::vector<Shape> shapes{Shape{16, 16}, Shape{8, 8, 8}, Shape{64}};
  double worst_witness = 0.0, worst_fraction = 0.0, min_real = 1.0;
  for (int k = 0; k < 20; ++k) {
    const Shape& s = shapes[k % 3];
    const ImageGrid psi = oracle::random_grid(s, 900 + k);
    const auto cert = opnorm_infty_to_2(psi);
    const HFilters h = compute_h_filters(psi);
    const double sn = std::sqrt(static_cast<double>(s.size()));
    const double rel = std::abs(cert.witness_value / (sn * h.bound_paper) - 1.0);
    worst_witness = std::max(worst_witness, rel);
    o.require(rel <= 1e-10, "witness attains sqrt(n) bound_paper");
    o.require(iso_norm(cert.witness_re, NormKind::Linf) <= 1.0 + 1e-14, "witness real part feasible");
    // The best real cosine witness sits between the phase-zero one and the norm.
    const double phase_zero = norm2(apply_noise_operator(psi, cert.witness_re));
    o.require(phase_zero <= cert.real_witness_value * (1.0 + 1e-12), "real witness dominates phase zero");
    o.require(cert.real_witness_value <= cert.value * (1.0 + 1e-12), "real witness below the norm");
    min_real = std::min(min_real, cert.real_witness_value / cert.value);
    for (std::uint64_t f = 0; f < 1000; ++f) {
      const VectorField q = oracle::random_feasible_field(s, 100000 * (k + 1) + f);
      const double v = norm2(apply_noise_operator(psi, q)) / (sn * h.bound_tight);
      worst_fraction = std::max(worst_fraction, v);
      if (v > 1.0 + 1e-12) o.require(false, "random field exceeds sqrt(n) bound_tight");
    }
  }
  o.detail << "max complex witness rel err " << worst_witness << ", min real witness / norm " << min_real
           << ", max random/sqrt(n)bound_tight " << worst_fraction;
}

void upper_bound_law(Outcome& o) {
  const fs::path dir = work_dir("sweep");
  const auto inst = fixture::stripes(Shape{64, 64}, 0.2, 5);
  io::write_raw(dir / "u0.raw", inst.u0);
  RunConfig cfg = default_run_config();
  cfg.output_dir = (dir / "out").string();
  cfg.input = (dir / "u0.raw").string();
  FilterConfig f;
  f.sigmas = {0.5, 64.0};
  cfg.filters = {f};
  cfg.solver = cfg_gap(1e-6, 200000);
  cfg.sweep.points = 24;
  const double ac = cap_crossing_alpha(inst.u0, sample_kernel(kernel::GaussianAnisotropic{f.sigmas, 1.0}, inst.u0.shape()));
  cfg.sweep.alpha_min = 1e-2 * ac;
  cfg.sweep.alpha_max = 1e4 * ac;
  const SweepResult r = cmd_sweep(cfg);
  o.require(r.rows.size() == 24, "24 points");
  double worst_excess = 0.0, max_ratio = 0.0;
  int below_cap = 0;
  for (const auto& row : r.rows) {
    const double limit = std::min(row.upper_tight, row.cap);
    worst_excess = std::max(worst_excess, row.b_norm / limit - 1.0);
    o.require(row.b_norm <= limit * (1.0 + 1e-3), "||b|| under min(bound, cap)");
    if (row.upper_tight < row.cap) {
      ++below_cap;
      max_ratio = std::max(max_ratio, row.ratio);
      o.require(row.ratio <= 10.0, "bound/actual <= 10 below the cap");
    }
  }
  o.require(below_cap > 0, "some points below the cap");
  o.detail << "alpha in [" << r.alpha_min << ", " << r.alpha_max << "], max ||b||/bound - 1 = " << worst_excess
           << ", max ratio below cap " << max_ratio << " over " << below_cap << " points, all converged "
           << (r.all_converged ? "yes" : "no");
}

void small_alpha_closed_form(Outcome& o) {
  const Shape s{16, 16};
  const SolverConfig cfg = cfg_gap(1e-12);
  double worst_b = 0.0, worst_l = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ImageGrid u0 = oracle::random_grid(s, 40 + seed, 0.0, 1.0);
    const ImageGrid psi = invertible_kernel(s, 0.3 * seed);
    const double t = small_alpha_threshold(u0, psi, cfg, 1.05);
    o.require(std::isfinite(t), "finite threshold");
    FilterBank bank;
    bank.add(psi, 1.0);
    const ImageGrid l0 = lambda0_closed_form(u0, bank)[0];
    const ImageGrid centered = remove_mean(u0);
    for (double f : {1.0, 0.5, 0.1}) {
      const Solution sol = solve(Problem{u0, psi, t * f, Prior::L2}, cfg);
      const double eb = dist(sol.b, centered) / norm2(centered);
      const double el = dist(sol.lambda, l0) / norm2(l0);
      worst_b = std::max(worst_b, eb);
      worst_l = std::max(worst_l, el);
      o.require(eb <= 1e-4, "b equals centered image");
      o.require(el <= 1e-4, "lambda equals closed form");
    }
  }
  o.detail << "max rel ||b - (u0 - mean)|| " << worst_b << ", max rel ||lambda - lambda0|| " << worst_l;
}

void lower_bound_check(Outcome& o) {
  const Shape s{16, 16};
  double min_margin = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ImageGrid u0 = oracle::random_grid(s, 50 + seed, 0.0, 1.0);
    const ImageGrid psi = invertible_kernel(s, 0.3 * seed);
    const double amin = lower_bound(u0, psi, 1.0).alpha_min_validity;
    for (double f : {10.0, 100.0}) {
      const LowerBound lb = lower_bound(u0, psi, f * amin);
      o.require(lb.applicable, "bound applicable");
      const Solution sol = solve(Problem{u0, psi, f * amin, Prior::L2}, cfg_gap(1e-10));
      o.require(sol.converged, "solver converged");
      min_margin = std::min(min_margin, norm2(sol.b) / lb.bound);
      o.require(norm2(sol.b) >= lb.bound, "||b|| >= lower bound");
    }
  }
  o.detail << "min ||b|| / lower bound " << min_margin;
}

void merge_equivalence(Outcome& o) {
  const Shape s{16, 16};
  const auto inst = fixture::stripes(s, 0.2, 6);
  FilterBank bank;
  bank.add(sample_kernel(kernel::GaussianAnisotropic{{0.5, 16.0}, 1.0}, s), 1.0);
  bank.add(sample_kernel(kernel::GaussianAnisotropic{{1.0, 1.0}, 1.0}, s), 4.0);
  const StackedSolution direct = solve_multi_direct(inst.u0, bank, cfg_gap(1e-8));
  const MergedFilter m = merge_bank(bank);
  const Solution merged = solve(Problem{inst.u0, m.psi, m.alpha, Prior::L2}, cfg_gap(1e-8));
  o.require(direct.converged && merged.converged, "both converged");
  ImageGrid sum_b(s);
  for (const auto& c : direct.components) sum_b += c;
  const double eb = dist(sum_b, merged.b) / norm2(merged.b);
  o.require(eb <= 1e-4, "sum of direct components matches merged b");
  const auto parts = split_components(merged.b, bank);
  double worst = 0.0;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const double e = dist(parts[i].lambda, direct.lambdas[i]) / norm2(direct.lambdas[i]);
    worst = std::max(worst, e);
    o.require(e <= 1e-4, "component lambda " + std::to_string(i));
  }
  o.detail << "rel ||sum b_i - b|| " << eb << ", max rel lambda_i diff " << worst;
}

void oracle_equivalence(Outcome& o) {
  const Shape s{8, 8};
  double worst = 0.0, worst_rp = 0.0, worst_rd = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ImageGrid u0 = oracle::random_grid(s, seed);
    ImageGrid psi = sample_kernel(kernel::GaussianAnisotropic{{1.0, 2.0}, 1.0}, s);
    psi += 0.3 * oracle::random_grid(s, seed + 100, 0.0, 1.0);
    const auto ref = oracle::solve_dense_l2(oracle::DenseL2Problem(u0, psi, 1.0), 1000000, 1e-12);
    o.require(ref.relative_gap <= 1e-12, "oracle certified");
    const Problem p{u0, psi, 1.0, Prior::L2};
    const Solution sol = solve(p, cfg_gap(1e-12));
    const double rg = sol.gap / (1.0 + std::abs(sol.primal_value));
    o.require(rg <= 1e-10, "solver gap <= 1e-10");
    const double e = dist(sol.lambda, oracle::to_grid(s, ref.lambda)) / norm2(oracle::to_grid(s, ref.lambda));
    worst = std::max(worst, e);
    o.require(e <= 1e-6, "lambda within 1e-6");
    const OptimalityResiduals res = optimality_residuals(p, sol);
    worst_rp = std::max(worst_rp, res.primal);
    worst_rd = std::max(worst_rd, res.dual);
    o.require(res.primal <= 1e-5, "primal residual");
  }
  o.detail << "max rel lambda err " << worst << ", max primal residual " << worst_rp << ", max dual residual "
           << worst_rd << " (reported)";
}

void prior_comparison(Outcome& o) {
  const Shape shape{64, 64};
  const ImageGrid clean = phantom(shape);
  const ImageGrid psi = sample_kernel(kernel::GaussianAnisotropic{{1.0, 8.0}, 1.0}, shape);
  double best[2][2];
  for (int gi = 0; gi < 2; ++gi) {
    const double gamma = gi == 0 ? 0.001 : 1.0;
    ImageGrid noise = sample_stationary(marginal::BernoulliUniform{gamma}, psi, 11).b;
    noise *= 0.3 * norm2(clean) / norm2(noise);
    const fs::path dir = work_dir("prior_" + std::to_string(gi));
    io::write_raw(dir / "u0.raw", clean + noise);
    io::write_raw(dir / "clean.raw", clean);
    for (int pi = 0; pi < 2; ++pi) {
      RunConfig cfg = default_run_config();
      cfg.output_dir = (dir / (pi == 0 ? "l2" : "l1")).string();
      cfg.input = (dir / "u0.raw").string();
      cfg.reference = (dir / "clean.raw").string();
      cfg.prior = pi == 0 ? Prior::L2 : Prior::L1;
      FilterConfig f;
      f.sigmas = {1.0, 8.0};
      cfg.filters = {f};
      cfg.solver = cfg_gap(1e-4, 3000);
      cfg.sweep.points = 0;
      cfg.sweep.evaluations = 30;
      cfg.sweep.alpha_min = 1e-4;
      cfg.sweep.alpha_max = 1e4;
      const SweepResult r = cmd_sweep(cfg);
      best[gi][pi] = *r.best_snr;
    }
  }
  o.require(best[0][1] >= best[0][0] + 1.0, "l1 beats l2 by 1 dB at gamma = 0.001");
  o.require(best[1][0] >= best[1][1] - 0.5, "l2 within 0.5 dB of l1 at gamma = 1");
  o.detail << "gamma=0.001: l2 " << best[0][0] << " dB, l1 " << best[0][1] << " dB; gamma=1: l2 " << best[1][0]
           << " dB, l1 " << best[1][1] << " dB";
}

void core_algebra(Outcome& o) {
  double parseval = 0.0, conv = 0.0, adj = 0.0, tv = 0.0;
  int k = 0;
  for (const Shape& s : random_shapes(30, 2718)) {
    const ImageGrid u = oracle::random_grid(s, 10 * k + 1);
    const ImageGrid p = oracle::random_grid(s, 10 * k + 2);
    const VectorField q = oracle::random_field(s, 10 * k + 3);
    ++k;

    double e = 0.0;
    const Spectrum f = dft(u);
    for (const auto& c : f.values()) e += std::norm(c);
    const double expect = std::sqrt(static_cast<double>(s.size())) * norm2(u);
    parseval = std::max(parseval, std::abs(std::sqrt(e) - expect) / expect);

    const ImageGrid direct = oracle::direct_convolve(u, p);
    conv = std::max(conv, dist(circular_convolve(u, p), direct) / norm2(direct));

    const VectorField g = gradient(u);
    double lhs = 0.0, qn = 0.0;
    for (std::size_t c = 0; c < s.rank(); ++c) {
      lhs += dot(g[c], q[c]);
      qn += dot(q[c], q[c]);
    }
    adj = std::max(adj, std::abs(lhs - dot(u, gradient_adjoint(q))) / (norm2(u) * std::sqrt(qn)));

    const oracle::Vector gv = oracle::gradient_matrix(s) * oracle::to_vec(u);
    const double tv_ref = oracle::pixel_magnitudes(gv, s.rank(), s.size()).sum();
    tv = std::max(tv, std::abs(tv_norm(u) - tv_ref) / (1.0 + tv_ref));
  }
  ImageGrid block(Shape{8, 8});
  block.at({3, 3}) = block.at({3, 4}) = block.at({4, 3}) = block.at({4, 4}) = 1.0;
  const double tv_block = tv_norm(block);
  o.require(parseval <= 1e-10, "Parseval");
  o.require(conv <= 1e-10, "convolution theorem");
  o.require(adj <= 1e-10, "gradient adjoint");
  o.require(tv <= 1e-12, "total variation");
  o.require(std::abs(tv_block - (6.0 + std::sqrt(2.0))) < 1e-14, "TV of a 2x2 block");
  o.detail << "30 shapes; Parseval " << parseval << ", convolution " << conv << ", adjoint " << adj << ", TV " << tv
           << ", TV(2x2 block) " << tv_block;
}

struct Criterion {
  int id;
  double limit_seconds;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, 1, berry_esseen_coefficient_check},
      {2, 10, table_structure},
      {3, 30, monte_carlo_gaussianity},
      {4, 30, operator_norm_certification},
      {5, 300, upper_bound_law},
      {6, 120, small_alpha_closed_form},
      {7, 120, lower_bound_check},
      {8, 180, merge_equivalence},
      {9, 300, oracle_equivalence},
      {10, 600, prior_comparison},
      {11, 10, core_algebra},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs <= c.limit_seconds, "runtime limit " + std::to_string(c.limit_seconds) + " s");
    if (!o.pass) ++failures;
    std::printf("[criterion %d] %s (%.2f s) %s\n", c.id, o.pass ? "PASS" : "FAIL", secs, o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
