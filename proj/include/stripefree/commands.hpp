#pragma once

// The four CLI commands as library calls. Each writes its files under
// cfg.output_dir and returns the numbers it reported.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stripefree/bounds.hpp"
#include "stripefree/config.hpp"
#include "stripefree/io.hpp"
#include "stripefree/kernels.hpp"
#include "stripefree/multi.hpp"
#include "stripefree/noise.hpp"
#include "stripefree/solver.hpp"

namespace stripefree {

// ---------------------------------------------------------------------------
// Helpers shared by the commands.

/// Piecewise-constant test image with values in [0.2, 0.8]: a box and a ball
/// on a flat background, defined for any rank.
inline ImageGrid phantom(const Shape& shape) {
  ImageGrid u(shape, 0.2);
  for (std::size_t i = 0; i < u.size(); ++i) {
    bool in_box = true;
    double r2 = 0.0;
    for (std::size_t k = 0; k < shape.rank(); ++k) {
      const std::size_t c = (i / shape.stride(k)) % shape.extent(k);
      const double y = (static_cast<double>(c) + 0.5) / static_cast<double>(shape.extent(k));
      const double lo = k % 2 == 0 ? 0.2 : 0.15;
      const double hi = k % 2 == 0 ? 0.6 : 0.55;
      in_box = in_box && y > lo && y < hi;
      r2 += (y - 0.65) * (y - 0.65);
    }
    if (in_box) u[i] = 0.8;
    if (r2 < 0.04) u[i] = 0.5;
  }
  return u;
}

/// 20 log10(||ref - mean ref|| / ||u - ref||).
inline double snr_db(const ImageGrid& u, const ImageGrid& ref) {
  require_same_shape(u.shape(), ref.shape(), "snr_db");
  ImageGrid e = u;
  e -= ref;
  return 20.0 * std::log10(norm2(remove_mean(ref)) / norm2(e));
}

/// 10 log10(peak^2 / mse) with peak = max(ref) - min(ref).
inline double psnr_db(const ImageGrid& u, const ImageGrid& ref) {
  require_same_shape(u.shape(), ref.shape(), "psnr_db");
  double lo = ref[0], hi = ref[0], se = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    lo = std::min(lo, ref[i]);
    hi = std::max(hi, ref[i]);
    se += (u[i] - ref[i]) * (u[i] - ref[i]);
  }
  const double mse = se / static_cast<double>(ref.size());
  return 10.0 * std::log10((hi - lo) * (hi - lo) / mse);
}

/// FNV-1a over the little-endian bytes of the samples.
inline std::uint64_t fnv1a(const ImageGrid& u, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (double v : u.values()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline constexpr const char* kSnrDefinition = "20*log10(||ref - mean(ref)||_2 / ||u - ref||_2)";
inline constexpr const char* kPsnrDefinition = "10*log10((max(ref) - min(ref))^2 / mse)";

/// Comma-separated table written in one go.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw InvalidArgument("csv row width does not match header");
    rows_.push_back(std::move(row));
  }

  std::string str() const {
    std::string s;
    auto line = [&s](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
      s += "\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return s;
  }

  void write(const std::filesystem::path& path) const { io::detail::write_all(path, str()); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// key = value lines followed by the resolved configuration.
class Report {
 public:
  void set(const std::string& key, const std::string& value) { lines_.push_back(key + " = " + value); }
  void set(const std::string& key, double value) { set(key, fmt(value)); }
  void section(const std::string& name) { lines_.push_back("\n[" + name + "]"); }

  void write(const std::filesystem::path& path, const RunConfig& cfg) const {
    std::string s;
    for (const auto& l : lines_) s += l + "\n";
    s += "\n# resolved configuration\n" + to_text(cfg);
    io::detail::write_all(path, s);
  }

 private:
  std::vector<std::string> lines_;
};

namespace detail {

inline std::string image_ext(const RunConfig& cfg, const Shape& shape) {
  if (shape.rank() != 2 || cfg.format == "raw") return ".raw";
  return "." + cfg.format;
}

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.output_dir) / name;
}

inline std::filesystem::path write_named(const RunConfig& cfg, const std::string& stem, const ImageGrid& u) {
  const auto p = out_path(cfg, stem + image_ext(cfg, u.shape()));
  io::write_image(p, u);
  return p;
}

inline void prepare_output(const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output_dir + ": " + ec.message());
}

inline ImageGrid require_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw ConfigError("input is required for this command");
  return io::read_image(cfg.input);
}

inline std::vector<ImageGrid> build_filters(const RunConfig& cfg, const Shape& shape) {
  if (cfg.filters.empty()) throw ConfigError("at least one [filter] section is required");
  std::vector<ImageGrid> out;
  for (const auto& f : cfg.filters) out.push_back(build_kernel(f, shape));
  return out;
}

inline ImageGrid log_image(const ImageGrid& u) {
  ImageGrid out = u;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(u[i] > 0.0)) throw InvalidArgument("multiplicative mode needs strictly positive pixels");
    out[i] = std::log(u[i]);
  }
  return out;
}

inline ImageGrid exp_image(ImageGrid u) {
  for (auto& v : u.values()) v = std::exp(v);
  return u;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// denoise

struct FilterOutcome {
  double alpha = 0.0;
  std::optional<double> eta;
  double bound_paper = 0.0;  // sqrt(n) ||h_hat||_inf
  double bound_tight = 0.0;
  double b_norm = 0.0;
};

struct DenoiseResult {
  ImageGrid u;
  ImageGrid b;  // additive noise in the working domain (log domain when multiplicative)
  std::vector<ImageGrid> components;
  std::vector<FilterOutcome> filters;
  double gap = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
  bool converged = false;
  std::uint64_t hash = 0;
  std::optional<double> snr_input, snr_output;
};

/// Supervised pipeline: alpha_i from eta_i, merge into one filter, one L2
/// solve with alpha = 1, split the removed noise back into components. The
/// L1 prior is solved directly on the stacked variable instead.
inline DenoiseResult cmd_denoise(const RunConfig& cfg) {
  validate(cfg);
  const ImageGrid input = detail::require_input(cfg);
  const ImageGrid u0 = cfg.multiplicative ? detail::log_image(input) : input;
  const Shape& shape = u0.shape();
  const std::vector<ImageGrid> psis = detail::build_filters(cfg, shape);
  const double sn = std::sqrt(static_cast<double>(shape.size()));

  DenoiseResult r;
  FilterBank bank;
  for (std::size_t i = 0; i < psis.size(); ++i) {
    const FilterConfig& f = cfg.filters[i];
    if (!f.eta && !f.alpha) throw ConfigError("filter " + std::to_string(i) + ": denoise needs eta or alpha");
    const HFilters hf = compute_h_filters(psis[i]);
    FilterOutcome o;
    o.eta = f.eta;
    o.bound_paper = sn * hf.bound_paper;
    o.bound_tight = sn * hf.bound_tight;
    o.alpha = f.eta ? alpha_for_target(u0, psis[i], *f.eta).alpha : *f.alpha;
    bank.add(psis[i], o.alpha);
    r.filters.push_back(o);
  }

  if (cfg.prior == Prior::L2) {
    const MergedFilter merged = merge_bank(bank);
    const Solution sol = solve(Problem{u0, merged.psi, merged.alpha, Prior::L2}, cfg.solver);
    r.b = sol.b;
    r.gap = sol.gap;
    r.relative_gap = sol.gap / (1.0 + std::abs(sol.primal_value));
    r.iterations = sol.iterations;
    r.converged = sol.converged;
    for (auto& c : split_components(r.b, bank)) r.components.push_back(std::move(c.b));
  } else {
    const StackedSolution sol = solve_stacked(u0, bank.filters(), bank.alphas(), Prior::L1, cfg.solver);
    r.b = sol.b;
    r.gap = sol.gap;
    r.relative_gap = sol.gap / (1.0 + std::abs(sol.primal_value));
    r.iterations = sol.iterations;
    r.converged = sol.converged;
    r.components = sol.components;
  }
  for (std::size_t i = 0; i < r.components.size(); ++i) r.filters[i].b_norm = norm2(r.components[i]);

  r.u = u0;
  r.u -= r.b;
  if (cfg.multiplicative) r.u = detail::exp_image(r.u);
  r.hash = fnv1a(r.u);

  if (!cfg.reference.empty()) {
    const ImageGrid ref = io::read_image(cfg.reference);
    r.snr_input = snr_db(input, ref);
    r.snr_output = snr_db(r.u, ref);
  }

  detail::prepare_output(cfg);
  detail::write_named(cfg, "denoised", r.u);
  detail::write_named(cfg, cfg.multiplicative ? "noise_log" : "noise", r.b);
  if (cfg.multiplicative) detail::write_named(cfg, "noise_factor", detail::exp_image(r.b));
  for (std::size_t i = 0; i < r.components.size(); ++i)
    detail::write_named(cfg, "noise_" + std::to_string(i), r.components[i]);

  CsvTable t({"filter", "eta", "alpha", "sqrt_n_bound_paper", "sqrt_n_bound_tight", "b_norm"});
  for (std::size_t i = 0; i < r.filters.size(); ++i) {
    const auto& f = r.filters[i];
    t.add({std::to_string(i), f.eta ? fmt(*f.eta) : "", fmt(f.alpha), fmt(f.bound_paper), fmt(f.bound_tight),
           fmt(f.b_norm)});
  }
  t.write(detail::out_path(cfg, cfg.report.empty() ? "denoise.csv" : cfg.report));

  Report rep;
  rep.set("command", "denoise");
  rep.set("shape", shape.to_string());
  rep.set("prior", cfg.prior == Prior::L2 ? "l2" : "l1");
  rep.set("multiplicative", cfg.multiplicative ? "true" : "false");
  rep.set("iterations", std::to_string(r.iterations));
  rep.set("gap", r.gap);
  rep.set("relative_gap", r.relative_gap);
  rep.set("converged", r.converged ? "true" : "false");
  rep.set("b_norm", norm2(r.b));
  rep.set("u0_norm", norm2(u0));
  rep.set("output_hash_fnv1a", hex64(r.hash));
  rep.set("snr_definition", kSnrDefinition);
  if (r.snr_input) {
    rep.set("snr_input_db", *r.snr_input);
    rep.set("snr_output_db", *r.snr_output);
  }
  for (std::size_t i = 0; i < r.filters.size(); ++i) {
    const auto& f = r.filters[i];
    rep.section("filter." + std::to_string(i));
    if (f.eta) rep.set("eta", *f.eta);
    rep.set("alpha", f.alpha);
    rep.set("sqrt_n_bound_paper", f.bound_paper);
    rep.set("sqrt_n_bound_tight", f.bound_tight);
    rep.set("predicted_b_norm", std::min(f.bound_paper / f.alpha, norm2(remove_mean(u0))));
    rep.set("b_norm", f.b_norm);
  }
  rep.write(detail::out_path(cfg, "report.txt"), cfg);
  return r;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateResult {
  ImageGrid clean;
  ImageGrid noisy;
  ImageGrid noise;  // additive b (log-domain noise in multiplicative mode)
  std::vector<ImageGrid> lambdas;
  double noise_fraction = 0.0;  // ||b|| / ||u0|| in the working domain
  std::uint64_t hash = 0;
};

/// u0 = u + sum_i psi_i * lambda_i (or u exp(sum_i ...) when multiplicative).
/// Filter i draws from the stream seeded with seed + i.
inline SimulateResult cmd_simulate(const RunConfig& cfg) {
  validate(cfg);
  SimulateResult r;
  r.clean = cfg.input.empty() ? phantom(Shape(cfg.simulate.shape)) : io::read_image(cfg.input);
  const Shape& shape = r.clean.shape();
  const std::vector<ImageGrid> psis = detail::build_filters(cfg, shape);
  const Marginal m = build_marginal(cfg.simulate);

  r.noise = ImageGrid(shape);
  for (std::size_t i = 0; i < psis.size(); ++i) {
    StationarySample s = sample_stationary(m, psis[i], cfg.seed + i);
    r.noise += s.b;
    r.lambdas.push_back(std::move(s.lambda));
  }
  const ImageGrid base = cfg.multiplicative ? detail::log_image(r.clean) : r.clean;
  if (cfg.simulate.noise_fraction) {
    const double bn = norm2(r.noise);
    if (bn > 0.0) {
      const double scale = *cfg.simulate.noise_fraction * norm2(base) / bn;
      r.noise *= scale;
      for (auto& l : r.lambdas) l *= scale;
    }
  }
  r.noisy = base;
  r.noisy += r.noise;
  r.noise_fraction = norm2(r.noisy) > 0.0 ? norm2(r.noise) / norm2(r.noisy) : 0.0;
  if (cfg.multiplicative) r.noisy = detail::exp_image(r.noisy);
  r.hash = fnv1a(r.noisy);

  detail::prepare_output(cfg);
  detail::write_named(cfg, "clean", r.clean);
  detail::write_named(cfg, "noisy", r.noisy);
  detail::write_named(cfg, "noise", r.noise);

  Report rep;
  rep.set("command", "simulate");
  rep.set("shape", shape.to_string());
  rep.set("seed", std::to_string(cfg.seed));
  rep.set("marginal", cfg.simulate.marginal);
  rep.set("gamma", cfg.simulate.gamma);
  for (std::size_t i = 0; i < cfg.filters.size(); ++i)
    if (!cfg.filters[i].sigmas.empty()) rep.set("sigmas." + std::to_string(i), detail::join(cfg.filters[i].sigmas));
  rep.set("noise_fraction_achieved", r.noise_fraction);
  rep.set("noise_norm", norm2(r.noise));
  rep.set("output_hash_fnv1a", hex64(r.hash));
  rep.write(detail::out_path(cfg, "report.txt"), cfg);
  return r;
}

// ---------------------------------------------------------------------------
// bounds

struct BoundsCell {
  double gamma = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double coefficient = 0.0;  // 0.56 rho / sigma^3
  double ratio_f = 0.0;      // ||psi||_3^3 / ||psi||_2^3 on a converged grid
  double bound = 0.0;        // min(1, coefficient ratio_f)
  double closed_form = 0.0;  // min(1, coefficient g(sigma1) g(sigma2))
};

struct BoundsFilterRow {
  double bound_paper = 0.0;  // sqrt(n) ||h_hat||_inf
  double bound_tight = 0.0;
  std::vector<std::pair<double, double>> eta_alpha;
};

struct BoundsResult {
  std::vector<BoundsCell> cells;  // row-major over (gamma, sigma1)
  std::vector<BoundsFilterRow> filters;
};

/// Gaussianity bound over the (gamma, sigma1) grid at fixed sigma2 for a
/// Bernoulli-uniform marginal, plus the operator-norm bounds of each filter.
inline BoundsResult cmd_bounds(const RunConfig& cfg) {
  validate(cfg);
  BoundsResult r;
  const double s2 = cfg.bounds.sigma2;
  const bool variance = cfg.bounds.sigma_convention == "variance";
  auto width = [variance](double s) { return variance ? std::sqrt(s) : s; };
  std::vector<double> ratio;
  for (double s1 : cfg.bounds.sigma1) {
    const std::vector<double> sig{width(s1), width(s2)};
    ratio.push_back(sample_grid_converged(kernel::GaussianAnisotropic{sig, 1.0}, gaussian_support_shape(sig)).ratio_f);
  }
  for (double g : cfg.bounds.gammas) {
    const double coef = berry_esseen_coefficient(marginal::BernoulliUniform{g});
    for (std::size_t j = 0; j < cfg.bounds.sigma1.size(); ++j) {
      BoundsCell c;
      c.gamma = g;
      c.sigma1 = cfg.bounds.sigma1[j];
      c.sigma2 = s2;
      c.coefficient = coef;
      c.ratio_f = ratio[j];
      c.bound = std::min(1.0, coef * ratio[j]);
      c.closed_form = std::min(1.0, coef * gaussian_g(width(c.sigma1)) * gaussian_g(width(s2)));
      r.cells.push_back(c);
    }
  }

  detail::prepare_output(cfg);
  CsvTable t({"gamma", "sigma1", "sigma2", "coefficient", "ratio_f", "bound", "closed_form_bound"});
  for (const auto& c : r.cells)
    t.add({fmt(c.gamma), fmt(c.sigma1), fmt(c.sigma2), fmt(c.coefficient), fmt(c.ratio_f), fmt(c.bound),
           fmt(c.closed_form)});
  t.write(detail::out_path(cfg, cfg.report.empty() ? "bounds.csv" : cfg.report));

  if (!cfg.filters.empty()) {
    std::optional<ImageGrid> u0;
    if (!cfg.input.empty()) u0 = io::read_image(cfg.input);
    const Shape shape = u0 ? u0->shape() : Shape(cfg.simulate.shape);
    const auto psis = detail::build_filters(cfg, shape);
    const double sn = std::sqrt(static_cast<double>(shape.size()));
    CsvTable ft({"filter", "sqrt_n_bound_paper", "sqrt_n_bound_tight", "eta", "alpha"});
    for (std::size_t i = 0; i < psis.size(); ++i) {
      const HFilters hf = compute_h_filters(psis[i]);
      BoundsFilterRow row{sn * hf.bound_paper, sn * hf.bound_tight, {}};
      if (u0) {
        for (double eta : cfg.bounds.etas) {
          const double a = alpha_for_target(*u0, psis[i], eta).alpha;
          row.eta_alpha.emplace_back(eta, a);
          ft.add({std::to_string(i), fmt(row.bound_paper), fmt(row.bound_tight), fmt(eta), fmt(a)});
        }
      } else {
        ft.add({std::to_string(i), fmt(row.bound_paper), fmt(row.bound_tight), "", ""});
      }
      r.filters.push_back(std::move(row));
    }
    ft.write(detail::out_path(cfg, "bounds_filters.csv"));
  }

  Report rep;
  rep.set("command", "bounds");
  rep.set("marginal", "bernoulli-uniform");
  rep.set("sigma_convention", cfg.bounds.sigma_convention);
  rep.set("berry_esseen_constant", kBerryEsseenConstant);
  rep.set("kernel_grid_tolerance", kGridConvergenceTolerance);
  rep.write(detail::out_path(cfg, "report.txt"), cfg);
  return r;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
  double alpha = 0.0;
  double b_norm = 0.0;
  double upper_paper = 0.0;  // min(sqrt(n) bound_paper / alpha, cap)
  double upper_tight = 0.0;  // min(sqrt(n) bound_tight / alpha, cap)
  double cap = 0.0;
  std::optional<double> lower;
  double ratio = 0.0;        // upper_tight / b_norm
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<double> snr;
};

struct SearchEval {
  double alpha = 0.0;
  double snr = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SearchEval> search;
  std::optional<double> best_alpha, best_snr;
  double alpha_min = 0.0, alpha_max = 0.0;
  bool all_converged = true;
};

/// alpha at which sqrt(n) bound_paper / alpha equals ||u0 - mean u0||.
inline double cap_crossing_alpha(const ImageGrid& u0, const ImageGrid& psi) {
  const double cap = norm2(remove_mean(u0));
  if (cap == 0.0) throw InvalidArgument("image is constant; no alpha scale to sweep");
  return std::sqrt(static_cast<double>(u0.size())) * compute_h_filters(psi).bound_paper / cap;
}

/// One solve per log-spaced alpha, then (with a reference image) a
/// golden-section search on log alpha for the SNR-optimal value.
inline SweepResult cmd_sweep(const RunConfig& cfg) {
  validate(cfg);
  if (cfg.filters.size() != 1) throw ConfigError("sweep needs exactly one [filter]");
  const ImageGrid u0 = detail::require_input(cfg);
  const ImageGrid psi = build_kernel(cfg.filters.front(), u0.shape());
  std::optional<ImageGrid> ref;
  if (!cfg.reference.empty()) ref = io::read_image(cfg.reference);

  SweepResult r;
  const double ac = cap_crossing_alpha(u0, psi);
  r.alpha_min = cfg.sweep.alpha_min.value_or(1e-2 * ac);
  r.alpha_max = cfg.sweep.alpha_max.value_or(1e4 * ac);
  if (!(r.alpha_max > r.alpha_min)) throw ConfigError("sweep: alpha_max must exceed alpha_min");

  const HFilters hf = compute_h_filters(psi);
  const double sn = std::sqrt(static_cast<double>(u0.size()));
  const double cap = norm2(remove_mean(u0));

  auto run = [&](double alpha) { return solve(Problem{u0, psi, alpha, cfg.prior}, cfg.solver); };

  const int n = cfg.sweep.points;
  for (int k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n - 1);
    const double alpha = std::exp(std::log(r.alpha_min) + t * (std::log(r.alpha_max) - std::log(r.alpha_min)));
    const Solution s = run(alpha);
    SweepRow row;
    row.alpha = alpha;
    row.b_norm = norm2(s.b);
    row.cap = cap;
    row.upper_paper = std::min(sn * hf.bound_paper / alpha, cap);
    row.upper_tight = std::min(sn * hf.bound_tight / alpha, cap);
    try {
      const LowerBound lb = lower_bound(u0, psi, alpha);
      if (lb.applicable) row.lower = lb.bound;
    } catch (const RankDeficient&) {
    }
    row.ratio = row.b_norm > 0.0 ? row.upper_tight / row.b_norm : std::numeric_limits<double>::infinity();
    row.gap = s.gap;
    row.iterations = s.iterations;
    row.converged = s.converged;
    r.all_converged = r.all_converged && s.converged;
    if (ref) row.snr = snr_db(s.u, *ref);
    r.rows.push_back(row);
  }

  if (ref) {
    auto eval = [&](double log_alpha) {
      const Solution s = run(std::exp(log_alpha));
      r.all_converged = r.all_converged && s.converged;
      const double v = snr_db(s.u, *ref);
      r.search.push_back({std::exp(log_alpha), v});
      if (!r.best_snr || v > *r.best_snr) {
        r.best_snr = v;
        r.best_alpha = std::exp(log_alpha);
      }
      return v;
    };
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = std::log(r.alpha_min), hi = std::log(r.alpha_max);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = eval(x1), f2 = eval(x2);
    while (static_cast<int>(r.search.size()) < cfg.sweep.evaluations) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = eval(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = eval(x1);
      }
    }
  }

  detail::prepare_output(cfg);
  CsvTable t({"alpha", "b_norm", "upper_bound_paper", "upper_bound_tight", "cap", "lower_bound", "ratio", "gap",
              "iterations", "converged", "snr_db"});
  for (const auto& row : r.rows)
    t.add({fmt(row.alpha), fmt(row.b_norm), fmt(row.upper_paper), fmt(row.upper_tight), fmt(row.cap),
           row.lower ? fmt(*row.lower) : "", fmt(row.ratio), fmt(row.gap), std::to_string(row.iterations),
           row.converged ? "1" : "0", row.snr ? fmt(*row.snr) : ""});
  t.write(detail::out_path(cfg, cfg.report.empty() ? "sweep.csv" : cfg.report));
  if (ref) {
    CsvTable s({"evaluation", "alpha", "snr_db"});
    for (std::size_t i = 0; i < r.search.size(); ++i)
      s.add({std::to_string(i), fmt(r.search[i].alpha), fmt(r.search[i].snr)});
    s.write(detail::out_path(cfg, "dichotomy.csv"));
  }

  Report rep;
  rep.set("command", "sweep");
  rep.set("prior", cfg.prior == Prior::L2 ? "l2" : "l1");
  rep.set("alpha_min", r.alpha_min);
  rep.set("alpha_max", r.alpha_max);
  rep.set("sqrt_n_bound_paper", sn * hf.bound_paper);
  rep.set("sqrt_n_bound_tight", sn * hf.bound_tight);
  rep.set("cap", cap);
  rep.set("all_converged", r.all_converged ? "true" : "false");
  rep.set("snr_definition", kSnrDefinition);
  rep.set("psnr_definition", kPsnrDefinition);
  if (r.best_alpha) {
    rep.set("best_alpha", *r.best_alpha);
    rep.set("best_snr_db", *r.best_snr);
  }
  rep.write(detail::out_path(cfg, "report.txt"), cfg);
  return r;
}

}  // namespace stripefree
