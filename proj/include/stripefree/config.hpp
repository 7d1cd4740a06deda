#pragma once

// Run configuration: plain text, one `key = value` per line, '#' starts a
// comment. Top-level keys come first; `[filter]` opens a new filter entry
// and may repeat; `[solver]`, `[simulate]`, `[bounds]` and `[sweep]` hold
// command-specific settings. Unknown sections and keys are errors.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stripefree/errors.hpp"
#include "stripefree/io.hpp"
#include "stripefree/kernels.hpp"
#include "stripefree/noise.hpp"
#include "stripefree/solver.hpp"

namespace stripefree {

struct FilterConfig {
  std::string kernel = "gaussian";  // dirac | gaussian | box | power | line | file
  std::vector<double> sigmas;       // gaussian
  std::vector<std::size_t> half_extents;  // box
  double exponent = -0.5;           // power
  double cutoff = 1.0;              // power
  double length = 4.0;              // line: exp(-|x_last| / length) on the line x_1 = ... = 0
  double amplitude = 1.0;
  std::string path;                 // file
  std::optional<double> eta;
  std::optional<double> alpha;
};

struct SimulateConfig {
  std::vector<std::size_t> shape{64, 64};
  std::string marginal = "bernoulli-uniform";  // gaussian | uniform | bernoulli-uniform
  double gamma = 1.0;
  double sigma = 1.0;
  double half_width = 1.0;
  /// When set, b is rescaled so that ||b|| = noise_fraction ||u||.
  std::optional<double> noise_fraction;
};

struct BoundsConfig {
  std::vector<double> gammas{0.001, 0.01, 0.1, 1.0};
  std::vector<double> sigma1{2, 8, 32, 64, 128};
  double sigma2 = 2.0;
  // Table sigmas are variances of exp(-x^2 / (2 sigma)) by default; that
  // reading reproduces the published grid. "stddev" uses exp(-x^2 / (2 sigma^2)).
  std::string sigma_convention = "variance";
  std::vector<double> etas{0.05, 0.1, 0.3};
};

struct SweepConfig {
  std::optional<double> alpha_min;  // default: 1e-2 times the alpha where the bound meets the cap
  std::optional<double> alpha_max;  // default: 1e4 times that alpha
  int points = 24;                  // 0 skips the grid (search only)
  int evaluations = 30;             // golden-section budget when a reference is given
};

struct RunConfig {
  std::string command;
  std::string input;       // noisy image (denoise, sweep) or clean image (simulate)
  std::string reference;   // ground truth, optional
  std::string output_dir = ".";
  std::string report;      // main CSV name; empty picks a per-command default
  std::string format = "raw";  // raw | pfm | pgm, for written images
  std::uint64_t seed = 0;
  bool multiplicative = false;
  Prior prior = Prior::L2;
  SolverConfig solver;
  std::vector<FilterConfig> filters;
  SimulateConfig simulate;
  BoundsConfig bounds;
  SweepConfig sweep;
};

inline RunConfig default_run_config() {
  RunConfig c;
  c.solver.gap_tolerance = 1e-5;
  c.solver.max_iterations = 100000;
  return c;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& v, const std::string& key) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

inline long long to_integer(const std::string& v, const std::string& key) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

inline bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<double> to_doubles(const std::string& v, const std::string& key) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(s, key));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

inline std::vector<std::size_t> to_sizes(const std::string& v, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& s : split_list(v)) {
    const long long n = to_integer(s, key);
    if (n < 0) throw ConfigError(key + ": entries must be nonnegative");
    out.push_back(static_cast<std::size_t>(n));
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream ss;
  ss.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) ss << (i ? ", " : "") << v[i];
  return ss.str();
}

inline std::string num(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

inline void set_top(RunConfig& c, const std::string& k, const std::string& v) {
  if (k == "command") c.command = v;
  else if (k == "input") c.input = v;
  else if (k == "reference") c.reference = v;
  else if (k == "output_dir") c.output_dir = v;
  else if (k == "report") c.report = v;
  else if (k == "format") {
    if (v != "raw" && v != "pfm" && v != "pgm") throw ConfigError("format must be raw, pfm or pgm");
    c.format = v;
  }
  else if (k == "seed") {
    const long long s = to_integer(v, k);
    if (s < 0) throw ConfigError("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (k == "multiplicative") c.multiplicative = to_bool(v, k);
  else if (k == "prior") {
    if (v == "l2") c.prior = Prior::L2;
    else if (v == "l1") c.prior = Prior::L1;
    else throw ConfigError("prior must be l1 or l2");
  } else throw ConfigError("unknown key '" + k + "'");
}

inline void set_solver(SolverConfig& s, const std::string& k, const std::string& v) {
  const std::string key = "solver." + k;
  if (k == "gap_tolerance") s.gap_tolerance = to_double(v, key);
  else if (k == "max_iterations") s.max_iterations = static_cast<int>(to_integer(v, key));
  else if (k == "accelerate") s.accelerate = to_bool(v, key);
  else if (k == "step_ratio") s.step_ratio = to_double(v, key);
  else if (k == "restart_factor") s.restart_factor = to_double(v, key);
  else throw ConfigError("unknown key '" + key + "'");
}

inline void set_filter(FilterConfig& f, const std::string& k, const std::string& v) {
  const std::string key = "filter." + k;
  if (k == "kernel") {
    if (v != "dirac" && v != "gaussian" && v != "box" && v != "power" && v != "line" && v != "file")
      throw ConfigError(key + ": unknown kernel '" + v + "'");
    f.kernel = v;
  } else if (k == "sigmas") f.sigmas = to_doubles(v, key);
  else if (k == "half_extents") f.half_extents = to_sizes(v, key);
  else if (k == "exponent") f.exponent = to_double(v, key);
  else if (k == "cutoff") f.cutoff = to_double(v, key);
  else if (k == "length") f.length = to_double(v, key);
  else if (k == "amplitude") f.amplitude = to_double(v, key);
  else if (k == "path") f.path = v;
  else if (k == "eta") f.eta = to_double(v, key);
  else if (k == "alpha") f.alpha = to_double(v, key);
  else throw ConfigError("unknown key '" + key + "'");
}

inline void set_simulate(SimulateConfig& s, const std::string& k, const std::string& v) {
  const std::string key = "simulate." + k;
  if (k == "shape") s.shape = to_sizes(v, key);
  else if (k == "marginal") {
    if (v != "gaussian" && v != "uniform" && v != "bernoulli-uniform")
      throw ConfigError(key + ": unknown marginal '" + v + "'");
    s.marginal = v;
  } else if (k == "gamma") s.gamma = to_double(v, key);
  else if (k == "sigma") s.sigma = to_double(v, key);
  else if (k == "half_width") s.half_width = to_double(v, key);
  else if (k == "noise_fraction") s.noise_fraction = to_double(v, key);
  else throw ConfigError("unknown key '" + key + "'");
}

inline void set_bounds(BoundsConfig& b, const std::string& k, const std::string& v) {
  const std::string key = "bounds." + k;
  if (k == "gammas") b.gammas = to_doubles(v, key);
  else if (k == "sigma1") b.sigma1 = to_doubles(v, key);
  else if (k == "sigma2") b.sigma2 = to_double(v, key);
  else if (k == "sigma_convention") {
    if (v != "variance" && v != "stddev") throw ConfigError(key + ": expected variance or stddev");
    b.sigma_convention = v;
  }
  else if (k == "etas") b.etas = to_doubles(v, key);
  else throw ConfigError("unknown key '" + key + "'");
}

inline void set_sweep(SweepConfig& s, const std::string& k, const std::string& v) {
  const std::string key = "sweep." + k;
  if (k == "alpha_min") s.alpha_min = to_double(v, key);
  else if (k == "alpha_max") s.alpha_max = to_double(v, key);
  else if (k == "points") s.points = static_cast<int>(to_integer(v, key));
  else if (k == "evaluations") s.evaluations = static_cast<int>(to_integer(v, key));
  else throw ConfigError("unknown key '" + key + "'");
}

}  // namespace detail

/// Checks cross-field constraints. Throws ConfigError.
inline void validate(const RunConfig& c) {
  try {
    c.solver.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  for (std::size_t i = 0; i < c.filters.size(); ++i) {
    const FilterConfig& f = c.filters[i];
    const std::string where = "filter " + std::to_string(i) + ": ";
    if (f.eta && f.alpha) throw ConfigError(where + "give eta or alpha, not both");
    if (f.eta && !(*f.eta > 0.0 && *f.eta < 1.0)) throw ConfigError(where + "eta must lie in (0, 1)");
    if (f.alpha && !(*f.alpha > 0.0)) throw ConfigError(where + "alpha must be > 0");
    if (f.kernel == "gaussian" && f.sigmas.empty()) throw ConfigError(where + "gaussian kernel needs sigmas");
    if (f.kernel == "box" && f.half_extents.empty()) throw ConfigError(where + "box kernel needs half_extents");
    if (f.kernel == "file" && f.path.empty()) throw ConfigError(where + "file kernel needs path");
    if (f.kernel == "line" && !(f.length > 0.0)) throw ConfigError(where + "line length must be > 0");
  }
  const auto& s = c.simulate;
  if (s.shape.empty() || s.shape.size() > kMaxRank) throw ConfigError("simulate.shape must have 1 to 3 extents");
  for (auto e : s.shape)
    if (e == 0) throw ConfigError("simulate.shape extents must be >= 1");
  if (!(s.gamma > 0.0 && s.gamma <= 1.0)) throw ConfigError("simulate.gamma must lie in (0, 1]");
  if (!(s.sigma > 0.0)) throw ConfigError("simulate.sigma must be > 0");
  if (!(s.half_width > 0.0)) throw ConfigError("simulate.half_width must be > 0");
  if (s.noise_fraction && !(*s.noise_fraction >= 0.0)) throw ConfigError("simulate.noise_fraction must be >= 0");
  for (double g : c.bounds.gammas)
    if (!(g > 0.0 && g <= 1.0)) throw ConfigError("bounds.gammas must lie in (0, 1]");
  for (double v : c.bounds.sigma1)
    if (!(v > 0.0)) throw ConfigError("bounds.sigma1 must be > 0");
  if (!(c.bounds.sigma2 > 0.0)) throw ConfigError("bounds.sigma2 must be > 0");
  for (double e : c.bounds.etas)
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("bounds.etas must lie in (0, 1)");
  if (c.sweep.points == 1 || c.sweep.points < 0) throw ConfigError("sweep.points must be 0 or >= 2");
  if (c.sweep.evaluations < 3) throw ConfigError("sweep.evaluations must be >= 3");
  if (c.sweep.alpha_min && !(*c.sweep.alpha_min > 0.0)) throw ConfigError("sweep.alpha_min must be > 0");
  if (c.sweep.alpha_min && c.sweep.alpha_max && !(*c.sweep.alpha_max > *c.sweep.alpha_min))
    throw ConfigError("sweep.alpha_max must exceed sweep.alpha_min");
}

inline RunConfig parse_config(std::istream& in) {
  RunConfig c = default_run_config();
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string at = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(at + "unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section == "filter") c.filters.emplace_back();
      else if (section != "solver" && section != "simulate" && section != "bounds" && section != "sweep")
        throw ConfigError(at + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(at + "expected key = value");
    const std::string k = detail::trim(line.substr(0, eq));
    const std::string v = detail::trim(line.substr(eq + 1));
    if (k.empty()) throw ConfigError(at + "empty key");
    try {
      if (section.empty()) detail::set_top(c, k, v);
      else if (section == "solver") detail::set_solver(c.solver, k, v);
      else if (section == "filter") detail::set_filter(c.filters.back(), k, v);
      else if (section == "simulate") detail::set_simulate(c.simulate, k, v);
      else if (section == "bounds") detail::set_bounds(c.bounds, k, v);
      else detail::set_sweep(c.sweep, k, v);
    } catch (const ConfigError& e) {
      throw ConfigError(at + e.what());
    }
  }
  validate(c);
  return c;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in);
}

/// Every field, defaults included, in the input syntax. Parsing the result
/// gives back an equal configuration.
inline std::string to_text(const RunConfig& c) {
  using detail::join;
  using detail::num;
  std::ostringstream o;
  if (!c.command.empty()) o << "command = " << c.command << "\n";
  if (!c.input.empty()) o << "input = " << c.input << "\n";
  if (!c.reference.empty()) o << "reference = " << c.reference << "\n";
  o << "output_dir = " << c.output_dir << "\n";
  if (!c.report.empty()) o << "report = " << c.report << "\n";
  o << "format = " << c.format << "\n";
  o << "seed = " << c.seed << "\n";
  o << "multiplicative = " << (c.multiplicative ? "true" : "false") << "\n";
  o << "prior = " << (c.prior == Prior::L2 ? "l2" : "l1") << "\n";
  o << "\n[solver]\n";
  o << "gap_tolerance = " << num(c.solver.gap_tolerance) << "\n";
  o << "max_iterations = " << c.solver.max_iterations << "\n";
  o << "accelerate = " << (c.solver.accelerate ? "true" : "false") << "\n";
  o << "step_ratio = " << num(c.solver.step_ratio) << "\n";
  o << "restart_factor = " << num(c.solver.restart_factor) << "\n";
  for (const auto& f : c.filters) {
    o << "\n[filter]\nkernel = " << f.kernel << "\n";
    if (!f.sigmas.empty()) o << "sigmas = " << join(f.sigmas) << "\n";
    if (!f.half_extents.empty()) o << "half_extents = " << join(f.half_extents) << "\n";
    if (f.kernel == "power") o << "exponent = " << num(f.exponent) << "\ncutoff = " << num(f.cutoff) << "\n";
    if (f.kernel == "line") o << "length = " << num(f.length) << "\n";
    if (!f.path.empty()) o << "path = " << f.path << "\n";
    o << "amplitude = " << num(f.amplitude) << "\n";
    if (f.eta) o << "eta = " << num(*f.eta) << "\n";
    if (f.alpha) o << "alpha = " << num(*f.alpha) << "\n";
  }
  const auto& s = c.simulate;
  o << "\n[simulate]\nshape = " << join(s.shape) << "\nmarginal = " << s.marginal << "\n";
  o << "gamma = " << num(s.gamma) << "\nsigma = " << num(s.sigma) << "\nhalf_width = " << num(s.half_width) << "\n";
  if (s.noise_fraction) o << "noise_fraction = " << num(*s.noise_fraction) << "\n";
  o << "\n[bounds]\ngammas = " << join(c.bounds.gammas) << "\nsigma1 = " << join(c.bounds.sigma1) << "\n";
  o << "sigma2 = " << num(c.bounds.sigma2) << "\nsigma_convention = " << c.bounds.sigma_convention << "\n";
  o << "etas = " << join(c.bounds.etas) << "\n";
  o << "\n[sweep]\n";
  if (c.sweep.alpha_min) o << "alpha_min = " << num(*c.sweep.alpha_min) << "\n";
  if (c.sweep.alpha_max) o << "alpha_max = " << num(*c.sweep.alpha_max) << "\n";
  o << "points = " << c.sweep.points << "\nevaluations = " << c.sweep.evaluations << "\n";
  return o.str();
}

/// Builds the kernel of `f` on `shape`. File kernels are read relative to
/// `base` when their path is relative.
inline ImageGrid build_kernel(const FilterConfig& f, const Shape& shape,
                              const std::filesystem::path& base = {}) {
  try {
    if (f.kernel == "dirac") return sample_kernel(kernel::Dirac{f.amplitude}, shape);
    if (f.kernel == "gaussian") return sample_kernel(kernel::GaussianAnisotropic{f.sigmas, f.amplitude}, shape);
    if (f.kernel == "box") return sample_kernel(kernel::IndicatorBox{f.half_extents, f.amplitude}, shape);
    if (f.kernel == "power")
      return sample_kernel(kernel::PowerDecay{f.exponent, f.cutoff, f.amplitude}, shape);
    if (f.kernel == "line") {
      // Exponentially decaying line along the last axis through the origin.
      ImageGrid g(shape);
      const std::size_t last = shape.rank() - 1;
      const std::size_t n = shape.extent(last);
      for (std::size_t j = 0; j < n; ++j)
        g[j] = f.amplitude * std::exp(-std::abs(static_cast<double>(centered_offset(j, n))) / f.length);
      return g;
    }
    std::filesystem::path p(f.path);
    if (p.is_relative() && !base.empty()) p = base / p;
    ImageGrid g = io::read_image(p);
    g *= f.amplitude;
    return sample_kernel(kernel::FromGrid{std::move(g)}, shape);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  } catch (const DimensionMismatch& e) {
    throw ConfigError(e.what());
  }
}

inline Marginal build_marginal(const SimulateConfig& s) {
  if (s.marginal == "gaussian") return marginal::Gaussian{s.sigma};
  if (s.marginal == "uniform") return marginal::Uniform{s.half_width};
  return marginal::BernoulliUniform{s.gamma};
}

}  // namespace stripefree
