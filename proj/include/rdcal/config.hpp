#pragma once

// Flat "key = value" run configuration ('#' starts a comment). Every key is
// optional; defaults are filled at load time and every violation is
// reported with its key name. File paths are resolved relative to the
// directory containing the config file.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rdcal/field_io.hpp"

namespace rdcal {

/// Source of one parameter or mean field.
struct FieldSpec {
  std::string kind = "constant";  // constant | file
  double value = 0.5;
  std::filesystem::path file;
};

struct RunConfig {
  std::filesystem::path base_dir;

  // grid
  std::string grid_shape = "square";  // square | disk | file
  int nx = 32, ny = 32;
  double hx = 1.0, hy = 1.0;
  double disk_radius = -1.0;  // resolved default: 0.375 * min extent
  std::filesystem::path mask_file;

  // time
  double final_time = 5.0;
  int steps = 20;

  // initial condition
  std::string ic_kind = "gaussian";  // gaussian | file
  std::filesystem::path ic_file;
  double ic_center_x = 0.0, ic_center_y = 0.0;  // resolved default: center
  double ic_width = -1.0;                       // resolved default
  double ic_amplitude = 0.5;

  // parameter fields (truth for synth/forward, base point for verify-*)
  FieldSpec param_d;
  FieldSpec param_g;

  // calibration start (defaults to the prior means)
  std::optional<FieldSpec> init_d;
  std::optional<FieldSpec> init_g;

  // regularization
  double reg_d_gamma = -1.0;  // resolved default: 0.1 * hx * hy
  double reg_d_delta = 0.1;
  FieldSpec reg_d_mean;
  double reg_g_gamma = -1.0;
  double reg_g_delta = 0.1;
  FieldSpec reg_g_mean;

  // observations
  std::vector<int> obs_steps;  // resolved default: {steps/2, steps}
  double obs_sigma = 0.05;
  std::uint64_t obs_seed = 7;
  std::filesystem::path obs_dir;  // when set, load the bundle instead

  // optimizer
  NewtonCGConfig opt;

  // finite-difference verification
  std::vector<double> fd_epsilons = default_epsilons();
  std::uint64_t fd_seed = 11;
  double fd_fit_lo = 1e-5;
  double fd_fit_hi = 1e-2;
  int fd_symmetry_pairs = 5;

  // output
  std::filesystem::path out_dir = "out";
  int dump_stride = 1;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const std::string ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

class KeyValues {
 public:
  explicit KeyValues(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      require(eq != std::string::npos,
              "config line " + std::to_string(lineno) +
                  ": expected 'key = value', got '" + line + "'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      require(!key.empty(),
              "config line " + std::to_string(lineno) + ": empty key");
      require(kv_.emplace(key, value).second,
              "config: duplicate key '" + key + "'");
    }
  }

  std::optional<std::string> take(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    std::string v = it->second;
    kv_.erase(it);
    return v;
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  void finish() const {
    if (!kv_.empty())
      throw Error("config: unknown key '" + kv_.begin()->first + "'");
  }

 private:
  std::map<std::string, std::string> kv_;
};

inline double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  require(end != nullptr && *end == '\0' && !v.empty(),
          key + ": expected a number, got '" + v + "'");
  return x;
}

inline long parse_integer(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  require(end != nullptr && *end == '\0' && !v.empty(),
          key + ": expected an integer, got '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(key + ": expected true/false, got '" + v + "'");
}

inline std::vector<std::string> split_csv(const std::string& v) {
  std::vector<std::string> parts;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

}  // namespace detail

inline RunConfig load_config(const std::filesystem::path& path) {
  require(std::filesystem::exists(path),
          "config file not found: " + path.string());
  detail::KeyValues kv(path);
  RunConfig cfg;
  cfg.base_dir = std::filesystem::absolute(path).parent_path();

  auto get_double = [&](const std::string& key, double& slot) {
    if (auto v = kv.take(key)) slot = detail::parse_double(key, *v);
  };
  auto get_int = [&](const std::string& key, int& slot) {
    if (auto v = kv.take(key)) {
      slot = static_cast<int>(detail::parse_integer(key, *v));
    }
  };
  auto get_seed = [&](const std::string& key, std::uint64_t& slot) {
    if (auto v = kv.take(key)) {
      const long s = detail::parse_integer(key, *v);
      require(s >= 0, key + ": seed must be nonnegative");
      slot = static_cast<std::uint64_t>(s);
    }
  };
  auto get_bool = [&](const std::string& key, bool& slot) {
    if (auto v = kv.take(key)) slot = detail::parse_bool(key, *v);
  };
  auto get_string = [&](const std::string& key, std::string& slot) {
    if (auto v = kv.take(key)) slot = *v;
  };
  auto get_path = [&](const std::string& key, std::filesystem::path& slot) {
    if (auto v = kv.take(key)) {
      require(!v->empty(), key + ": empty path");
      std::filesystem::path p = *v;
      slot = p.is_absolute() ? p : cfg.base_dir / p;
    }
  };
  auto require_file = [&](const std::string& key,
                          const std::filesystem::path& p) {
    require(std::filesystem::exists(p),
            key + ": referenced file does not exist: " + p.string());
  };
  auto get_field_spec = [&](const std::string& prefix, FieldSpec& spec) {
    get_string(prefix + ".kind", spec.kind);
    require(spec.kind == "constant" || spec.kind == "file",
            prefix + ".kind: must be 'constant' or 'file'");
    get_double(prefix + ".value", spec.value);
    get_path(prefix + ".file", spec.file);
    if (spec.kind == "file") {
      require(!spec.file.empty(),
              prefix + ".file: required when " + prefix + ".kind = file");
      require_file(prefix + ".file", spec.file);
    }
  };

  // grid
  get_string("grid.shape", cfg.grid_shape);
  require(cfg.grid_shape == "square" || cfg.grid_shape == "disk" ||
              cfg.grid_shape == "file",
          "grid.shape: must be 'square', 'disk', or 'file'");
  if (cfg.grid_shape == "file") {
    require(!kv.has("grid.nx") && !kv.has("grid.ny") && !kv.has("grid.hx") &&
                !kv.has("grid.hy"),
            "grid.nx/ny/hx/hy: not allowed when grid.shape = file");
    get_path("grid.mask_file", cfg.mask_file);
    require(!cfg.mask_file.empty(),
            "grid.mask_file: required when grid.shape = file");
    require_file("grid.mask_file", cfg.mask_file);
    const RawField header = read_raw_field(cfg.mask_file);
    cfg.nx = header.nx;
    cfg.ny = header.ny;
    cfg.hx = header.hx;
    cfg.hy = header.hy;
  } else {
    get_int("grid.nx", cfg.nx);
    get_int("grid.ny", cfg.ny);
    get_double("grid.hx", cfg.hx);
    get_double("grid.hy", cfg.hy);
  }
  require(cfg.nx >= 1 && cfg.ny >= 1, "grid.nx/grid.ny: must be at least 1");
  require(cfg.hx > 0.0 && cfg.hy > 0.0, "grid.hx/grid.hy: must be positive");
  get_double("grid.disk_radius", cfg.disk_radius);
  const double extent = std::min(cfg.nx * cfg.hx, cfg.ny * cfg.hy);
  if (cfg.disk_radius < 0.0) cfg.disk_radius = 0.375 * extent;
  require(cfg.disk_radius > 0.0, "grid.disk_radius: must be positive");

  // time
  get_double("time.final", cfg.final_time);
  get_int("time.steps", cfg.steps);
  require(cfg.final_time > 0.0, "time.final: must be positive");
  require(cfg.steps >= 1, "time.steps: must be at least 1");

  // initial condition
  get_string("ic.kind", cfg.ic_kind);
  require(cfg.ic_kind == "gaussian" || cfg.ic_kind == "file",
          "ic.kind: must be 'gaussian' or 'file'");
  cfg.ic_center_x = 0.5 * cfg.nx * cfg.hx;
  cfg.ic_center_y = 0.5 * cfg.ny * cfg.hy;
  get_double("ic.center_x", cfg.ic_center_x);
  get_double("ic.center_y", cfg.ic_center_y);
  get_double("ic.width", cfg.ic_width);
  if (cfg.ic_width < 0.0) cfg.ic_width = 0.1 * extent;
  require(cfg.ic_width > 0.0, "ic.width: must be positive");
  get_double("ic.amplitude", cfg.ic_amplitude);
  require(cfg.ic_amplitude > 0.0 && cfg.ic_amplitude <= 1.0,
          "ic.amplitude: must lie in (0, 1]");
  get_path("ic.file", cfg.ic_file);
  if (cfg.ic_kind == "file") {
    require(!cfg.ic_file.empty(), "ic.file: required when ic.kind = file");
    require_file("ic.file", cfg.ic_file);
  }

  // parameters and calibration start
  get_field_spec("param.d", cfg.param_d);
  get_field_spec("param.g", cfg.param_g);
  if (kv.has("init.d.kind") || kv.has("init.d.value") ||
      kv.has("init.d.file")) {
    cfg.init_d = FieldSpec{};
    get_field_spec("init.d", *cfg.init_d);
  }
  if (kv.has("init.g.kind") || kv.has("init.g.value") ||
      kv.has("init.g.file")) {
    cfg.init_g = FieldSpec{};
    get_field_spec("init.g", *cfg.init_g);
  }

  // regularization
  const double gamma_default = 0.1 * cfg.hx * cfg.hy;
  auto get_reg = [&](const std::string& prefix, double& gamma, double& delta,
                     FieldSpec& mean) {
    get_double(prefix + ".gamma", gamma);
    if (gamma < 0.0) gamma = gamma_default;
    require(gamma > 0.0, prefix + ".gamma: must be > 0 (the smoothing "
                         "operator requires gamma > 0 and delta >= 0)");
    get_double(prefix + ".delta", delta);
    require(delta >= 0.0, prefix + ".delta: must be >= 0 (the smoothing "
                          "operator requires gamma > 0 and delta >= 0)");
    get_field_spec(prefix + ".mean", mean);
  };
  get_reg("reg.d", cfg.reg_d_gamma, cfg.reg_d_delta, cfg.reg_d_mean);
  get_reg("reg.g", cfg.reg_g_gamma, cfg.reg_g_delta, cfg.reg_g_mean);

  // observations
  if (auto v = kv.take("obs.steps")) {
    cfg.obs_steps.clear();
    for (const std::string& item : detail::split_csv(*v)) {
      cfg.obs_steps.push_back(
          static_cast<int>(detail::parse_integer("obs.steps", item)));
    }
    require(!cfg.obs_steps.empty(), "obs.steps: empty list");
  } else {
    cfg.obs_steps = {cfg.steps / 2 > 0 ? cfg.steps / 2 : cfg.steps,
                     cfg.steps};
    if (cfg.obs_steps[0] == cfg.obs_steps[1]) cfg.obs_steps = {cfg.steps};
  }
  for (std::size_t i = 0; i < cfg.obs_steps.size(); ++i) {
    require(cfg.obs_steps[i] >= 0 && cfg.obs_steps[i] <= cfg.steps,
            "obs.steps: step out of range [0, time.steps]");
    require(i == 0 || cfg.obs_steps[i] > cfg.obs_steps[i - 1],
            "obs.steps: must be strictly increasing");
  }
  get_double("obs.sigma", cfg.obs_sigma);
  require(cfg.obs_sigma >= 0.0, "obs.sigma: must be >= 0");
  get_seed("obs.seed", cfg.obs_seed);
  get_path("obs.dir", cfg.obs_dir);
  if (!cfg.obs_dir.empty())
    require_file("obs.dir", cfg.obs_dir / "observations.txt");

  // optimizer
  get_int("opt.max_iters", cfg.opt.max_newton_iters);
  get_double("opt.grad_rtol", cfg.opt.grad_rtol);
  get_double("opt.grad_atol", cfg.opt.grad_atol);
  get_int("opt.cg_max_iters", cfg.opt.cg_max_iters);
  get_double("opt.forcing_exponent", cfg.opt.forcing_exponent);
  get_double("opt.forcing_cap", cfg.opt.forcing_cap);
  get_double("opt.armijo_c", cfg.opt.armijo_c);
  get_double("opt.backtrack_factor", cfg.opt.backtrack_factor);
  get_int("opt.max_backtracks", cfg.opt.max_backtracks);
  get_double("opt.d_floor", cfg.opt.param_floor_d);
  if (auto v = kv.take("opt.mode")) {
    if (*v == "direct") {
      cfg.opt.mode = ParamMode::direct;
    } else if (*v == "log") {
      cfg.opt.mode = ParamMode::log_reparam;
    } else {
      throw Error("opt.mode: must be 'direct' or 'log', got '" + *v + "'");
    }
  }
  get_bool("opt.gauss_newton", cfg.opt.gauss_newton);
  get_bool("opt.precondition", cfg.opt.precondition);
  try {
    cfg.opt.validate();
  } catch (const Error& err) {
    throw Error(std::string("opt.*: ") + err.what());
  }

  // finite-difference verification
  if (auto v = kv.take("fd.epsilons")) {
    cfg.fd_epsilons.clear();
    for (const std::string& item : detail::split_csv(*v)) {
      cfg.fd_epsilons.push_back(detail::parse_double("fd.epsilons", item));
    }
  }
  {
    std::vector<double> eps = cfg.fd_epsilons;
    try {
      detail::check_epsilons(eps);
    } catch (const Error& err) {
      throw Error(std::string("fd.epsilons: ") + err.what());
    }
  }
  get_seed("fd.seed", cfg.fd_seed);
  get_double("fd.fit_lo", cfg.fd_fit_lo);
  get_double("fd.fit_hi", cfg.fd_fit_hi);
  require(cfg.fd_fit_lo > 0.0 && cfg.fd_fit_hi > cfg.fd_fit_lo,
          "fd.fit_lo/fd.fit_hi: need 0 < fit_lo < fit_hi");
  get_int("fd.symmetry_pairs", cfg.fd_symmetry_pairs);
  require(cfg.fd_symmetry_pairs >= 1, "fd.symmetry_pairs: must be >= 1");

  // output
  get_path("out.dir", cfg.out_dir);
  if (cfg.out_dir.empty()) cfg.out_dir = cfg.base_dir / "out";
  if (!cfg.out_dir.is_absolute()) cfg.out_dir = cfg.base_dir / cfg.out_dir;
  get_int("out.dump_stride", cfg.dump_stride);
  require(cfg.dump_stride >= 1, "out.dump_stride: must be >= 1");

  kv.finish();
  return cfg;
}

/// Canonical serialization of the effective configuration; loading the
/// written file reproduces the same configuration.
inline std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  auto field_spec = [&](const std::string& prefix, const FieldSpec& spec) {
    out << prefix << ".kind = " << spec.kind << '\n';
    if (spec.kind == "constant") {
      out << prefix << ".value = " << format_double(spec.value) << '\n';
    } else {
      out << prefix << ".file = " << spec.file.string() << '\n';
    }
  };
  out << "grid.shape = " << cfg.grid_shape << '\n';
  if (cfg.grid_shape == "file") {
    out << "grid.mask_file = " << cfg.mask_file.string() << '\n';
  } else {
    out << "grid.nx = " << cfg.nx << '\n';
    out << "grid.ny = " << cfg.ny << '\n';
    out << "grid.hx = " << format_double(cfg.hx) << '\n';
    out << "grid.hy = " << format_double(cfg.hy) << '\n';
  }
  out << "grid.disk_radius = " << format_double(cfg.disk_radius) << '\n';
  out << "time.final = " << format_double(cfg.final_time) << '\n';
  out << "time.steps = " << cfg.steps << '\n';
  out << "ic.kind = " << cfg.ic_kind << '\n';
  if (cfg.ic_kind == "file") {
    out << "ic.file = " << cfg.ic_file.string() << '\n';
  } else {
    out << "ic.center_x = " << format_double(cfg.ic_center_x) << '\n';
    out << "ic.center_y = " << format_double(cfg.ic_center_y) << '\n';
    out << "ic.width = " << format_double(cfg.ic_width) << '\n';
    out << "ic.amplitude = " << format_double(cfg.ic_amplitude) << '\n';
  }
  field_spec("param.d", cfg.param_d);
  field_spec("param.g", cfg.param_g);
  if (cfg.init_d) field_spec("init.d", *cfg.init_d);
  if (cfg.init_g) field_spec("init.g", *cfg.init_g);
  out << "reg.d.gamma = " << format_double(cfg.reg_d_gamma) << '\n';
  out << "reg.d.delta = " << format_double(cfg.reg_d_delta) << '\n';
  field_spec("reg.d.mean", cfg.reg_d_mean);
  out << "reg.g.gamma = " << format_double(cfg.reg_g_gamma) << '\n';
  out << "reg.g.delta = " << format_double(cfg.reg_g_delta) << '\n';
  field_spec("reg.g.mean", cfg.reg_g_mean);
  out << "obs.steps = ";
  for (std::size_t i = 0; i < cfg.obs_steps.size(); ++i) {
    if (i > 0) out << ',';
    out << cfg.obs_steps[i];
  }
  out << '\n';
  out << "obs.sigma = " << format_double(cfg.obs_sigma) << '\n';
  out << "obs.seed = " << cfg.obs_seed << '\n';
  if (!cfg.obs_dir.empty())
    out << "obs.dir = " << cfg.obs_dir.string() << '\n';
  out << "opt.max_iters = " << cfg.opt.max_newton_iters << '\n';
  out << "opt.grad_rtol = " << format_double(cfg.opt.grad_rtol) << '\n';
  out << "opt.grad_atol = " << format_double(cfg.opt.grad_atol) << '\n';
  out << "opt.cg_max_iters = " << cfg.opt.cg_max_iters << '\n';
  out << "opt.forcing_exponent = " << format_double(cfg.opt.forcing_exponent)
      << '\n';
  out << "opt.forcing_cap = " << format_double(cfg.opt.forcing_cap) << '\n';
  out << "opt.armijo_c = " << format_double(cfg.opt.armijo_c) << '\n';
  out << "opt.backtrack_factor = " << format_double(cfg.opt.backtrack_factor)
      << '\n';
  out << "opt.max_backtracks = " << cfg.opt.max_backtracks << '\n';
  out << "opt.d_floor = " << format_double(cfg.opt.param_floor_d) << '\n';
  out << "opt.mode = "
      << (cfg.opt.mode == ParamMode::direct ? "direct" : "log") << '\n';
  out << "opt.gauss_newton = " << (cfg.opt.gauss_newton ? "true" : "false")
      << '\n';
  out << "opt.precondition = " << (cfg.opt.precondition ? "true" : "false")
      << '\n';
  out << "fd.epsilons = ";
  for (std::size_t i = 0; i < cfg.fd_epsilons.size(); ++i) {
    if (i > 0) out << ',';
    out << format_double(cfg.fd_epsilons[i]);
  }
  out << '\n';
  out << "fd.seed = " << cfg.fd_seed << '\n';
  out << "fd.fit_lo = " << format_double(cfg.fd_fit_lo) << '\n';
  out << "fd.fit_hi = " << format_double(cfg.fd_fit_hi) << '\n';
  out << "fd.symmetry_pairs = " << cfg.fd_symmetry_pairs << '\n';
  out << "out.dir = " << cfg.out_dir.string() << '\n';
  out << "out.dump_stride = " << cfg.dump_stride << '\n';
  return out.str();
}

inline void write_config(const RunConfig& cfg,
                         const std::filesystem::path& path) {
  std::ofstream out = detail::open_out(path);
  out << serialize_config(cfg);
  require(out.good(), "write failed: " + path.string());
}

}  // namespace rdcal
