#pragma once

// On-disk formats. A field file is one header line "nx ny hx hy" followed
// by nx*ny whitespace-separated values in row-major order, with NaN marking
// inactive cells; a mask file has the same layout with 0/1 entries. All
// numbers are printed with enough digits to round-trip exactly.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "rdcal/observation.hpp"
#include "rdcal/optimizer.hpp"
#include "rdcal/verify.hpp"

namespace rdcal {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open for reading: " + path.string());
  return in;
}

/// Next whitespace-separated token parsed as a double (strtod rules, so
/// "nan" and "inf" are understood).
inline double next_double(std::ifstream& in,
                          const std::filesystem::path& path) {
  std::string token;
  require(static_cast<bool>(in >> token),
          "unexpected end of file in " + path.string());
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  require(end != nullptr && *end == '\0',
          "malformed number '" + token + "' in " + path.string());
  return v;
}

inline long next_integer(std::ifstream& in,
                         const std::filesystem::path& path) {
  std::string token;
  require(static_cast<bool>(in >> token),
          "unexpected end of file in " + path.string());
  char* end = nullptr;
  const long v = std::strtol(token.c_str(), &end, 10);
  require(end != nullptr && *end == '\0',
          "malformed integer '" + token + "' in " + path.string());
  return v;
}

}  // namespace detail

struct RawField {
  int nx = 0, ny = 0;
  double hx = 0.0, hy = 0.0;
  std::vector<double> values;  // row-major, NaN marks inactive cells
};

inline RawField read_raw_field(const std::filesystem::path& path) {
  std::ifstream in = detail::open_in(path);
  RawField raw;
  raw.nx = static_cast<int>(detail::next_integer(in, path));
  raw.ny = static_cast<int>(detail::next_integer(in, path));
  require(raw.nx >= 1 && raw.ny >= 1,
          "invalid grid dimensions in " + path.string());
  raw.hx = detail::next_double(in, path);
  raw.hy = detail::next_double(in, path);
  raw.values.resize(static_cast<std::size_t>(raw.nx) * raw.ny);
  for (double& v : raw.values) v = detail::next_double(in, path);
  return raw;
}

inline void write_field(const std::filesystem::path& path,
                        const ScalarField& field) {
  const Grid2D& g = *field.grid();
  std::ofstream out = detail::open_out(path);
  out << g.nx() << ' ' << g.ny() << ' ' << format_double(g.hx()) << ' '
      << format_double(g.hy()) << '\n';
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (i > 0) out << ' ';
      const int k = g.active_index(i, j);
      out << (k >= 0 ? format_double(field[k]) : "nan");
    }
    out << '\n';
  }
  require(out.good(), "write failed: " + path.string());
}

/// Bind a raw field to an existing grid. Dimensions and spacing must match;
/// active cells must carry finite values and inactive cells NaN.
inline ScalarField field_on_grid(const GridPtr& grid, const RawField& raw,
                                 const std::string& what) {
  const Grid2D& g = *grid;
  require(raw.nx == g.nx() && raw.ny == g.ny(),
          what + ": grid dimensions do not match");
  const auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
  };
  require(close(raw.hx, g.hx()) && close(raw.hy, g.hy()),
          what + ": cell spacing does not match");
  ScalarField field(grid);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double v = raw.values[static_cast<std::size_t>(j) * g.nx() + i];
      const int k = g.active_index(i, j);
      if (k >= 0) {
        require(std::isfinite(v), what + ": non-finite value at active cell (" +
                                      std::to_string(i) + ", " +
                                      std::to_string(j) + ")");
        field[k] = v;
      } else {
        require(std::isnan(v), what + ": inactive cell (" + std::to_string(i) +
                                   ", " + std::to_string(j) +
                                   ") must hold the NaN sentinel");
      }
    }
  }
  return field;
}

inline ScalarField read_field(const GridPtr& grid,
                              const std::filesystem::path& path) {
  return field_on_grid(grid, read_raw_field(path), path.string());
}

inline void write_mask(const std::filesystem::path& path, const Grid2D& g) {
  std::ofstream out = detail::open_out(path);
  out << g.nx() << ' ' << g.ny() << ' ' << format_double(g.hx()) << ' '
      << format_double(g.hy()) << '\n';
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (i > 0) out << ' ';
      out << (g.is_active(i, j) ? '1' : '0');
    }
    out << '\n';
  }
  require(out.good(), "write failed: " + path.string());
}

inline GridPtr read_grid(const std::filesystem::path& path) {
  const RawField raw = read_raw_field(path);
  std::vector<std::uint8_t> mask(raw.values.size());
  for (std::size_t k = 0; k < raw.values.size(); ++k) {
    require(raw.values[k] == 0.0 || raw.values[k] == 1.0,
            "mask file " + path.string() + " must contain only 0/1 entries");
    mask[k] = raw.values[k] != 0.0 ? 1 : 0;
  }
  return build_grid(raw.nx, raw.ny, raw.hx, raw.hy, std::move(mask));
}

inline std::string step_filename(const std::string& prefix, int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%06d.txt", step);
  return prefix + buf;
}

/// One field file per requested step plus a manifest of (step, time, file).
inline void write_trajectory(const std::filesystem::path& dir,
                             const StateTrajectory& traj,
                             const std::vector<int>& steps) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest = detail::open_out(dir / "trajectory.txt");
  manifest << "count " << steps.size() << '\n';
  for (int k : steps) {
    require(k >= 0 && k <= traj.time.steps,
            "trajectory dump: step out of range");
    const std::string name = step_filename("state", k);
    write_field(dir / name, traj.at(k));
    manifest << k << ' ' << format_double(traj.time.time_at(k)) << ' ' << name
             << '\n';
  }
  require(manifest.good(), "write failed: trajectory manifest");
}

/// Observation bundle: manifest (sigma, seed, step count) plus one field
/// file per observation step.
inline void write_observations(const std::filesystem::path& dir,
                               const ObservationSet& obs,
                               std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest = detail::open_out(dir / "observations.txt");
  manifest << "sigma " << format_double(obs.sigma_noise) << '\n';
  manifest << "seed " << seed << '\n';
  manifest << "count " << obs.steps.size() << '\n';
  for (std::size_t i = 0; i < obs.steps.size(); ++i) {
    const std::string name = step_filename("obs", obs.steps[i]);
    write_field(dir / name, obs.data[i]);
    manifest << obs.steps[i] << ' ' << name << '\n';
  }
  require(manifest.good(), "write failed: observation manifest");
}

inline ObservationSet read_observations(const GridPtr& grid,
                                        const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / "observations.txt";
  std::ifstream in = detail::open_in(manifest_path);
  std::string key;
  double sigma = 0.0;
  long count = 0;
  require(static_cast<bool>(in >> key) && key == "sigma",
          "observation manifest: expected 'sigma'");
  sigma = detail::next_double(in, manifest_path);
  require(static_cast<bool>(in >> key) && key == "seed",
          "observation manifest: expected 'seed'");
  detail::next_integer(in, manifest_path);
  require(static_cast<bool>(in >> key) && key == "count",
          "observation manifest: expected 'count'");
  count = detail::next_integer(in, manifest_path);
  require(count >= 1, "observation manifest: count must be >= 1");

  std::vector<int> steps;
  std::vector<ScalarField> data;
  for (long i = 0; i < count; ++i) {
    const int step = static_cast<int>(detail::next_integer(in, manifest_path));
    std::string name;
    require(static_cast<bool>(in >> name),
            "observation manifest: missing filename");
    steps.push_back(step);
    data.push_back(read_field(grid, dir / name));
  }
  return ObservationSet::create(std::move(steps), std::move(data), sigma);
}

inline void write_history_csv(const std::filesystem::path& path,
                              const std::vector<IterationRecord>& history) {
  std::ofstream out = detail::open_out(path);
  out << "iter,cost,misfit,regD,regG,grad_norm,cg_iters,cg_exit,alpha\n";
  for (const IterationRecord& row : history) {
    out << row.iter << ',' << format_double(row.cost) << ','
        << format_double(row.misfit) << ',' << format_double(row.reg_d) << ','
        << format_double(row.reg_g) << ',' << format_double(row.grad_norm)
        << ',' << row.cg_iters << ',' << row.cg_exit << ','
        << format_double(row.alpha) << '\n';
  }
  require(out.good(), "write failed: " + path.string());
}

inline void write_fd_csv(const std::filesystem::path& path,
                         const FDCheckReport& report) {
  std::ofstream out = detail::open_out(path);
  out << "epsilon,r\n";
  for (std::size_t i = 0; i < report.epsilons.size(); ++i) {
    out << format_double(report.epsilons[i]) << ','
        << format_double(report.residuals[i]) << '\n';
  }
  require(out.good(), "write failed: " + path.string());
}

}  // namespace rdcal
