#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "crowdscale/cloud.hpp"
#include "crowdscale/macro.hpp"
#include "crowdscale/measure.hpp"
#include "crowdscale/micro.hpp"
#include "crowdscale/trajectory.hpp"
#include "crowdscale/util.hpp"

namespace crowdscale {

/// CSV dialect used everywhere: comma separated, '.' decimal, LF endings,
/// '#'-prefixed comment lines. Every writer embeds the effective
/// configuration as `# key=value` comments so outputs are reproducible.

inline void write_comment_block(std::ostream& os,
                                const std::vector<std::string>& echo) {
  for (const auto& line : echo) os << "# " << line << "\n";
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  return os;
}

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& echo,
                      const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
  auto os = open_output(path);
  write_comment_block(os, echo);
  os << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << format_double(row[i]);
    os << "\n";
  }
}

// --- measure serialization ---------------------------------------------

template <int D>
void save_measure(const std::string& path, const AtomicMeasure<D>& m,
                  const std::vector<std::string>& echo = {}) {
  auto os = open_output(path);
  write_comment_block(os, echo);
  os << "# type=atomic d=" << D << "\n";
  for (const auto& p : m.positions) {
    for (int i = 0; i < D; ++i) os << (i ? "," : "") << format_double(p[i]);
    os << "\n";
  }
}

template <int D>
void save_measure(const std::string& path, const BumpMeasure<D>& m,
                  const std::vector<std::string>& echo = {}) {
  auto os = open_output(path);
  write_comment_block(os, echo);
  os << "# type=bump d=" << D << "\n";
  os << "bump," << format_double(m.radius) << "," << m.profile.name << ","
     << format_double(m.first_moment) << "\n";
  for (const auto& p : m.centers) {
    for (int i = 0; i < D; ++i) os << (i ? "," : "") << format_double(p[i]);
    os << "\n";
  }
}

inline void save_measure(const std::string& path, const GridDensity1D& g,
                         const std::vector<std::string>& echo = {}) {
  auto os = open_output(path);
  write_comment_block(os, echo);
  os << "# type=grid\n";
  os << format_double(g.length) << "," << g.cells() << "\n";
  for (double a : g.cell_averages) os << format_double(a) << "\n";
}

template <int D>
void save_measure(const std::string& path, const CrowdMeasure<D>& m,
                  const std::vector<std::string>& echo = {}) {
  std::visit([&](const auto& v) { save_measure(path, v, echo); }, m);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

inline bool is_comment_or_blank(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace detail

/// Loads a measure file. Bump files start with a `bump,...` header row, grid
/// files with an `L,M` row announced by a `# type=grid` comment; everything
/// else is read as plain atom rows with D coordinates per line.
template <int D>
CrowdMeasure<D> load_measure(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open measure file: " + path);
  std::string line;
  bool grid_marker = false;
  std::vector<std::vector<std::string>> data;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_comment_or_blank(line)) {
      if (line.find("type=grid") != std::string::npos) grid_marker = true;
      continue;
    }
    data.push_back(detail::split_csv_line(line));
  }
  require(!data.empty(), "measure file has no data rows: " + path);

  auto as_double = [&](const std::string& s) {
    try {
      return std::stod(s);
    } catch (...) {
      throw std::invalid_argument("bad number '" + s + "' in " + path);
    }
  };

  if (data[0].size() >= 1 && data[0][0] == "bump") {
    require(data[0].size() >= 3, "bump header needs r and profile");
    const double radius = as_double(data[0][1]);
    const auto profile = bump_profile(data[0][2]);
    AtomicMeasure<D> centers;
    for (std::size_t r = 1; r < data.size(); ++r) {
      require(static_cast<int>(data[r].size()) == D,
              "bump center row has wrong arity in " + path);
      Vec<D> p{};
      for (int i = 0; i < D; ++i)
        p[i] = as_double(data[r][static_cast<std::size_t>(i)]);
      require(is_finite(p), "non-finite bump center in " + path);
      centers.positions.push_back(p);
    }
    // re-validates the separation bound the type guarantees
    return make_bumps(centers, radius, profile);
  }

  if (grid_marker) {
    if constexpr (D == 1) {
      require(data[0].size() == 2, "grid header must be L,M");
      GridDensity1D g;
      g.length = as_double(data[0][0]);
      const int m = static_cast<int>(as_double(data[0][1]));
      require(static_cast<int>(data.size()) == m + 1,
              "grid file must carry exactly M averages");
      for (int i = 1; i <= m; ++i)
        g.cell_averages.push_back(as_double(data[static_cast<std::size_t>(i)][0]));
      const double mass = total_mass(g);
      require(mass > 0.0, "grid density must carry positive mass");
      require(relative_diff(mass, std::round(mass)) <= 1e-10,
              "grid mass is not an agent count: " + format_double(mass));
      return g;
    } else {
      throw std::invalid_argument("grid densities are one-dimensional");
    }
  }

  AtomicMeasure<D> a;
  for (const auto& row : data) {
    require(static_cast<int>(row.size()) == D,
            "atom row has wrong arity in " + path +
                " (expected " + std::to_string(D) + " columns)");
    Vec<D> p{};
    for (int i = 0; i < D; ++i) p[i] = as_double(row[static_cast<std::size_t>(i)]);
    require(is_finite(p), "non-finite atom position in " + path);
    a.positions.push_back(p);
  }
  return a;
}

/// Column count of the first data row (to pick D when loading).
inline int measure_file_dim(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open measure file: " + path);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_comment_or_blank(line)) {
      if (line.find("type=grid") != std::string::npos) return 1;
      continue;
    }
    const auto fields = detail::split_csv_line(line);
    if (!fields.empty() && fields[0] == "bump") {
      while (std::getline(is, line)) {
        if (detail::is_comment_or_blank(line)) continue;
        return static_cast<int>(detail::split_csv_line(line).size());
      }
      return 1;
    }
    return static_cast<int>(fields.size());
  }
  throw std::runtime_error("measure file has no data rows: " + path);
}

// --- trajectory serialization -------------------------------------------

/// 1-d particle trajectories: one `t,x_1,...,x_N` row per snapshot. In
/// d >= 2, one `t,agent,x1,..,xd` row per agent per snapshot.
template <int D>
void save_trajectory(const std::string& path,
                     const Trajectory<MicroState<D>>& traj,
                     const std::vector<std::string>& echo = {}) {
  auto os = open_output(path);
  write_comment_block(os, echo);
  if (traj.aborted) os << "# aborted: " << traj.abort_reason << "\n";
  if constexpr (D == 1) {
    os << "t";
    for (int i = 0; i < traj.snapshots.front().count(); ++i)
      os << ",x_" << (i + 1);
    os << "\n";
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
      os << format_double(traj.times[s]);
      for (const auto& p : traj.snapshots[s].positions)
        os << "," << format_double(p[0]);
      os << "\n";
    }
  } else {
    os << "t,agent";
    for (int i = 0; i < D; ++i) os << ",x" << (i + 1);
    os << "\n";
    for (std::size_t s = 0; s < traj.times.size(); ++s)
      for (std::size_t i = 0; i < traj.snapshots[s].positions.size(); ++i) {
        os << format_double(traj.times[s]) << "," << (i + 1);
        for (int c = 0; c < D; ++c)
          os << "," << format_double(traj.snapshots[s].positions[i][c]);
        os << "\n";
      }
  }
}

/// Weighted-point cloud snapshots: `t,w,x1[,x2]` rows.
template <int D>
void save_trajectory(const std::string& path,
                     const Trajectory<CloudState<D>>& traj,
                     const std::vector<std::string>& echo = {}) {
  auto os = open_output(path);
  write_comment_block(os, echo);
  if (traj.aborted) os << "# aborted: " << traj.abort_reason << "\n";
  os << "t,w";
  for (int i = 0; i < D; ++i) os << ",x" << (i + 1);
  os << "\n";
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    const auto& c = traj.snapshots[s].cloud;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      os << format_double(traj.times[s]) << "," << format_double(c.weights[i]);
      for (int d = 0; d < D; ++d) os << "," << format_double(c.points[i][d]);
      os << "\n";
    }
  }
}

/// Grid snapshots: `t,rho_1..rho_M` rows.
inline void save_trajectory(const std::string& path,
                            const Trajectory<FVState>& traj,
                            const std::vector<std::string>& echo = {}) {
  auto os = open_output(path);
  write_comment_block(os, echo);
  if (traj.aborted) os << "# aborted: " << traj.abort_reason << "\n";
  if (traj.cfl_reduced) os << "# cfl: time step auto-reduced\n";
  os << "t";
  for (int i = 0; i < traj.snapshots.front().grid.cells(); ++i)
    os << ",rho_" << (i + 1);
  os << "\n";
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    os << format_double(traj.times[s]);
    for (double a : traj.snapshots[s].grid.cell_averages)
      os << "," << format_double(a);
    os << "\n";
  }
}

}  // namespace crowdscale
