#pragma once

#include "rcm_admittance/trace.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace rcm {

/// Plot-ready tables, one per figure panel: RCM error, clearance, human
/// wrench, repulsion seen at the port, damping. Tab-separated with a header.
struct PlotTable {
  std::string file;
  std::vector<std::string> columns;
};

inline std::vector<PlotTable> plot_tables(Eigen::Index free_coords) {
  std::vector<std::string> damping = {"t"};
  for (Eigen::Index i = 1; i <= free_coords; ++i) damping.push_back("D_f_" + std::to_string(i));
  return {
      {"rcm_error.tsv", {"t", "x_c_norm", "robot_port_distance"}},
      {"clearance.tsv", {"t", "min_distance", "clearance_threshold", "influence_reach", "active"}},
      {"human_wrench.tsv", {"t", "fx", "fy", "fz", "tx", "ty", "tz"}},
      {"port_repulsion.tsv", {"t", "axial_force", "torque_x", "torque_y", "torque_z"}},
      {"damping.tsv", damping},
  };
}

inline void write_plot_table(std::ostream& out, const Trace& trace, std::size_t which) {
  const auto tables = plot_tables(trace.meta.free_coords());
  const auto& cols = tables.at(which).columns;
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) s += '\t';
    s += cols[i];
  }
  s += '\n';
  auto d = [&s](double v) {
    s += '\t';
    detail::put_double(s, v);
  };
  for (const auto& r : trace.records) {
    detail::put_double(s, r.t);
    switch (which) {
      case 0:
        d(r.x_c_norm);
        d(r.robot_port_distance);
        break;
      case 1:
        d(r.min_distance);
        d(trace.meta.clearance_threshold());
        d(trace.meta.influence_reach());
        s += '\t';
        detail::put_uint(s, r.active);
        break;
      case 2:
        for (int i = 0; i < 6; ++i) d(r.F_h(i));
        break;
      case 3:
        d(r.port_force);
        for (int i = 0; i < 3; ++i) d(r.port_torque(i));
        break;
      default:
        for (Eigen::Index i = 0; i < r.D_f.size(); ++i) d(r.D_f(i));
        break;
    }
    s += '\n';
  }
  out << s;
}

/// Writes all tables into `dir`; returns the paths written.
inline std::vector<std::string> write_plot_files(const Trace& trace, const std::filesystem::path& dir) {
  std::vector<std::string> paths;
  const auto tables = plot_tables(trace.meta.free_coords());
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto path = dir / tables[i].file;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    write_plot_table(out, trace, i);
    paths.push_back(path.string());
  }
  return paths;
}

}  // namespace rcm
