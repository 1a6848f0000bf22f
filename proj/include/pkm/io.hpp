#pragma once

// Serialization: mechanism description files (JSON), analysis reports
// (JSON) and workspace grids (CSV). Numbers are written with 17 significant
// digits so every value round-trips losslessly.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pkm/kinetostatics.hpp"
#include "pkm/synthesis.hpp"
#include "pkm/workspace.hpp"

namespace pkm {

using json = nlohmann::ordered_json;

/// %.17g rendering used by the CSV writer.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline const json& require_field(const json& j, const char* name, const char* where) {
  const auto it = j.find(name);
  if (it == j.end())
    throw InvalidArgumentError(std::string("mechanism file: missing field '") + name +
                               "' in " + where);
  return *it;
}

inline double number_field(const json& j, const char* name, const char* where) {
  const json& v = require_field(j, name, where);
  if (!v.is_number())
    throw InvalidArgumentError(std::string("mechanism file: field '") + name + "' in " +
                               where + " must be a number");
  return v.get<double>();
}

inline Point2 point_field(const json& v, const char* name) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw InvalidArgumentError(std::string("mechanism file: field '") + name +
                               "' must hold [x, y] pairs");
  return Point2{v[0].get<double>(), v[1].get<double>()};
}

template <std::size_t N>
std::array<Point2, N> points_field(const json& j, const char* name, const char* where) {
  const json& v = require_field(j, name, where);
  if (!v.is_array() || v.size() != N)
    throw InvalidArgumentError(std::string("mechanism file: field '") + name + "' in " +
                               where + " must list " + std::to_string(N) + " points");
  std::array<Point2, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = point_field(v[i], name);
  return out;
}

inline std::vector<JointRange> limits_field(const json& j, std::size_t legs) {
  const auto it = j.find("joint_limits");
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_array() || it->size() != legs)
    throw InvalidArgumentError(
        "mechanism file: field 'joint_limits' must list one [min, max] pair per leg");
  std::vector<JointRange> out;
  for (const auto& pair : *it) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
      throw InvalidArgumentError(
          "mechanism file: field 'joint_limits' entries must be [min, max] numbers");
    out.push_back(JointRange{pair[0].get<double>(), pair[1].get<double>()});
  }
  return out;
}

}  // namespace detail

/// Parses a mechanism description document:
///   {"kind": "bipod"|"biglide"|"3rpr"|"orthoglide",
///    "geometry": {...kind-specific...},
///    "joint_limits": [[min, max], ...]}   (optional; omitted = unbounded)
inline MechanismModel mechanism_from_json(const json& doc) {
  if (!doc.is_object())
    throw InvalidArgumentError("mechanism file: top level must be an object");
  const json& kind = detail::require_field(doc, "kind", "the top level");
  if (!kind.is_string())
    throw InvalidArgumentError("mechanism file: field 'kind' must be a string");
  const std::string k = kind.get<std::string>();
  const json& geo = detail::require_field(doc, "geometry", "the top level");
  if (!geo.is_object())
    throw InvalidArgumentError("mechanism file: field 'geometry' must be an object");

  if (k == "bipod") {
    BipodGeometry g{detail::points_field<2>(geo, "base_points", "geometry")};
    return MechanismModel{g, detail::limits_field(doc, 2)};
  }
  if (k == "biglide") {
    BiglideGeometry g{detail::number_field(geo, "strut_length", "geometry")};
    return MechanismModel{g, detail::limits_field(doc, 2)};
  }
  if (k == "3rpr") {
    ThreeRprGeometry g{detail::points_field<3>(geo, "base_points", "geometry"),
                       detail::points_field<3>(geo, "platform_points", "geometry")};
    return MechanismModel{g, detail::limits_field(doc, 3)};
  }
  if (k == "orthoglide") {
    OrthoglideGeometry g{detail::number_field(geo, "leg_length", "geometry")};
    return MechanismModel{g, detail::limits_field(doc, 3)};
  }
  throw InvalidArgumentError("mechanism file: field 'kind' must be one of "
                             "bipod, biglide, 3rpr, orthoglide; got '" + k + "'");
}

inline MechanismModel load_mechanism_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgumentError("cannot open mechanism file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const std::exception& e) {
    throw InvalidArgumentError("mechanism file " + path + " is not valid JSON: " + e.what());
  }
  return mechanism_from_json(doc);
}

inline json mechanism_to_json(const MechanismModel& m) {
  json doc;
  doc["kind"] = kind_name(m.kind());
  json geo = json::object();
  switch (m.kind()) {
    case MechanismKind::Bipod: {
      json pts = json::array();
      for (const auto& a : m.bipod().anchors) pts.push_back({a.x, a.y});
      geo["base_points"] = pts;
      break;
    }
    case MechanismKind::Biglide:
      geo["strut_length"] = m.biglide().strut_length;
      break;
    case MechanismKind::PlanarThreeRpr: {
      json base = json::array(), plat = json::array();
      for (const auto& a : m.three_rpr().base_anchors) base.push_back({a.x, a.y});
      for (const auto& b : m.three_rpr().platform_points) plat.push_back({b.x, b.y});
      geo["base_points"] = base;
      geo["platform_points"] = plat;
      break;
    }
    case MechanismKind::Orthoglide:
      geo["leg_length"] = m.orthoglide().leg_length;
      break;
  }
  doc["geometry"] = geo;
  bool bounded = false;
  for (const auto& r : m.joint_limits())
    if (std::isfinite(r.min) || std::isfinite(r.max)) bounded = true;
  if (bounded) {
    json lim = json::array();
    for (const auto& r : m.joint_limits()) lim.push_back({r.min, r.max});
    doc["joint_limits"] = lim;
  }
  return doc;
}

inline json vec_to_json(const Vec& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

/// Row-major 2-D array.
inline json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline json kappa_to_json(double kappa) {
  if (std::isinf(kappa)) return "inf";
  return kappa;
}

/// Ellipsoid as a list of principal directions paired with semi-lengths.
inline json ellipsoid_to_json(const Ellipsoid& e) {
  json axes = json::array();
  for (std::size_t i = 0; i < e.semi_lengths.size(); ++i)
    axes.push_back(vec_to_json(column(e.axes, i)));
  return json{{"axes", axes}, {"semi_lengths", vec_to_json(e.semi_lengths)}};
}

/// Pose column names used by CSV headers and the --region grammar.
inline std::vector<std::string> pose_axis_names(const MechanismModel& m) {
  switch (m.kind()) {
    case MechanismKind::Bipod:
    case MechanismKind::Biglide:
      return {"x", "y"};
    case MechanismKind::PlanarThreeRpr:
      return {"x", "y", "phi"};
    case MechanismKind::Orthoglide:
      return {"x", "y", "z"};
  }
  return {};
}

/// CSV per the workspace schema: pose columns, reachable, in_limits,
/// sigma_min, sigma_max, kappa, class, and a dextrous 0/1 column when
/// bounds are supplied. Unreachable cells leave the metric fields empty.
inline void write_grid_csv(std::ostream& os, const MechanismModel& m,
                           const WorkspaceGrid& grid,
                           const std::optional<FactorBounds>& bounds = std::nullopt) {
  const auto names = pose_axis_names(m);
  for (const auto& n : names) os << n << ',';
  os << "reachable,in_limits,sigma_min,sigma_max,kappa,class";
  std::vector<bool> mask;
  if (bounds) {
    os << ",dextrous";
    mask = dextrous_region(grid, *bounds);
  }
  os << '\n';

  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const GridCell& c = grid.cells[i];
    for (std::size_t ax = 0; ax < c.pose.coords.size(); ++ax)
      os << format_number(c.pose.coords[ax]) << ',';
    os << (c.reachable ? 1 : 0) << ',' << (c.within_joint_limits ? 1 : 0) << ',';
    if (c.reachable) {
      os << format_number(c.sigma_min) << ',' << format_number(c.sigma_max) << ','
         << format_number(c.kappa) << ',' << to_string(*c.classification);
    } else {
      os << ",,,";
    }
    if (bounds) os << ',' << (mask[i] ? 1 : 0);
    os << '\n';
  }
}

inline json synthesis_report_to_json(const SynthesisResult& r, const FactorBounds& bounds) {
  json ranges = json::array();
  for (const auto& jr : r.joint_ranges) ranges.push_back({jr.min, jr.max});
  return json{{"leg_length", r.leg_length},
              {"cube_center", vec_to_json(r.cube_center.coords)},
              {"cube_edge", r.cube_edge},
              {"joint_ranges", ranges},
              {"achieved_factor_range", {r.achieved_min, r.achieved_max}},
              {"lattice_density", r.lattice_density},
              {"bounds", {{"lo", bounds.lo}, {"hi", bounds.hi}}}};
}

}  // namespace pkm
