#pragma once

// Workspace mapping: sweep a Cartesian grid of poses, record kinetostatic
// metrics per cell, extract the region whose amplification factors stay
// inside prescribed bounds, and find the largest axis-aligned cube (square
// for planar models) inscribed in that region.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "pkm/kinetostatics.hpp"

namespace pkm {

struct AxisRange {
  double min = 0.0;
  double max = 0.0;
  int count = 2;
};

// Sampling box, one axis per pose coordinate. An axis with count 1 is
// degenerate (min == max) and pins that coordinate; counts >= 2 need
// min < max. For the 3rpr the third axis is the platform orientation phi.
struct Region {
  std::vector<AxisRange> axes;
};

struct FactorBounds {
  double lo = 0.0;
  double hi = 0.0;
};

inline void validate_bounds(const FactorBounds& b) {
  if (!(b.lo > 0.0) || !(b.lo <= b.hi))
    throw InvalidArgumentError("factor bounds need 0 < lo <= hi");
}

inline void validate_region(const MechanismModel& m, const Region& r) {
  if (r.axes.size() != m.pose_dim())
    throw InvalidArgumentError("region axis count must match the pose dimension");
  for (const auto& a : r.axes) {
    if (a.count < 1) throw InvalidArgumentError("region axis count must be >= 1");
    if (!std::isfinite(a.min) || !std::isfinite(a.max))
      throw InvalidArgumentError("region interval must be finite");
    if (a.count == 1) {
      if (a.min != a.max)
        throw InvalidArgumentError("a single-sample region axis must have min == max");
    } else if (!(a.min < a.max)) {
      throw InvalidArgumentError("region interval needs min < max");
    }
  }
}

inline std::size_t region_cell_count(const Region& r) {
  std::size_t n = 1;
  for (const auto& a : r.axes) n *= static_cast<std::size_t>(a.count);
  return n;
}

inline double axis_sample(const AxisRange& a, int k) {
  if (a.count == 1) return a.min;
  return a.min + (a.max - a.min) * (double(k) / double(a.count - 1));
}

/// Pose at a row-major flat index (first axis slowest, last axis fastest).
inline Pose region_pose(const Region& r, std::size_t flat) {
  const std::size_t dim = r.axes.size();
  Pose p{Vec(dim)};
  for (std::size_t ax = dim; ax-- > 0;) {
    const auto cnt = static_cast<std::size_t>(r.axes[ax].count);
    p.coords[ax] = axis_sample(r.axes[ax], static_cast<int>(flat % cnt));
    flat /= cnt;
  }
  return p;
}

struct GridCell {
  Pose pose;
  bool reachable = false;
  bool within_joint_limits = false;
  double sigma_min = std::numeric_limits<double>::quiet_NaN();
  double sigma_max = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();
  std::optional<SingularityClass> classification;  // absent when unreachable
};

struct WorkspaceGrid {
  Region region;
  WorkingMode working_mode;
  std::vector<GridCell> cells;  // row-major over the region axes
};

/// Metrics for one pose; unreachable poses leave the metric fields NaN.
inline GridCell evaluate_cell(const MechanismModel& m, const Pose& pose,
                              const WorkingMode& mode) {
  GridCell c;
  c.pose = pose;
  IkSolution ik;
  try {
    ik = inverse_kinematics(m, pose, mode);
  } catch (const OutOfReachError&) {
    return c;
  }
  c.reachable = true;
  c.within_joint_limits = ik.within_joint_limits;
  const KinetostaticReport rep = kinetostatic_report(m, pose, ik.joints);
  if (rep.sigma) {
    c.sigma_min = (*rep.sigma)[m.legs() - 1];
    c.sigma_max = (*rep.sigma)[0];
  }
  c.kappa = rep.kappa;
  c.classification = rep.classification;
  return c;
}

inline WorkspaceGrid sweep_grid(const MechanismModel& m, const Region& region,
                                const WorkingMode& mode) {
  validate_region(m, region);
  detail::check_mode(m, mode);
  WorkspaceGrid grid{region, mode, {}};
  const std::size_t total = region_cell_count(region);
  grid.cells.reserve(total);
  for (std::size_t i = 0; i < total; ++i)
    grid.cells.push_back(evaluate_cell(m, region_pose(region, i), mode));
  return grid;
}

/// Pass mask over grid cells: reachable, inside joint limits, and every
/// velocity amplification factor within [lo, hi]. NaN metrics never pass.
inline std::vector<bool> dextrous_region(const WorkspaceGrid& grid,
                                         const FactorBounds& bounds) {
  validate_bounds(bounds);
  std::vector<bool> mask(grid.cells.size(), false);
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const GridCell& c = grid.cells[i];
    mask[i] = c.reachable && c.within_joint_limits && c.sigma_min >= bounds.lo &&
              c.sigma_max <= bounds.hi;
  }
  return mask;
}

struct CubeSearch {
  Region center_domain;         // candidate cube centers, one axis per pose coordinate
  double edge_tolerance = 0.0;  // <= 0 selects length_scale * 1e-3
};

struct InscribedCube {
  bool found = false;
  Pose center;
  double edge = 0.0;
};

namespace detail {

inline bool pose_admissible(const MechanismModel& m, const Pose& pose,
                            const WorkingMode& mode, const FactorBounds& bounds) {
  IkSolution ik;
  try {
    ik = inverse_kinematics(m, pose, mode);
  } catch (const OutOfReachError&) {
    return false;
  }
  if (!ik.within_joint_limits) return false;
  const KinematicMatrices km = kinematic_matrices(m, pose, ik.joints);
  if (!km.jacobian) return false;
  const Vec s = singular_values(*km.jacobian);
  return s[m.legs() - 1] >= bounds.lo && s[0] <= bounds.hi;
}

// Number of axes the cube extends over: the planar models inscribe a
// square; the 3rpr keeps phi fixed at the center's value.
inline std::size_t cube_dims(const MechanismModel& m) {
  return m.kind() == MechanismKind::Orthoglide ? 3 : 2;
}

// Cube admissibility on the fixed verification lattice: the 2^d corners
// first (cheap rejection), then the full 9-per-axis grid.
inline bool cube_admissible(const MechanismModel& m, const WorkingMode& mode,
                            const FactorBounds& bounds, const Pose& center,
                            double edge, int samples_per_axis = 9) {
  const std::size_t d = cube_dims(m);
  const double h = 0.5 * edge;

  Pose probe = center;
  for (unsigned corner = 0; corner < (1u << d); ++corner) {
    for (std::size_t ax = 0; ax < d; ++ax)
      probe.coords[ax] = center.coords[ax] + (((corner >> ax) & 1u) ? h : -h);
    if (!pose_admissible(m, probe, mode, bounds)) return false;
  }

  const int k = samples_per_axis;
  std::size_t total = 1;
  for (std::size_t ax = 0; ax < d; ++ax) total *= static_cast<std::size_t>(k);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t ax = d; ax-- > 0;) {
      const int idx = static_cast<int>(rem % static_cast<std::size_t>(k));
      rem /= static_cast<std::size_t>(k);
      probe.coords[ax] = center.coords[ax] - h + edge * (double(idx) / double(k - 1));
    }
    if (!pose_admissible(m, probe, mode, bounds)) return false;
  }
  return true;
}

// Largest admissible edge at a fixed center: doubling growth from a floor
// known to pass, then bisection down to tol. Returns 0 when not even a
// tol-sized cube fits.
inline double grow_edge(const MechanismModel& m, const WorkingMode& mode,
                        const FactorBounds& bounds, const Pose& center, double floor_edge,
                        double tol, double cap) {
  double lo = floor_edge;
  if (lo <= 0.0) {
    if (!cube_admissible(m, mode, bounds, center, tol)) return 0.0;
    lo = tol;
  }
  double hi = 2.0 * lo;
  while (hi <= cap && cube_admissible(m, mode, bounds, center, hi)) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (cube_admissible(m, mode, bounds, center, mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace detail

/// Largest axis-aligned cube whose 9-per-axis verification lattice (corners
/// included) passes the dextrous predicate throughout. Centers are scanned
/// over a coarse lattice, the best is refined by axis-aligned pattern
/// search, and the edge is bisected to edge_tolerance. Deterministic.
inline InscribedCube largest_inscribed_cube(const MechanismModel& m,
                                            const WorkingMode& mode,
                                            const FactorBounds& bounds,
                                            const CubeSearch& search) {
  validate_bounds(bounds);
  validate_region(m, search.center_domain);
  detail::check_mode(m, mode);
  const double scale = m.length_scale();
  const double tol =
      search.edge_tolerance > 0.0 ? search.edge_tolerance : 1e-3 * scale;
  const double cap = 1e6 * scale;  // termination guard for unbounded regions
  const std::size_t d = detail::cube_dims(m);

  InscribedCube best;
  const std::size_t centers = region_cell_count(search.center_domain);
  for (std::size_t i = 0; i < centers; ++i) {
    const Pose center = region_pose(search.center_domain, i);
    if (!detail::pose_admissible(m, center, mode, bounds)) continue;
    double floor_edge = 0.0;
    if (best.found) {
      // only centers that beat the incumbent are worth growing
      if (!detail::cube_admissible(m, mode, bounds, center, best.edge + tol)) continue;
      floor_edge = best.edge + tol;
    }
    const double e = detail::grow_edge(m, mode, bounds, center, floor_edge, tol, cap);
    if (e > 0.0 && (!best.found || e > best.edge)) best = {true, center, e};
  }
  if (!best.found) return best;

  // refine the center: axis-aligned pattern search with halving steps
  double step = 0.0;
  for (std::size_t ax = 0; ax < d; ++ax) {
    const auto& a = search.center_domain.axes[ax];
    if (a.count > 1) step = std::max(step, 0.5 * (a.max - a.min) / double(a.count - 1));
  }
  if (step <= 0.0) step = 8.0 * tol;
  while (step > tol) {
    bool improved = false;
    for (std::size_t ax = 0; ax < d; ++ax) {
      for (const double dir : {-1.0, 1.0}) {
        Pose cand = best.center;
        cand.coords[ax] += dir * step;
        if (!detail::pose_admissible(m, cand, mode, bounds)) continue;
        if (!detail::cube_admissible(m, mode, bounds, cand, best.edge + tol)) continue;
        const double e =
            detail::grow_edge(m, mode, bounds, cand, best.edge + tol, tol, cap);
        if (e > best.edge) {
          best = {true, cand, e};
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace pkm
