#pragma once

// Dimensional synthesis of the orthoglide: pick the leg length L and the
// actuator ranges so that a prescribed cube-shaped workspace keeps every
// velocity amplification factor inside given bounds.
//
// The Jacobian is invariant under uniform scaling of all lengths, so the
// search runs once at unit leg length: find the largest admissible cube
// e*(1), then L = cube_edge / e*(1) and everything scales linearly. The
// synthesis branch is the working mode (-1,-1,-1), which contains the
// isotropic configuration rho = (L, L, L).

#include <algorithm>
#include <cmath>
#include <vector>

#include "pkm/workspace.hpp"

namespace pkm {

struct SynthesisSpec {
  double cube_edge = 0.0;    // prescribed workspace edge, mm
  FactorBounds bounds;       // admissible window for every factor
  int lattice_density = 21;  // verification lattice, points per axis
};

struct SynthesisResult {
  double leg_length = 0.0;
  Pose cube_center;  // at the synthesized scale
  double cube_edge = 0.0;
  std::vector<JointRange> joint_ranges;
  double achieved_min = 0.0;  // smallest sigma over the verification lattice
  double achieved_max = 0.0;  // largest sigma over the verification lattice
  int lattice_density = 0;
};

/// Per-actuator min/max of inverse kinematics over the region's lattice.
/// Tight: every bound is attained at a lattice pose. Any unreachable lattice
/// pose aborts with an out-of-reach error naming that pose.
inline std::vector<JointRange> joint_ranges_for_region(const MechanismModel& m,
                                                       const Region& region,
                                                       const WorkingMode& mode) {
  validate_region(m, region);
  detail::check_mode(m, mode);
  std::vector<JointRange> ranges(
      m.legs(), JointRange{std::numeric_limits<double>::infinity(),
                           -std::numeric_limits<double>::infinity()});
  const std::size_t total = region_cell_count(region);
  for (std::size_t i = 0; i < total; ++i) {
    const Pose pose = region_pose(region, i);
    IkSolution ik;
    try {
      ik = inverse_kinematics(m, pose, mode);
    } catch (const OutOfReachError& e) {
      std::ostringstream os;
      os << "lattice pose (";
      for (std::size_t k = 0; k < pose.coords.size(); ++k)
        os << (k ? ", " : "") << pose.coords[k];
      os << ") is unreachable: " << e.what();
      throw OutOfReachError(os.str(), e.leg_index);
    }
    for (std::size_t k = 0; k < m.legs(); ++k) {
      ranges[k].min = std::min(ranges[k].min, ik.joints.values[k]);
      ranges[k].max = std::max(ranges[k].max, ik.joints.values[k]);
    }
  }
  return ranges;
}

namespace detail {

inline Region cube_region(const Pose& center, double edge, int density) {
  Region r;
  for (std::size_t ax = 0; ax < center.coords.size(); ++ax)
    r.axes.push_back(
        AxisRange{center.coords[ax] - 0.5 * edge, center.coords[ax] + 0.5 * edge, density});
  return r;
}

// Extreme sigma values over a lattice; every pose must be admissible enough
// to carry a Jacobian.
struct SigmaRange {
  double min = std::numeric_limits<double>::infinity();
  double max = 0.0;
};

inline SigmaRange sigma_range_over(const MechanismModel& m, const Region& region,
                                   const WorkingMode& mode) {
  SigmaRange out;
  const std::size_t total = region_cell_count(region);
  for (std::size_t i = 0; i < total; ++i) {
    const Pose pose = region_pose(region, i);
    const IkSolution ik = inverse_kinematics(m, pose, mode);
    const KinematicMatrices km = kinematic_matrices(m, pose, ik.joints);
    if (!km.jacobian)
      throw InfeasibleSpecError("verification lattice crossed a singularity");
    const Vec s = singular_values(*km.jacobian);
    out.min = std::min(out.min, s[m.legs() - 1]);
    out.max = std::max(out.max, s[0]);
  }
  return out;
}

}  // namespace detail

/// Chooses L, cube center and joint ranges for a prescribed cube. Fails with
/// InfeasibleSpecError when the bounds exclude the isotropic value 1 or no
/// cube of meaningful size fits the bounds.
inline SynthesisResult synthesize_orthoglide(const SynthesisSpec& spec) {
  if (!(spec.cube_edge > 0.0))
    throw InvalidArgumentError("prescribed cube edge must be positive");
  validate_bounds(spec.bounds);
  if (spec.lattice_density < 2)
    throw InvalidArgumentError("verification lattice density must be >= 2");
  if (spec.bounds.lo > 1.0 || spec.bounds.hi < 1.0)
    throw InfeasibleSpecError(
        "factor bounds must straddle 1 so the isotropic configuration is admissible");

  const MechanismModel unit{OrthoglideGeometry{1.0}};
  const WorkingMode mode = WorkingMode::uniform(3, -1);

  CubeSearch search;
  search.center_domain.axes.assign(3, AxisRange{-0.9, 0.9, 13});
  search.edge_tolerance = 1e-3;
  const InscribedCube cube = largest_inscribed_cube(unit, mode, spec.bounds, search);
  if (!cube.found || cube.edge < search.edge_tolerance)
    throw InfeasibleSpecError("no admissible cube fits the requested factor bounds");

  // scale to the prescribed edge, then confirm on the verification lattice;
  // shrink the unit edge stepwise if lattice sampling exposes a leak
  double unit_edge = cube.edge;
  SynthesisResult result;
  while (true) {
    const double L = spec.cube_edge / unit_edge;
    const MechanismModel scaled{OrthoglideGeometry{L}};
    Pose center{Vec(3)};
    for (int ax = 0; ax < 3; ++ax) center.coords[ax] = cube.center.coords[ax] * L;
    const Region lattice = detail::cube_region(center, spec.cube_edge, spec.lattice_density);
    const detail::SigmaRange sr = detail::sigma_range_over(scaled, lattice, mode);
    if (sr.min >= spec.bounds.lo - 1e-9 && sr.max <= spec.bounds.hi + 1e-9) {
      result.leg_length = L;
      result.cube_center = center;
      result.cube_edge = spec.cube_edge;
      result.joint_ranges = joint_ranges_for_region(scaled, lattice, mode);
      result.achieved_min = sr.min;
      result.achieved_max = sr.max;
      result.lattice_density = spec.lattice_density;
      return result;
    }
    unit_edge -= search.edge_tolerance;
    if (unit_edge < search.edge_tolerance)
      throw InfeasibleSpecError("verification lattice rejects every candidate cube");
  }
}

/// Mechanism model for a synthesis result: the scaled orthoglide with the
/// synthesized joint ranges as limits.
inline MechanismModel synthesized_model(const SynthesisResult& r) {
  return MechanismModel{OrthoglideGeometry{r.leg_length}, r.joint_ranges};
}

}  // namespace pkm
