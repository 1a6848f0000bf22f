#pragma once

// Differential kinematics. Writing the closure residuals as f(p, rho) = 0
// and differentiating gives  A * dp/dt = B * drho/dt  with
//   A = d(f/2)/dp      (one row per leg)
//   B = -d(f/2)/drho   (diagonal, one actuator per leg)
// so the Jacobian J = A^{-1} B maps joint rates to tool velocity wherever A
// is invertible. The half-residual convention keeps the biglide rows at unit
// leg length scale.

#include <cmath>
#include <optional>
#include <sstream>

#include "pkm/mechanisms.hpp"

namespace pkm {

struct KinematicMatrices {
  Mat parallel;                 // A
  Mat serial;                   // B, diagonal
  std::optional<Mat> jacobian;  // A^{-1} B; absent when A is near singular
};

/// Builds A, B and (when A is invertible) J at a configuration. The pose and
/// joints must close the loops to within 1e-6 * length_scale^2.
inline KinematicMatrices kinematic_matrices(const MechanismModel& m, const Pose& pose,
                                            const JointVector& joints) {
  const Vec f = constraint_residual(m, pose, joints);
  const double scale = m.length_scale();
  if (max_abs(f) > 1e-6 * scale * scale) {
    std::ostringstream os;
    os << "pose and joints violate closure by " << max_abs(f) << " mm^2";
    throw InvalidConfigurationError(os.str());
  }

  const std::size_t n = m.legs();
  KinematicMatrices km;
  km.parallel = Mat(n);
  km.serial = Mat(n);
  switch (m.kind()) {
    case MechanismKind::Bipod: {
      const Point2 p{pose.coords[0], pose.coords[1]};
      for (int i = 0; i < 2; ++i) {
        const Point2 d = p - m.bipod().anchors[i];
        km.parallel(i, 0) = d.x;
        km.parallel(i, 1) = d.y;
        km.serial(i, i) = joints.values[i];
      }
      break;
    }
    case MechanismKind::Biglide: {
      for (int i = 0; i < 2; ++i) {
        const double dx = pose.coords[0] - joints.values[i];
        km.parallel(i, 0) = dx;
        km.parallel(i, 1) = pose.coords[1];
        km.serial(i, i) = dx;
      }
      break;
    }
    case MechanismKind::PlanarThreeRpr: {
      km.parallel = detail::three_rpr_parallel_matrix(m, pose);
      for (int i = 0; i < 3; ++i) km.serial(i, i) = joints.values[i];
      break;
    }
    case MechanismKind::Orthoglide: {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j)
          km.parallel(i, j) =
              (j == i) ? pose.coords[j] - joints.values[j] : pose.coords[j];
        km.serial(i, i) = pose.coords[i] - joints.values[i];
      }
      break;
    }
  }

  if (const auto inv = try_inverse(km.parallel)) km.jacobian = *inv * km.serial;
  return km;
}

namespace detail {

// Forward kinematics restricted to the branch containing `anchor`: solve,
// then pick the closure nearest to the anchor pose. Rejects ambiguous picks
// (probe landed between branches) and any solver failure.
inline Pose fk_near(const MechanismModel& m, const JointVector& rho, const Pose& anchor) {
  if (m.kind() == MechanismKind::PlanarThreeRpr) {
    try {
      return three_rpr_newton(m, rho, anchor);
    } catch (const ConvergenceError& e) {
      throw OracleInvalidError(std::string("finite-difference probe failed: ") + e.what());
    }
  }
  std::vector<Pose> sols;
  try {
    sols = enumerate_assembly_modes(m, rho);
  } catch (const Error& e) {
    throw OracleInvalidError(std::string("finite-difference probe failed: ") + e.what());
  }
  if (sols.empty())
    throw OracleInvalidError("finite-difference probe left the reachable set");
  std::size_t best = 0;
  double dbest = norm(sols[0].coords - anchor.coords);
  for (std::size_t k = 1; k < sols.size(); ++k) {
    const double d = norm(sols[k].coords - anchor.coords);
    if (d < dbest) {
      dbest = d;
      best = k;
    }
  }
  if (sols.size() > 1) {
    const double dother = norm(sols[1 - best].coords - anchor.coords);
    if (dbest > 0.25 * dother)
      throw OracleInvalidError("finite-difference probe is ambiguous between assembly branches");
  }
  return sols[best];
}

}  // namespace detail

/// Central finite-difference Jacobian: perturbs each actuator by +-step,
/// re-solves forward kinematics on the same branch, and differences the
/// poses. Independent of kinematic_matrices; intended as a numeric
/// cross-check. The step must lie in (0, length_scale/1000].
inline Mat numeric_jacobian(const MechanismModel& m, const Pose& pose,
                            const JointVector& joints, const WorkingMode& mode,
                            double step) {
  detail::check_pose_dim(m, pose);
  detail::check_joint_dim(m, joints);
  detail::check_mode(m, mode);
  const double scale = m.length_scale();
  if (!(step > 0.0) || step > scale / 1000.0)
    throw InvalidArgumentError("finite-difference step must lie in (0, length_scale/1000]");

  // the configuration must sit on the requested working-mode branch
  const IkSolution base = inverse_kinematics(m, pose, mode);
  if (max_abs(base.joints.values - joints.values) > 1e-6 * scale)
    throw InvalidConfigurationError("joints do not lie on the requested working-mode branch");

  const std::size_t n = m.legs();
  Mat j(n);
  for (std::size_t leg = 0; leg < n; ++leg) {
    JointVector plus = joints, minus = joints;
    plus.values[leg] += step;
    minus.values[leg] -= step;
    const Pose pp = detail::fk_near(m, plus, pose);
    const Pose pm = detail::fk_near(m, minus, pose);

    // confirm both probes stayed on the branch
    for (const auto& [probe, target] : {std::pair{pp, plus}, std::pair{pm, minus}}) {
      try {
        const IkSolution back = inverse_kinematics(m, probe, mode);
        if (max_abs(back.joints.values - target.values) > 1e-6 * scale)
          throw OracleInvalidError("finite-difference probe jumped to another working mode");
      } catch (const OutOfReachError&) {
        throw OracleInvalidError("finite-difference probe left the reachable set");
      }
    }

    Vec diff = pp.coords - pm.coords;
    if (m.kind() == MechanismKind::PlanarThreeRpr) diff[2] = normalize_angle(diff[2]);
    for (std::size_t r = 0; r < n; ++r) j(r, leg) = diff[r] / (2.0 * step);
  }
  return j;
}

}  // namespace pkm
