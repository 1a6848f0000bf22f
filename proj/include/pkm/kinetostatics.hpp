#pragma once

// Kinetostatic performance measures built on the Jacobian J = A^{-1} B.
// The singular values of J are the velocity amplification factors; their
// reciprocals are the force amplification factors; the ratio of the extreme
// ones is the conditioning index. The manipulability ellipsoid
// { v : v^T (J J^T)^{-1} v = 1 } has semi-axis 1/sigma_i along the i-th
// left singular direction.

#include <cmath>
#include <limits>
#include <optional>

#include "pkm/diffkin.hpp"

namespace pkm {

enum class SingularityClass { Regular, SerialSingular, ParallelSingular, Both };

inline const char* to_string(SingularityClass c) {
  switch (c) {
    case SingularityClass::Regular: return "Regular";
    case SingularityClass::SerialSingular: return "SerialSingular";
    case SingularityClass::ParallelSingular: return "ParallelSingular";
    case SingularityClass::Both: return "Both";
  }
  return "?";
}

/// Velocity amplification factors: singular values of J, descending.
inline Vec velocity_amplification_factors(const Mat& jacobian) {
  return singular_values(jacobian);
}

/// Force amplification factors: 1/sigma_i, ascending, paired axis-by-axis
/// with the descending velocity factors. Throws InfiniteFactorError at a
/// singular J, carrying the unresisted force direction.
inline Vec force_amplification_factors(const Mat& jacobian) {
  const std::size_t n = jacobian.dim();
  const SymmetricEigen eig = symmetric_eigen(jacobian * transpose(jacobian));
  const double smax = std::sqrt(std::max(0.0, eig.values[n - 1]));
  const double smin = std::sqrt(std::max(0.0, eig.values[0]));
  if (smin <= 1e-12 * std::max(smax, 1e-300))
    throw InfiniteFactorError("force amplification is unbounded", column(eig.vectors, 0));
  Vec f(n);
  for (std::size_t i = 0; i < n; ++i)
    f[i] = 1.0 / std::sqrt(eig.values[n - 1 - i]);
  return f;
}

/// Conditioning index sigma_max/sigma_min in [1, inf]; +inf once sigma_min
/// drops below 1e-12 * sigma_max.
inline double conditioning_index(const Mat& jacobian) {
  const Vec s = singular_values(jacobian);
  const double smax = s[0], smin = s[jacobian.dim() - 1];
  if (smax == 0.0 || smin <= 1e-12 * smax)
    return std::numeric_limits<double>::infinity();
  return smax / smin;
}

struct Ellipsoid {
  Mat axes;          // orthonormal columns, axis i along the i-th left singular direction
  Vec semi_lengths;  // ascending; semi_lengths[i] * sigma[i] = 1
};

/// Manipulability ellipsoid from the eigendecomposition of (J J^T)^{-1}.
/// Throws DegenerateEllipsoidError when J is singular.
inline Ellipsoid manipulability_ellipsoid(const Mat& jacobian) {
  const auto inv = try_inverse(jacobian * transpose(jacobian));
  if (!inv)
    throw DegenerateEllipsoidError("manipulability ellipsoid degenerates at a singular jacobian");
  const SymmetricEigen eig = symmetric_eigen(*inv);
  Ellipsoid e;
  e.axes = eig.vectors;
  e.semi_lengths = Vec(jacobian.dim());
  for (std::size_t i = 0; i < jacobian.dim(); ++i)
    e.semi_lengths[i] = std::sqrt(std::max(0.0, eig.values[i]));
  return e;
}

namespace detail {

// Rank test on the parallel matrix with rows rescaled to unit leg wrenches:
// telescopic rows divide by the leg length rho_i, glide rows by the strut
// length (their exact row norm at closure). Legs of zero length transmit
// every wrench through their anchor pin and get special-cased.
inline bool parallel_rank_deficient(const MechanismModel& m, const Pose& pose,
                                    const JointVector& joints, const Mat& a, double tol) {
  const std::size_t n = m.legs();
  const double scale = m.length_scale();

  if (m.is_telescopic()) {
    int pin = -1, pins = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(joints.values[i]) <= tol * scale) {
        pin = static_cast<int>(i);
        ++pins;
      }
    if (pins >= 2) return false;  // platform held at two distinct anchors
    if (pins == 1) {
      if (m.kind() == MechanismKind::Bipod) return false;  // tool pinned at the anchor
      // 3rpr: the pin leaves one candidate freedom, rotation about its
      // anchor; singular iff no other leg has a moment about that point
      const auto& g = m.three_rpr();
      const auto plat = detail::platform_at(g, pose);
      const Point2 pivot = g.base_anchors[pin];
      double moment = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (static_cast<int>(j) == pin) continue;
        const Point2 d = plat[j] - g.base_anchors[j];
        const Point2 u{d.x / joints.values[j], d.y / joints.values[j]};
        moment = std::max(moment, std::abs(cross(plat[j] - pivot, u)));
      }
      return moment <= tol * scale;
    }
    Mat u = a;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) u(i, j) /= joints.values[i];
    return min_singular_value(u) <= tol * std::max(1.0, max_abs(u));
  }

  Mat u = a;
  const double L = (m.kind() == MechanismKind::Biglide) ? m.biglide().strut_length
                                                        : m.orthoglide().leg_length;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) u(i, j) /= L;
  return min_singular_value(u) <= tol * std::max(1.0, max_abs(u));
}

}  // namespace detail

/// Separates rank loss of the serial matrix (an actuator that produces no
/// output motion) from rank loss of the parallel matrix (a tool wrench that
/// meets no actuator resistance).
inline SingularityClass classify_configuration(const MechanismModel& m, const Pose& pose,
                                               const JointVector& joints,
                                               double tol = 1e-9) {
  const KinematicMatrices km = kinematic_matrices(m, pose, joints);
  const std::size_t n = m.legs();

  double bmin = std::numeric_limits<double>::infinity(), bmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    bmin = std::min(bmin, std::abs(km.serial(i, i)));
    bmax = std::max(bmax, std::abs(km.serial(i, i)));
  }
  const bool serial = bmin <= tol * std::max(1.0, bmax);
  const bool parallel = detail::parallel_rank_deficient(m, pose, joints, km.parallel, tol);

  if (serial && parallel) return SingularityClass::Both;
  if (serial) return SingularityClass::SerialSingular;
  if (parallel) return SingularityClass::ParallelSingular;
  return SingularityClass::Regular;
}

struct KinetostaticReport {
  std::optional<Vec> sigma;  // velocity factors, descending; absent when A is singular
  double kappa = std::numeric_limits<double>::infinity();
  std::optional<Ellipsoid> ellipsoid;  // absent when J is singular or absent
  SingularityClass classification = SingularityClass::Regular;
};

/// One-stop evaluation of a configuration.
inline KinetostaticReport kinetostatic_report(const MechanismModel& m, const Pose& pose,
                                              const JointVector& joints,
                                              double tol = 1e-9) {
  const KinematicMatrices km = kinematic_matrices(m, pose, joints);
  KinetostaticReport r;
  r.classification = classify_configuration(m, pose, joints, tol);
  if (km.jacobian) {
    r.sigma = velocity_amplification_factors(*km.jacobian);
    r.kappa = conditioning_index(*km.jacobian);
    if (std::isfinite(r.kappa)) r.ellipsoid = manipulability_ellipsoid(*km.jacobian);
  }
  return r;
}

}  // namespace pkm
