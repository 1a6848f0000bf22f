#pragma once

// Mechanism models and closed-form kinematics for four parallel machines.
//
// Conventions shared by every model:
//  * lengths in millimetres, angles in radians
//  * a closure residual f_i per leg; f_i = 0 on the constraint manifold
//  * working mode  = the branch-sign vector chosen for inverse kinematics
//  * assembly mode = the forward-kinematics solution branch, indexed from 1
//
// Model frames:
//  * Bipod: two telescopic struts (lengths rho_i >= 0) from fixed anchors
//    a_1, a_2 to the tool point. Assembly mode 1 lies to the left of the
//    directed anchor line a_1 -> a_2.
//  * Biglide: two sliders on a common x-axis rail at (rho_i, 0), joined to
//    the tool point by struts of fixed length L. Working-mode sign s_i is
//    the sign of x - rho_i; assembly mode 1 has y > 0.
//  * PlanarThreeRpr: three telescopic legs from base anchors A_i to platform
//    points b_i (platform frame), pose (x, y, phi). Forward kinematics is
//    iterative and seed-driven.
//  * Orthoglide: three prismatic sliders on the x, y and z axes at rho_i,
//    each tied to the tool point by a leg of fixed length L. Working-mode
//    sign s_i is the sign of p_i - rho_i; assembly modes are ordered by
//    ascending x+y+z.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pkm/errors.hpp"
#include "pkm/linalg.hpp"

namespace pkm {

enum class MechanismKind { Bipod, Biglide, PlanarThreeRpr, Orthoglide };

inline const char* kind_name(MechanismKind k) {
  switch (k) {
    case MechanismKind::Bipod: return "bipod";
    case MechanismKind::Biglide: return "biglide";
    case MechanismKind::PlanarThreeRpr: return "3rpr";
    case MechanismKind::Orthoglide: return "orthoglide";
  }
  return "?";
}

struct JointRange {
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();
};

struct BipodGeometry {
  std::array<Point2, 2> anchors;
};

struct BiglideGeometry {
  double strut_length = 0.0;
};

struct ThreeRprGeometry {
  std::array<Point2, 3> base_anchors;
  std::array<Point2, 3> platform_points;  // in the platform frame
};

struct OrthoglideGeometry {
  double leg_length = 0.0;
};

struct Pose {
  Vec coords;  // (x,y) | (x,y,phi) | (x,y,z)
  Pose() = default;
  explicit Pose(Vec c) : coords(c) {}
  Pose(std::initializer_list<double> xs) : coords(xs) {}
};

struct JointVector {
  Vec values;
  JointVector() = default;
  explicit JointVector(Vec v) : values(v) {}
  JointVector(std::initializer_list<double> xs) : values(xs) {}
};

// Branch-sign vector for inverse kinematics, one entry of +1/-1 per leg.
class WorkingMode {
 public:
  WorkingMode() = default;
  WorkingMode(std::initializer_list<int> ss) : n_(ss.size()) {
    std::size_t i = 0;
    for (int s : ss) s_[i++] = static_cast<signed char>(s);
  }
  static WorkingMode uniform(std::size_t n, int sign) {
    WorkingMode m;
    m.n_ = n;
    for (std::size_t i = 0; i < n; ++i) m.s_[i] = static_cast<signed char>(sign);
    return m;
  }

  std::size_t size() const { return n_; }
  int operator[](std::size_t i) const { return s_[i]; }
  bool operator==(const WorkingMode& o) const {
    if (n_ != o.n_) return false;
    for (std::size_t i = 0; i < n_; ++i)
      if (s_[i] != o.s_[i]) return false;
    return true;
  }

 private:
  std::array<signed char, kMaxDim> s_{};
  std::size_t n_ = 0;
};

struct AssemblyMode {
  int index = 1;  // 1-based position in the ordered closure list
};

struct IkSolution {
  JointVector joints;
  bool within_joint_limits = true;
};

class MechanismModel {
 public:
  MechanismModel(const BipodGeometry& g, std::vector<JointRange> limits = {})
      : geometry_(g) {
    if (norm(g.anchors[1] - g.anchors[0]) <= 0.0)
      throw InvalidArgumentError("bipod anchors must be distinct");
    init_limits(std::move(limits));
  }
  MechanismModel(const BiglideGeometry& g, std::vector<JointRange> limits = {})
      : geometry_(g) {
    if (!(g.strut_length > 0.0))
      throw InvalidArgumentError("biglide strut length must be positive");
    init_limits(std::move(limits));
  }
  MechanismModel(const ThreeRprGeometry& g, std::vector<JointRange> limits = {})
      : geometry_(g) {
    const auto& a = g.base_anchors;
    if (std::abs(cross(a[1] - a[0], a[2] - a[0])) <= 0.0)
      throw InvalidArgumentError("3rpr base anchors must not be collinear");
    const auto& b = g.platform_points;
    if (norm(b[1] - b[0]) == 0.0 && norm(b[2] - b[0]) == 0.0)
      throw InvalidArgumentError("3rpr platform points must not all coincide");
    init_limits(std::move(limits));
  }
  MechanismModel(const OrthoglideGeometry& g, std::vector<JointRange> limits = {})
      : geometry_(g) {
    if (!(g.leg_length > 0.0))
      throw InvalidArgumentError("orthoglide leg length must be positive");
    init_limits(std::move(limits));
  }

  MechanismKind kind() const {
    return static_cast<MechanismKind>(geometry_.index());
  }
  std::size_t legs() const { return kind() == MechanismKind::Bipod ||
                                     kind() == MechanismKind::Biglide
                                 ? 2
                                 : 3; }
  std::size_t pose_dim() const { return legs(); }

  bool is_telescopic() const {
    return kind() == MechanismKind::Bipod || kind() == MechanismKind::PlanarThreeRpr;
  }

  const BipodGeometry& bipod() const { return std::get<BipodGeometry>(geometry_); }
  const BiglideGeometry& biglide() const { return std::get<BiglideGeometry>(geometry_); }
  const ThreeRprGeometry& three_rpr() const { return std::get<ThreeRprGeometry>(geometry_); }
  const OrthoglideGeometry& orthoglide() const { return std::get<OrthoglideGeometry>(geometry_); }

  const std::vector<JointRange>& joint_limits() const { return limits_; }

  /// Representative length used to scale tolerances: anchor separation
  /// (bipod), strut/leg length (biglide, orthoglide), or the largest
  /// anchor-pair distance (3rpr).
  double length_scale() const {
    switch (kind()) {
      case MechanismKind::Bipod:
        return norm(bipod().anchors[1] - bipod().anchors[0]);
      case MechanismKind::Biglide:
        return biglide().strut_length;
      case MechanismKind::PlanarThreeRpr: {
        const auto& a = three_rpr().base_anchors;
        double d = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = i + 1; j < 3; ++j) d = std::max(d, norm(a[j] - a[i]));
        return d;
      }
      case MechanismKind::Orthoglide:
        return orthoglide().leg_length;
    }
    return 1.0;
  }

  bool within_joint_limits(const JointVector& joints) const {
    for (std::size_t i = 0; i < limits_.size(); ++i)
      if (joints.values[i] < limits_[i].min || joints.values[i] > limits_[i].max)
        return false;
    return true;
  }

 private:
  void init_limits(std::vector<JointRange> limits) {
    if (limits.empty()) limits.assign(legs(), JointRange{});
    if (limits.size() != legs())
      throw InvalidArgumentError("joint limit count must match the number of legs");
    for (const auto& r : limits)
      if (!(r.min < r.max))
        throw InvalidArgumentError("joint limit must satisfy min < max");
    limits_ = std::move(limits);
  }

  std::variant<BipodGeometry, BiglideGeometry, ThreeRprGeometry, OrthoglideGeometry>
      geometry_;
  std::vector<JointRange> limits_;
};

namespace detail {

inline void check_pose_dim(const MechanismModel& m, const Pose& p) {
  if (p.coords.size() != m.pose_dim()) {
    std::ostringstream os;
    os << kind_name(m.kind()) << " pose needs " << m.pose_dim() << " coordinates, got "
       << p.coords.size();
    throw InvalidArgumentError(os.str());
  }
}

inline void check_joint_dim(const MechanismModel& m, const JointVector& j) {
  if (j.values.size() != m.legs()) {
    std::ostringstream os;
    os << kind_name(m.kind()) << " has " << m.legs() << " joints, got " << j.values.size();
    throw InvalidArgumentError(os.str());
  }
}

inline void check_mode(const MechanismModel& m, const WorkingMode& mode) {
  if (mode.size() != m.legs()) {
    std::ostringstream os;
    os << "working mode needs " << m.legs() << " signs, got " << mode.size();
    throw InvalidArgumentError(os.str());
  }
  for (std::size_t i = 0; i < mode.size(); ++i) {
    if (mode[i] != 1 && mode[i] != -1)
      throw InvalidArgumentError("working mode entries must be +1 or -1");
    if (m.is_telescopic() && mode[i] != 1)
      throw InvalidArgumentError(
          std::string(kind_name(m.kind())) + " has a single working mode, all +1");
  }
}

// Platform attachment points of the 3rpr at a given pose.
inline std::array<Point2, 3> platform_at(const ThreeRprGeometry& g, const Pose& p) {
  const Point2 t{p.coords[0], p.coords[1]};
  const double phi = p.coords[2];
  std::array<Point2, 3> out;
  for (int i = 0; i < 3; ++i) out[i] = t + rotated(g.platform_points[i], phi);
  return out;
}

}  // namespace detail

/// Closure residual per leg; zero exactly when (pose, joints) close the
/// kinematic loops. Squared-distance form, units mm^2.
inline Vec constraint_residual(const MechanismModel& m, const Pose& pose,
                               const JointVector& joints) {
  detail::check_pose_dim(m, pose);
  detail::check_joint_dim(m, joints);
  Vec f(m.legs());
  switch (m.kind()) {
    case MechanismKind::Bipod: {
      const Point2 p{pose.coords[0], pose.coords[1]};
      for (int i = 0; i < 2; ++i) {
        const Point2 d = p - m.bipod().anchors[i];
        f[i] = dot(d, d) - joints.values[i] * joints.values[i];
      }
      break;
    }
    case MechanismKind::Biglide: {
      const double L = m.biglide().strut_length;
      for (int i = 0; i < 2; ++i) {
        const double dx = pose.coords[0] - joints.values[i];
        f[i] = dx * dx + pose.coords[1] * pose.coords[1] - L * L;
      }
      break;
    }
    case MechanismKind::PlanarThreeRpr: {
      const auto plat = detail::platform_at(m.three_rpr(), pose);
      for (int i = 0; i < 3; ++i) {
        const Point2 d = plat[i] - m.three_rpr().base_anchors[i];
        f[i] = dot(d, d) - joints.values[i] * joints.values[i];
      }
      break;
    }
    case MechanismKind::Orthoglide: {
      const double L = m.orthoglide().leg_length;
      for (int i = 0; i < 3; ++i) {
        double s = -L * L;
        for (int j = 0; j < 3; ++j) {
          const double c = (j == i) ? pose.coords[j] - joints.values[j] : pose.coords[j];
          s += c * c;
        }
        f[i] = s;
      }
      break;
    }
  }
  return f;
}

/// Inverse kinematics on the branch selected by the working mode. Joint
/// limits never reject a solution; they only clear within_joint_limits.
/// Throws OutOfReachError when a branch discriminant is negative beyond
/// -1e-12 * L^2 (tiny negatives are clamped to the boundary).
inline IkSolution inverse_kinematics(const MechanismModel& m, const Pose& pose,
                                     const WorkingMode& mode) {
  detail::check_pose_dim(m, pose);
  detail::check_mode(m, mode);
  JointVector joints{Vec(m.legs())};
  switch (m.kind()) {
    case MechanismKind::Bipod: {
      const Point2 p{pose.coords[0], pose.coords[1]};
      for (int i = 0; i < 2; ++i) joints.values[i] = norm(p - m.bipod().anchors[i]);
      break;
    }
    case MechanismKind::Biglide: {
      const double L = m.biglide().strut_length;
      const double disc = L * L - pose.coords[1] * pose.coords[1];
      if (disc < -1e-12 * L * L) {
        std::ostringstream os;
        os << "pose y = " << pose.coords[1] << " exceeds strut length " << L;
        throw OutOfReachError(os.str(), 0);
      }
      const double d = std::sqrt(std::max(0.0, disc));
      for (int i = 0; i < 2; ++i) joints.values[i] = pose.coords[0] - mode[i] * d;
      break;
    }
    case MechanismKind::PlanarThreeRpr: {
      const auto plat = detail::platform_at(m.three_rpr(), pose);
      for (int i = 0; i < 3; ++i)
        joints.values[i] = norm(plat[i] - m.three_rpr().base_anchors[i]);
      break;
    }
    case MechanismKind::Orthoglide: {
      const double L = m.orthoglide().leg_length;
      for (int i = 0; i < 3; ++i) {
        double other = 0.0;
        for (int j = 0; j < 3; ++j)
          if (j != i) other += pose.coords[j] * pose.coords[j];
        const double disc = L * L - other;
        if (disc < -1e-12 * L * L) {
          std::ostringstream os;
          os << "pose is beyond the reach of leg " << i;
          throw OutOfReachError(os.str(), i);
        }
        joints.values[i] = pose.coords[i] - mode[i] * std::sqrt(std::max(0.0, disc));
      }
      break;
    }
  }
  return IkSolution{joints, m.within_joint_limits(joints)};
}

namespace detail {

// Orthoglide forward kinematics: all closures for the given joints, ordered
// by ascending x+y+z. The squared tool-point norm u = |p|^2 satisfies a
// quadratic obtained by eliminating p from the three sphere equations.
inline std::vector<Pose> orthoglide_closures(const MechanismModel& m,
                                             const JointVector& rho) {
  const double L = m.orthoglide().leg_length;
  const double zero_tol = 1e-12 * L;
  int zeros = 0, zero_leg = -1;
  for (int i = 0; i < 3; ++i)
    if (std::abs(rho.values[i]) <= zero_tol) {
      ++zeros;
      zero_leg = i;
    }
  if (zeros >= 2)
    throw InvalidArgumentError(
        "orthoglide joints with two or more zero sliders admit a closure continuum");

  std::vector<Pose> out;
  if (zeros == 1) {
    // the zero slider pins u = L^2, which fixes the other two coordinates;
    // only the on-axis coordinate of the zero leg branches
    Pose p{Vec(3)};
    double rest = 0.0;
    for (int j = 0; j < 3; ++j)
      if (j != zero_leg) {
        p.coords[j] = 0.5 * rho.values[j];
        rest += p.coords[j] * p.coords[j];
      }
    const double h2 = L * L - rest;
    if (h2 < -1e-12 * L * L) return out;
    const double h = std::sqrt(std::max(0.0, h2));
    if (h <= 1e-6 * L) {
      p.coords[zero_leg] = 0.0;  // tangential: the two on-axis branches coincide
      out.push_back(p);
    } else {
      p.coords[zero_leg] = -h;
      out.push_back(p);
      p.coords[zero_leg] = h;
      out.push_back(p);
    }
  } else {
    auto emit = [&](double u) {
      Pose p{Vec(3)};
      for (int j = 0; j < 3; ++j)
        p.coords[j] = (u + rho.values[j] * rho.values[j] - L * L) / (2.0 * rho.values[j]);
      out.push_back(p);
    };
    double alpha = 0.0, beta = -1.0, gamma = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double r2 = rho.values[i] * rho.values[i];
      const double c = r2 - L * L;
      alpha += 1.0 / (4.0 * r2);
      beta += c / (2.0 * r2);
      gamma += c * c / (4.0 * r2);
    }
    const double disc = beta * beta - 4.0 * alpha * gamma;
    const double disc_tol = 1e-12 * (beta * beta + std::abs(4.0 * alpha * gamma));
    std::vector<double> roots;
    if (disc < -disc_tol) {
      // no real intersection
    } else if (disc <= disc_tol) {
      roots.push_back(-beta / (2.0 * alpha));
    } else {
      const double q = -0.5 * (beta + std::copysign(std::sqrt(disc), beta));
      roots.push_back(q / alpha);
      roots.push_back(gamma / q);
    }
    for (double u : roots) {
      if (u < -1e-12 * L * L) continue;  // spurious branch of the substitution
      emit(std::max(0.0, u));
    }
  }

  std::sort(out.begin(), out.end(), [](const Pose& a, const Pose& b) {
    const double sa = a.coords[0] + a.coords[1] + a.coords[2];
    const double sb = b.coords[0] + b.coords[1] + b.coords[2];
    if (sa != sb) return sa < sb;
    return a.coords[0] < b.coords[0];
  });
  // collapse closures that coincide to machine precision (tangency)
  if (out.size() == 2) {
    const double sep = norm(out[1].coords - out[0].coords);
    if (sep <= 1e-9 * L) out.pop_back();
  }
  return out;
}

inline std::vector<Pose> bipod_closures(const MechanismModel& m, const JointVector& rho) {
  for (int i = 0; i < 2; ++i)
    if (rho.values[i] < 0.0)
      throw InvalidArgumentError("bipod strut lengths must be non-negative");
  const Point2 a1 = m.bipod().anchors[0];
  const Point2 a2 = m.bipod().anchors[1];
  const double d = norm(a2 - a1);
  const double scale = m.length_scale();
  const double r1 = rho.values[0], r2 = rho.values[1];

  // circle-circle intersection along the anchor line
  const double t = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
  const double h2 = r1 * r1 - t * t;
  std::vector<Pose> out;
  if (h2 < -1e-12 * scale * scale) return out;
  const double h = std::sqrt(std::max(0.0, h2));
  const Point2 u{(a2.x - a1.x) / d, (a2.y - a1.y) / d};
  const Point2 nleft{-u.y, u.x};
  const Point2 base{a1.x + t * u.x, a1.y + t * u.y};
  if (h <= 1e-6 * scale) {
    out.push_back(Pose{{base.x, base.y}});
  } else {
    out.push_back(Pose{{base.x + h * nleft.x, base.y + h * nleft.y}});
    out.push_back(Pose{{base.x - h * nleft.x, base.y - h * nleft.y}});
  }
  return out;
}

inline std::vector<Pose> biglide_closures(const MechanismModel& m, const JointVector& rho) {
  const double L = m.biglide().strut_length;
  const double x = 0.5 * (rho.values[0] + rho.values[1]);
  const double q = 0.5 * (rho.values[1] - rho.values[0]);
  const double disc = L * L - q * q;
  std::vector<Pose> out;
  if (disc < -1e-12 * L * L) return out;
  const double y = std::sqrt(std::max(0.0, disc));
  if (y <= 1e-6 * L) {
    out.push_back(Pose{{x, 0.0}});
  } else {
    out.push_back(Pose{{x, y}});
    out.push_back(Pose{{x, -y}});
  }
  return out;
}

inline Mat three_rpr_parallel_matrix(const MechanismModel& m, const Pose& pose) {
  const auto& g = m.three_rpr();
  const auto plat = detail::platform_at(g, pose);
  const double phi = pose.coords[2];
  Mat a(3);
  for (int i = 0; i < 3; ++i) {
    const Point2 d = plat[i] - g.base_anchors[i];
    const Point2 rb = rotated(g.platform_points[i], phi);
    a(i, 0) = d.x;
    a(i, 1) = d.y;
    a(i, 2) = cross(rb, d);
  }
  return a;
}

inline Pose three_rpr_newton(const MechanismModel& m, const JointVector& rho,
                             const Pose& seed) {
  const double scale = m.length_scale();
  // drive the residual to near machine level so downstream finite
  // differences of the solution are not limited by the solver; accept a
  // looser result only when rounding stalls the line search first
  const double tol = 1e-12 * scale * scale;
  const double loose_tol = 1e-10 * scale * scale;
  Pose pose = seed;
  pose.coords[2] = normalize_angle(pose.coords[2]);

  auto half_residual = [&](const Pose& p) {
    Vec f = constraint_residual(m, p, rho);
    return 0.5 * f;
  };

  Vec g = half_residual(pose);
  for (int iter = 0; iter < 50; ++iter) {
    if (max_abs(g) <= tol) return pose;
    const Mat a = three_rpr_parallel_matrix(m, pose);
    const auto inv = try_inverse(a);
    if (!inv)
      throw ConvergenceError("3rpr forward kinematics hit a singular iterate", iter);
    const Vec step = *inv * ((-1.0) * g);

    // damped update: halve until the residual norm drops
    const double g0 = norm(g);
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k < 30; ++k) {
      Pose trial = pose;
      trial.coords[0] += alpha * step[0];
      trial.coords[1] += alpha * step[1];
      trial.coords[2] = normalize_angle(trial.coords[2] + alpha * step[2]);
      const Vec gt = half_residual(trial);
      if (norm(gt) < g0) {
        pose = trial;
        g = gt;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (max_abs(g) <= loose_tol) return pose;
      throw ConvergenceError("3rpr forward kinematics stalled", iter);
    }
  }
  if (max_abs(g) <= loose_tol) return pose;
  throw ConvergenceError("3rpr forward kinematics did not converge", 50);
}

}  // namespace detail

/// All forward-kinematics closures for the given joints, ordered by branch
/// index. Tangential closures appear once. Empty result means no closure.
/// Unsupported for the 3rpr (no closed form; use forward_kinematics with a
/// seed).
inline std::vector<Pose> enumerate_assembly_modes(const MechanismModel& m,
                                                  const JointVector& joints) {
  detail::check_joint_dim(m, joints);
  switch (m.kind()) {
    case MechanismKind::Bipod:
      return detail::bipod_closures(m, joints);
    case MechanismKind::Biglide:
      return detail::biglide_closures(m, joints);
    case MechanismKind::Orthoglide:
      return detail::orthoglide_closures(m, joints);
    case MechanismKind::PlanarThreeRpr:
      throw UnsupportedOperationError(
          "assembly-mode enumeration is not available for the 3rpr");
  }
  return {};
}

/// Forward kinematics on the requested assembly branch. For the 3rpr the
/// branch is selected by the seed (mode index must be 1) and the solution is
/// found by a damped Newton iteration on the closure residual.
/// At a tangential closure the single solution serves either branch index.
inline Pose forward_kinematics(const MechanismModel& m, const JointVector& joints,
                               AssemblyMode mode,
                               const std::optional<Pose>& seed = std::nullopt) {
  detail::check_joint_dim(m, joints);
  if (m.kind() == MechanismKind::PlanarThreeRpr) {
    if (mode.index != 1)
      throw InvalidArgumentError("3rpr forward kinematics is seed-driven; use assembly mode 1");
    if (!seed)
      throw InvalidArgumentError("3rpr forward kinematics requires a seed pose");
    detail::check_pose_dim(m, *seed);
    return detail::three_rpr_newton(m, joints, *seed);
  }

  if (mode.index < 1 || mode.index > 2)
    throw InvalidArgumentError("assembly mode index must be 1 or 2");
  const std::vector<Pose> sols = enumerate_assembly_modes(m, joints);
  if (sols.empty())
    throw NoAssemblyError("no closure exists for these joint values");
  if (sols.size() == 1) {
    // either a tangential (coalesced) closure or a lone surviving branch;
    // in both cases it is the only pose the joints admit
    return sols[0];
  }
  return sols[static_cast<std::size_t>(mode.index - 1)];
}

/// Every admissible working mode, lexicographically ordered with -1 before
/// +1. Telescopic models (bipod, 3rpr) have the single all-+1 mode.
inline std::vector<WorkingMode> enumerate_working_modes(const MechanismModel& m) {
  const std::size_t n = m.legs();
  if (m.is_telescopic()) return {WorkingMode::uniform(n, 1)};
  std::vector<WorkingMode> out;
  for (unsigned idx = 0; idx < (1u << n); ++idx) {
    int signs[kMaxDim] = {1, 1, 1};
    for (std::size_t k = 0; k < n; ++k)
      signs[k] = ((idx >> (n - 1 - k)) & 1u) ? 1 : -1;
    out.push_back(n == 2 ? WorkingMode{signs[0], signs[1]}
                         : WorkingMode{signs[0], signs[1], signs[2]});
  }
  return out;
}

}  // namespace pkm
