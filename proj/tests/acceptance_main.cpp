// Acceptance gate. Runs nine end-to-end checks, prints one PASS/FAIL line
// each (tolerance in the title, measured runtime against the pinned budget)
// and exits nonzero if any check fails. No test framework: plain main.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pkm/diffkin.hpp"
#include "pkm/io.hpp"
#include "pkm/kinetostatics.hpp"
#include "pkm/linalg.hpp"
#include "pkm/mechanisms.hpp"
#include "pkm/synthesis.hpp"
#include "pkm/workspace.hpp"
#include "test_support.hpp"

#ifndef PKM_CLI_PATH
#error "PKM_CLI_PATH must name the pkm executable"
#endif

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
};

void check(Outcome& oc, bool cond, const std::string& what) {
  if (!cond) {
    oc.pass = false;
    oc.detail << " | " << what;
  }
}

int g_failures = 0;

template <typename Body>
void criterion(int number, const char* title, double budget_s, Body&& body) {
  Outcome oc;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(oc);
  } catch (const std::exception& e) {
    oc.pass = false;
    oc.detail << " | unexpected exception: " << e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool pass = oc.pass;
  if (secs > budget_s) {
    pass = false;
    oc.detail << " | runtime above budget";
  }
  std::printf("%s criterion %d: %s [%.3f s, budget %.0f s]%s\n", pass ? "PASS" : "FAIL",
              number, title, secs, budget_s, oc.detail.str().c_str());
  if (!pass) ++g_failures;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

void isotropic_reference(Outcome& oc) {
  const pkm::WorkingMode mode = pkm::WorkingMode::uniform(3, -1);
  for (double L : {1.0, 10.0, 405.136}) {
    const pkm::MechanismModel m{pkm::OrthoglideGeometry{L}};
    const pkm::Pose pose{0.0, 0.0, 0.0};
    const pkm::IkSolution ik = pkm::inverse_kinematics(m, pose, mode);
    for (int i = 0; i < 3; ++i)
      check(oc, std::abs(ik.joints.values[i] - L) <= 1e-12 * L,
            "joint " + std::to_string(i) + " != L at L=" + fmt(L));
    const auto km = pkm::kinematic_matrices(m, pose, ik.joints);
    check(oc, km.jacobian.has_value(), "no jacobian at L=" + fmt(L));
    if (!km.jacobian) continue;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        check(oc, std::abs((*km.jacobian)(r, c) - (r == c ? 1.0 : 0.0)) <= 1e-9,
              "J entry off identity at L=" + fmt(L));
    const double kappa = pkm::conditioning_index(*km.jacobian);
    check(oc, std::abs(kappa - 1.0) <= 1e-9, "kappa " + fmt(kappa) + " at L=" + fmt(L));
  }
}

// ---------------------------------------------------------------- criterion 2

void synthesis_through_the_cli(Outcome& oc) {
  const std::string base = "/tmp/pkm_accept_" + std::to_string(::getpid());
  const std::string model_out = base + "_model.json";
  const std::string report_out = base + "_report.json";
  const std::string cmd = std::string(PKM_CLI_PATH) +
                          " synth --cube=200 --lo=0.6 --hi=1.7 --model-out=" + model_out +
                          " --report-out=" + report_out + " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  check(oc, WIFEXITED(status) && WEXITSTATUS(status) == 0, "synth exited nonzero");
  if (!oc.pass) return;

  std::ifstream in(report_out);
  const pkm::json report = pkm::json::parse(in);
  const double L = report["leg_length"].get<double>();
  const double edge = report["cube_edge"].get<double>();
  check(oc, std::abs(edge - 200.0) <= 1e-9, "cube edge " + fmt(edge) + " != 200");
  check(oc, L > 200.0, "leg length " + fmt(L) + " implausibly small");

  const pkm::MechanismModel model = pkm::load_mechanism_file(model_out);
  pkm::Region region;
  for (int ax = 0; ax < 3; ++ax) {
    const double c = report["cube_center"][ax].get<double>();
    region.axes.push_back(pkm::AxisRange{c - 0.5 * edge, c + 0.5 * edge, 21});
  }
  const pkm::WorkingMode mode = pkm::WorkingMode::uniform(3, -1);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  const std::size_t cells = pkm::region_cell_count(region);
  for (std::size_t i = 0; i < cells; ++i) {
    const pkm::Pose pose = pkm::region_pose(region, i);
    const pkm::IkSolution ik = pkm::inverse_kinematics(model, pose, mode);
    const auto km = pkm::kinematic_matrices(model, pose, ik.joints);
    check(oc, km.jacobian.has_value(), "singular lattice pose");
    if (!km.jacobian) return;
    const pkm::Vec sigma = pkm::velocity_amplification_factors(*km.jacobian);
    hi = std::max(hi, sigma[0]);
    lo = std::min(lo, sigma[sigma.size() - 1]);
  }
  check(oc, lo >= 0.6 - 1e-3, "min factor " + fmt(lo) + " below 0.6 - 1e-3");
  check(oc, hi <= 1.7 + 1e-3, "max factor " + fmt(hi) + " above 1.7 + 1e-3");
  std::remove(model_out.c_str());
  std::remove(report_out.c_str());
}

// ---------------------------------------------------------------- criterion 3

void conditioning_floor_and_growth(Outcome& oc) {
  auto g = pkmtest::make_rng(20260825);
  for (pkm::MechanismKind kind : pkmtest::kAllKinds) {
    for (int k = 0; k < 2500; ++k) {
      const pkm::MechanismModel m = pkmtest::sample_model(kind, g);
      const pkmtest::Config c = pkmtest::sample_regular_config(m, g, 1e9);
      const auto km = pkm::kinematic_matrices(m, c.pose, c.joints);
      const double kappa = pkm::conditioning_index(*km.jacobian);
      check(oc, kappa >= 1.0 - 1e-12, "kappa " + fmt(kappa) + " below 1");
      if (!oc.pass) return;
    }
  }

  // approaching the flat pose of a biglide the conditioning must blow up
  // monotonically: kappa = sqrt(L^2 - y^2) / y for this working mode
  const pkm::MechanismModel m{pkm::BiglideGeometry{20.0}};
  const pkm::WorkingMode mode{-1, 1};
  double prev = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double y = 2.0 + (0.01 - 2.0) * (k / 99.0);
    const pkm::Pose pose{0.0, y};
    const pkm::IkSolution ik = pkm::inverse_kinematics(m, pose, mode);
    const auto km = pkm::kinematic_matrices(m, pose, ik.joints);
    const double kappa = pkm::conditioning_index(*km.jacobian);
    check(oc, kappa > prev, "kappa not increasing at y=" + fmt(y));
    prev = kappa;
  }
  check(oc, prev > 1e3, "kappa " + fmt(prev) + " at y=0.01 not above 1e3");
}

// ---------------------------------------------------------------- criterion 4

void mode_enumeration(Outcome& oc) {
  const pkm::MechanismModel m{pkm::BiglideGeometry{5.0}};
  const auto wm = pkm::enumerate_working_modes(m);
  check(oc, wm.size() == 4, "biglide working mode count != 4");
  const int expected[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  for (std::size_t i = 0; i < wm.size() && i < 4; ++i)
    check(oc, wm[i][0] == expected[i][0] && wm[i][1] == expected[i][1],
          "working mode order off at entry " + std::to_string(i));

  const auto am = pkm::enumerate_assembly_modes(m, pkm::JointVector{3.0, -3.0});
  check(oc, am.size() == 2, "assembly mode count != 2");
  if (am.size() == 2) {
    check(oc, std::abs(am[0].coords[0]) <= 1e-9 && std::abs(am[0].coords[1] - 4.0) <= 1e-9,
          "first assembly pose != (0, 4)");
    check(oc, std::abs(am[1].coords[0]) <= 1e-9 && std::abs(am[1].coords[1] + 4.0) <= 1e-9,
          "second assembly pose != (0, -4)");
  }

  // telescopic kinds have the single all-+1 branch, the orthoglide all eight
  const pkm::MechanismModel bipod{pkm::BipodGeometry{{pkm::Point2{0, 0}, pkm::Point2{4, 0}}}};
  check(oc, pkm::enumerate_working_modes(bipod).size() == 1, "bipod mode count != 1");
  const pkm::MechanismModel ortho{pkm::OrthoglideGeometry{2.0}};
  check(oc, pkm::enumerate_working_modes(ortho).size() == 8, "orthoglide mode count != 8");
}

// ---------------------------------------------------------------- criterion 5

void analytic_vs_finite_differences(Outcome& oc) {
  auto g = pkmtest::make_rng(555);
  for (pkm::MechanismKind kind : pkmtest::kAllKinds) {
    for (int k = 0; k < 100; ++k) {
      const pkm::MechanismModel m = pkmtest::sample_model(kind, g);
      const pkmtest::Config c = pkmtest::sample_regular_config(m, g, 50.0);
      const pkm::Mat analytic = *pkm::kinematic_matrices(m, c.pose, c.joints).jacobian;
      const pkm::Mat fd =
          pkm::numeric_jacobian(m, c.pose, c.joints, c.mode, 1e-6 * m.length_scale());
      const double rel = pkmtest::max_abs_diff(analytic, fd) /
                         std::max(1.0, pkm::max_abs(analytic));
      check(oc, rel <= 1e-5, std::string(pkm::kind_name(kind)) + " FD mismatch " + fmt(rel));
      if (!oc.pass) return;
    }
  }
}

// ---------------------------------------------------------------- criterion 6

void velocity_force_duality(Outcome& oc) {
  auto g = pkmtest::make_rng(777);
  for (pkm::MechanismKind kind : pkmtest::kAllKinds) {
    for (int k = 0; k < 250; ++k) {
      const pkm::MechanismModel m = pkmtest::sample_model(kind, g);
      const pkmtest::Config c = pkmtest::sample_regular_config(m, g, 1e6);
      const pkm::Mat j = *pkm::kinematic_matrices(m, c.pose, c.joints).jacobian;
      const pkm::Vec v = pkm::velocity_amplification_factors(j);
      const pkm::Vec f = pkm::force_amplification_factors(j);
      for (std::size_t i = 0; i < v.size(); ++i)
        check(oc, std::abs(v[i] * f[i] - 1.0) <= 1e-9,
              "v*f = " + fmt(v[i] * f[i]) + " for " + pkm::kind_name(kind));
      if (!oc.pass) return;
    }
  }
}

// ---------------------------------------------------------------- criterion 7

pkm::MechanismModel scaled_model(const pkm::MechanismModel& m, double lam) {
  switch (m.kind()) {
    case pkm::MechanismKind::Bipod: {
      pkm::BipodGeometry g = m.bipod();
      for (auto& a : g.anchors) a = pkm::Point2{a.x * lam, a.y * lam};
      return pkm::MechanismModel{g};
    }
    case pkm::MechanismKind::Biglide:
      return pkm::MechanismModel{pkm::BiglideGeometry{m.biglide().strut_length * lam}};
    case pkm::MechanismKind::PlanarThreeRpr: {
      pkm::ThreeRprGeometry g = m.three_rpr();
      for (auto& a : g.base_anchors) a = pkm::Point2{a.x * lam, a.y * lam};
      for (auto& p : g.platform_points) p = pkm::Point2{p.x * lam, p.y * lam};
      return pkm::MechanismModel{g};
    }
    case pkm::MechanismKind::Orthoglide:
      return pkm::MechanismModel{pkm::OrthoglideGeometry{m.orthoglide().leg_length * lam}};
  }
  throw std::logic_error("unknown kind");
}

void scale_invariance(Outcome& oc) {
  auto g = pkmtest::make_rng(999);
  for (int k = 0; k < 100; ++k) {
    const pkm::MechanismKind kind = pkmtest::kAllKinds[k % 4];
    const pkm::MechanismModel m = pkmtest::sample_model(kind, g);
    const pkmtest::Config c = pkmtest::sample_regular_config(m, g, 100.0);
    const pkm::Mat j = *pkm::kinematic_matrices(m, c.pose, c.joints).jacobian;
    for (double lam : {0.1, 3.0, 1000.0}) {
      const pkm::MechanismModel ms = scaled_model(m, lam);
      pkm::Pose pose = c.pose;
      pose.coords[0] *= lam;
      pose.coords[1] *= lam;
      const bool angle_row = kind == pkm::MechanismKind::PlanarThreeRpr;
      if (!angle_row && pose.coords.size() == 3) pose.coords[2] *= lam;
      pkm::JointVector joints = c.joints;
      for (std::size_t i = 0; i < joints.values.size(); ++i) joints.values[i] *= lam;
      const pkm::Mat js = *pkm::kinematic_matrices(ms, pose, joints).jacobian;
      const double tol = 1e-12 * std::max(1.0, pkm::max_abs(j));
      for (std::size_t r = 0; r < j.dim(); ++r)
        for (std::size_t col = 0; col < j.dim(); ++col) {
          // the 3rpr angle row carries 1/length units and scales as 1/lambda
          const double got = (angle_row && r == 2) ? js(r, col) * lam : js(r, col);
          check(oc, std::abs(got - j(r, col)) <= tol,
                std::string(pkm::kind_name(kind)) + " J not scale invariant at lambda=" +
                    fmt(lam));
        }
      if (!oc.pass) return;
    }
  }

  // the synthesized leg length must scale linearly with the prescribed edge
  pkm::SynthesisSpec spec;
  spec.bounds = pkm::FactorBounds{0.6, 1.7};
  spec.cube_edge = 100.0;
  const pkm::SynthesisResult a = pkm::synthesize_orthoglide(spec);
  spec.cube_edge = 200.0;
  const pkm::SynthesisResult b = pkm::synthesize_orthoglide(spec);
  check(oc, std::abs(b.leg_length - 2.0 * a.leg_length) <= 1e-9 * b.leg_length,
        "leg length ratio " + fmt(b.leg_length / a.leg_length) + " != 2");
}

// ---------------------------------------------------------------- criterion 8

bool eigen_rank_deficient(const pkm::Mat& m) {
  Eigen::MatrixXd em = pkmtest::to_eigen(m);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(em);
  const double smin = svd.singularValues()(em.rows() - 1);
  return smin <= 1e-9 * std::max(1.0, pkm::max_abs(m));
}

pkm::SingularityClass oracle_class(const pkm::MechanismModel& m, const pkm::Pose& pose,
                                   const pkm::JointVector& rho) {
  const auto km = pkm::kinematic_matrices(m, pose, rho);
  bool serial = false;
  const double bmax = std::max(1.0, pkm::max_abs(km.serial));
  for (std::size_t i = 0; i < km.serial.dim(); ++i)
    if (std::abs(km.serial(i, i)) <= 1e-9 * bmax) serial = true;

  pkm::Mat a = km.parallel;
  const double L = m.is_telescopic() ? 0.0 : m.length_scale();
  for (std::size_t r = 0; r < a.dim(); ++r) {
    const double div = m.is_telescopic() ? rho.values[r] : L;
    for (std::size_t c = 0; c < a.dim(); ++c) a(r, c) /= div;
  }
  const bool parallel = eigen_rank_deficient(a);

  if (serial && parallel) return pkm::SingularityClass::Both;
  if (serial) return pkm::SingularityClass::SerialSingular;
  if (parallel) return pkm::SingularityClass::ParallelSingular;
  return pkm::SingularityClass::Regular;
}

void classification_against_rank_oracle(Outcome& oc) {
  auto g = pkmtest::make_rng(4242);
  for (pkm::MechanismKind kind : pkmtest::kAllKinds) {
    int tested = 0;
    for (int attempt = 0; attempt < 40000 && tested < 1000; ++attempt) {
      const pkm::MechanismModel m = pkmtest::sample_model(kind, g);
      const double s = m.length_scale();
      pkm::Pose pose{0.0, 0.0};
      pkm::WorkingMode mode = pkm::WorkingMode::uniform(m.legs(), 1);
      switch (kind) {
        case pkm::MechanismKind::Bipod: {
          const auto& anchors = m.bipod().anchors;
          const pkm::Point2 mid{0.5 * (anchors[0].x + anchors[1].x),
                                0.5 * (anchors[0].y + anchors[1].y)};
          pose = pkm::Pose{mid.x + pkmtest::uniform(g, -1.2 * s, 1.2 * s),
                           mid.y + pkmtest::uniform(g, -1.2 * s, 1.2 * s)};
          break;
        }
        case pkm::MechanismKind::Biglide:
          pose = pkm::Pose{pkmtest::uniform(g, -2.0 * s, 2.0 * s),
                           pkmtest::uniform(g, -0.99 * s, 0.99 * s)};
          mode = pkm::WorkingMode{pkmtest::coin(g), pkmtest::coin(g)};
          break;
        case pkm::MechanismKind::PlanarThreeRpr: {
          const auto& a = m.three_rpr().base_anchors;
          const double cx = (a[0].x + a[1].x + a[2].x) / 3.0;
          const double cy = (a[0].y + a[1].y + a[2].y) / 3.0;
          pose = pkm::Pose{cx + pkmtest::uniform(g, -0.8 * s, 0.8 * s),
                           cy + pkmtest::uniform(g, -0.8 * s, 0.8 * s),
                           pkmtest::uniform(g, -pkm::kPi, pkm::kPi)};
          break;
        }
        case pkm::MechanismKind::Orthoglide:
          pose = pkm::Pose{pkmtest::uniform(g, -0.8 * s, 0.8 * s),
                           pkmtest::uniform(g, -0.8 * s, 0.8 * s),
                           pkmtest::uniform(g, -0.8 * s, 0.8 * s)};
          mode = pkm::WorkingMode{pkmtest::coin(g), pkmtest::coin(g), pkmtest::coin(g)};
          break;
      }
      pkm::IkSolution ik;
      try {
        ik = pkm::inverse_kinematics(m, pose, mode);
      } catch (const pkm::OutOfReachError&) {
        continue;
      }
      // the row normalization divides by rho for telescopic legs; skip the
      // measure-zero pin neighbourhood, which the constructed cases cover
      if (m.is_telescopic()) {
        bool pinned = false;
        for (double r : ik.joints.values)
          if (std::abs(r) < 1e-9 * s) pinned = true;
        if (pinned) continue;
      }
      ++tested;
      const pkm::SingularityClass lib = pkm::classify_configuration(m, pose, ik.joints);
      const pkm::SingularityClass ora = oracle_class(m, pose, ik.joints);
      check(oc, lib == ora,
            std::string(pkm::kind_name(kind)) + ": " + pkm::to_string(lib) +
                " vs oracle " + pkm::to_string(ora));
      if (!oc.pass) return;
    }
    check(oc, tested == 1000,
          std::string(pkm::kind_name(kind)) + ": only " + std::to_string(tested) +
              " samples");
  }

  // constructed singularities with known classes
  const pkm::MechanismModel big{pkm::BiglideGeometry{5.0}};
  const pkm::Pose flat{0.3, 0.0};
  const auto flat_ik = pkm::inverse_kinematics(big, flat, pkm::WorkingMode{-1, 1});
  check(oc, pkm::classify_configuration(big, flat, flat_ik.joints) ==
                pkm::SingularityClass::ParallelSingular,
        "flat biglide not ParallelSingular");
  const pkm::Pose top{0.0, 5.0};
  const auto top_ik = pkm::inverse_kinematics(big, top, pkm::WorkingMode{-1, 1});
  check(oc, pkm::classify_configuration(big, top, top_ik.joints) ==
                pkm::SingularityClass::Both,
        "stretched biglide not Both");

  const pkm::MechanismModel bipod{
      pkm::BipodGeometry{{pkm::Point2{0, 0}, pkm::Point2{4, 0}}}};
  for (int leg = 0; leg < 2; ++leg) {
    const pkm::Point2 a = bipod.bipod().anchors[leg];
    const pkm::Pose at_anchor{a.x, a.y};
    const auto ik = pkm::inverse_kinematics(bipod, at_anchor, pkm::WorkingMode{1, 1});
    check(oc, pkm::classify_configuration(bipod, at_anchor, ik.joints) ==
                  pkm::SingularityClass::SerialSingular,
          "bipod at anchor " + std::to_string(leg) + " not SerialSingular");
  }
}

// ---------------------------------------------------------------- criterion 9

void reference_kinetostatics(Outcome& oc) {
  const pkm::MechanismModel m{pkm::BiglideGeometry{5.0}};
  const pkm::Pose pose{0.0, 4.0};
  const auto ik = pkm::inverse_kinematics(m, pose, pkm::WorkingMode{-1, 1});
  check(oc, std::abs(ik.joints.values[0] - 3.0) <= 1e-12 &&
                std::abs(ik.joints.values[1] + 3.0) <= 1e-12,
        "joints != (3, -3)");
  const auto km = pkm::kinematic_matrices(m, pose, ik.joints);
  check(oc, km.jacobian.has_value(), "no jacobian at the reference pose");
  if (!km.jacobian) return;
  const double expected[2][2] = {{0.5, 0.5}, {-0.375, 0.375}};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      check(oc, std::abs((*km.jacobian)(r, c) - expected[r][c]) <= 1e-9,
            "J(" + std::to_string(r) + "," + std::to_string(c) + ") = " +
                fmt((*km.jacobian)(r, c)));

  const pkm::Vec sigma = pkm::velocity_amplification_factors(*km.jacobian);
  const double exact_hi = 1.0 / std::sqrt(2.0);
  const double exact_lo = 3.0 / (4.0 * std::sqrt(2.0));
  check(oc, std::abs(sigma[0] - exact_hi) <= 1e-9, "sigma_max " + fmt(sigma[0]));
  check(oc, std::abs(sigma[1] - exact_lo) <= 1e-9, "sigma_min " + fmt(sigma[1]));
  // five-digit display values quoted for this pose
  check(oc, std::abs(sigma[0] - 0.70711) <= 5e-6, "sigma_max off 0.70711");
  check(oc, std::abs(sigma[1] - 0.53033) <= 5e-6, "sigma_min off 0.53033");
  const double kappa = pkm::conditioning_index(*km.jacobian);
  check(oc, std::abs(kappa - 4.0 / 3.0) <= 1e-9, "kappa " + fmt(kappa) + " != 4/3");
}

}  // namespace

int main() {
  criterion(1, "orthoglide isotropic pose gives J = I and kappa = 1 within 1e-9", 1.0,
            isotropic_reference);
  criterion(2,
            "cli synth --cube=200 --lo=0.6 --hi=1.7 verified on a 21^3 lattice "
            "within 1e-3",
            10.0, synthesis_through_the_cli);
  criterion(3,
            "kappa >= 1 - 1e-12 on 10000 random regular configurations and grows "
            "monotonically toward the flat biglide pose",
            5.0, conditioning_floor_and_growth);
  criterion(4,
            "mode enumeration: 4 ordered biglide working modes, assembly poses "
            "(0, +-4) within 1e-9",
            1.0, mode_enumeration);
  criterion(5,
            "analytic jacobian matches central differences within 1e-5 on 400 "
            "random configurations",
            5.0, analytic_vs_finite_differences);
  criterion(6,
            "velocity and force amplification factors are reciprocal within 1e-9 "
            "on 1000 configurations",
            2.0, velocity_force_duality);
  criterion(7,
            "jacobian is invariant under geometric scaling within 1e-12; "
            "synthesized leg length scales linearly within 1e-9",
            2.0, scale_invariance);
  criterion(8,
            "singularity classification agrees with an SVD rank oracle on 4000 "
            "configurations plus constructed cases",
            5.0, classification_against_rank_oracle);
  criterion(9,
            "reference biglide pose: J, sigma = (0.70711, 0.53033), kappa = 4/3 "
            "within 1e-9 (displayed digits 5e-6)",
            1.0, reference_kinetostatics);

  std::printf("%d/9 criteria passed\n", 9 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
