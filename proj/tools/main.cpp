// Command-line front end: analyze | map | modes | synth.
//
// Exit codes: 0 ok, 1 input error, 2 pose out of reach, 3 unsupported
// operation, 4 infeasible synthesis. Every failure prints a single
// "error: ..." line to stderr.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pkm/io.hpp"

namespace {

std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw pkm::InvalidArgumentError(std::string(what) + ": '" + item +
                                      "' is not a number");
    }
  }
  if (out.empty())
    throw pkm::InvalidArgumentError(std::string(what) + ": no values given");
  return out;
}

pkm::Pose parse_pose(const std::string& text, const pkm::MechanismModel& m) {
  const auto vals = parse_numbers(text, "--pose");
  if (vals.size() != m.pose_dim()) {
    std::ostringstream os;
    os << "--pose: " << pkm::kind_name(m.kind()) << " needs " << m.pose_dim()
       << " coordinates, got " << vals.size();
    throw pkm::InvalidArgumentError(os.str());
  }
  pkm::Pose p{pkm::Vec(vals.size())};
  for (std::size_t i = 0; i < vals.size(); ++i) p.coords[i] = vals[i];
  return p;
}

pkm::JointVector parse_joints(const std::string& text, const pkm::MechanismModel& m) {
  const auto vals = parse_numbers(text, "--joints");
  if (vals.size() != m.legs()) {
    std::ostringstream os;
    os << "--joints: " << pkm::kind_name(m.kind()) << " has " << m.legs()
       << " actuators, got " << vals.size();
    throw pkm::InvalidArgumentError(os.str());
  }
  pkm::JointVector j{pkm::Vec(vals.size())};
  for (std::size_t i = 0; i < vals.size(); ++i) j.values[i] = vals[i];
  return j;
}

// --mode is required for the glide models (several IK branches); the
// telescopic models default to their single all-+1 branch.
pkm::WorkingMode resolve_mode(const std::string& text, const pkm::MechanismModel& m) {
  if (text.empty()) {
    if (m.is_telescopic()) return pkm::WorkingMode::uniform(m.legs(), 1);
    throw pkm::InvalidArgumentError(std::string(pkm::kind_name(m.kind())) +
                                    " has several working modes; pass --mode, e.g. "
                                    "--mode=-1,1");
  }
  const auto vals = parse_numbers(text, "--mode");
  if (vals.size() != m.legs())
    throw pkm::InvalidArgumentError("--mode: one sign per leg required");
  pkm::WorkingMode mode = pkm::WorkingMode::uniform(vals.size(), 1);
  int signs[pkm::kMaxDim] = {1, 1, 1};
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i] != 1.0 && vals[i] != -1.0)
      throw pkm::InvalidArgumentError("--mode: entries must be +1 or -1");
    signs[i] = static_cast<int>(vals[i]);
  }
  mode = (vals.size() == 2) ? pkm::WorkingMode{signs[0], signs[1]}
                            : pkm::WorkingMode{signs[0], signs[1], signs[2]};
  return mode;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw pkm::InvalidArgumentError("cannot open output file: " + path);
  out << content;
}

// Singular values of the 2x3 translational sub-block of the 3rpr Jacobian.
pkm::Vec translational_sigma(const pkm::Mat& j) {
  pkm::Mat m(2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += j(r, k) * j(c, k);
      m(r, c) = s;
    }
  const auto eig = pkm::symmetric_eigen(m);
  return pkm::Vec{std::sqrt(std::max(0.0, eig.values[1])),
                  std::sqrt(std::max(0.0, eig.values[0]))};
}

double block_kappa(const pkm::Vec& sigma) {
  const double smax = sigma[0], smin = sigma[sigma.size() - 1];
  if (smax == 0.0 || smin <= 1e-12 * smax)
    return std::numeric_limits<double>::infinity();
  return smax / smin;
}

int run_analyze(const std::string& model_path, const std::string& pose_text,
                const std::string& mode_text, double char_length,
                const std::string& out_path) {
  const pkm::MechanismModel model = pkm::load_mechanism_file(model_path);
  const pkm::Pose pose = parse_pose(pose_text, model);
  const pkm::WorkingMode mode = resolve_mode(mode_text, model);
  if (char_length != 0.0 && model.kind() != pkm::MechanismKind::PlanarThreeRpr)
    throw pkm::InvalidArgumentError("--char-length applies only to the 3rpr");

  const pkm::IkSolution ik = pkm::inverse_kinematics(model, pose, mode);
  const pkm::KinematicMatrices km = pkm::kinematic_matrices(model, pose, ik.joints);
  const pkm::KinetostaticReport rep = pkm::kinetostatic_report(model, pose, ik.joints);

  pkm::json doc;
  doc["kind"] = pkm::kind_name(model.kind());
  doc["pose"] = pkm::vec_to_json(pose.coords);
  pkm::json mode_json = pkm::json::array();
  for (std::size_t i = 0; i < mode.size(); ++i) mode_json.push_back(mode[i]);
  doc["working_mode"] = mode_json;
  doc["joints"] = pkm::vec_to_json(ik.joints.values);
  doc["within_joint_limits"] = ik.within_joint_limits;
  doc["matrices"] = {{"parallel", pkm::mat_to_json(km.parallel)},
                     {"serial", pkm::mat_to_json(km.serial)},
                     {"jacobian", km.jacobian ? pkm::mat_to_json(*km.jacobian)
                                              : pkm::json(nullptr)}};
  doc["sigma"] = rep.sigma ? pkm::vec_to_json(*rep.sigma) : pkm::json(nullptr);

  const bool three_rpr = model.kind() == pkm::MechanismKind::PlanarThreeRpr;
  if (three_rpr) {
    // the raw Jacobian mixes mm and rad; a single conditioning number would
    // hinge on an arbitrary length, so report per-block instead
    doc["kappa"] = nullptr;
    if (km.jacobian) {
      const pkm::Vec ts = translational_sigma(*km.jacobian);
      double rot = 0.0;
      for (int k = 0; k < 3; ++k) rot += (*km.jacobian)(2, k) * (*km.jacobian)(2, k);
      doc["blocks"] = {
          {"translational",
           {{"sigma", pkm::vec_to_json(ts)}, {"kappa", pkm::kappa_to_json(block_kappa(ts))}}},
          {"rotational", {{"factor", std::sqrt(rot)}}}};
    } else {
      doc["blocks"] = nullptr;
    }
    if (char_length != 0.0) {
      if (!(char_length > 0.0))
        throw pkm::InvalidArgumentError("--char-length must be positive");
      if (km.jacobian) {
        pkm::Mat jh = *km.jacobian;
        for (int k = 0; k < 3; ++k) jh(2, k) *= char_length;
        const pkm::Vec hs = pkm::velocity_amplification_factors(jh);
        doc["homogenized"] = {{"characteristic_length", char_length},
                              {"sigma", pkm::vec_to_json(hs)},
                              {"kappa", pkm::kappa_to_json(pkm::conditioning_index(jh))}};
      } else {
        doc["homogenized"] = nullptr;
      }
    }
  } else {
    doc["kappa"] = pkm::kappa_to_json(rep.kappa);
  }
  doc["ellipsoid"] =
      rep.ellipsoid ? pkm::ellipsoid_to_json(*rep.ellipsoid) : pkm::json(nullptr);
  doc["class"] = pkm::to_string(rep.classification);

  write_output(out_path, doc.dump(2) + "\n");
  return 0;
}

pkm::Region parse_region(const std::vector<std::string>& flags,
                         const pkm::MechanismModel& m) {
  const auto names = pkm::pose_axis_names(m);
  pkm::Region region;
  region.axes.assign(names.size(), pkm::AxisRange{});
  std::vector<bool> seen(names.size(), false);
  for (const auto& flag : flags) {
    const auto eq = flag.find('=');
    if (eq == std::string::npos)
      throw pkm::InvalidArgumentError("--region expects axis=min:max:count, got '" + flag +
                                      "'");
    const std::string axis = flag.substr(0, eq);
    std::size_t idx = names.size();
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == axis) idx = i;
    if (idx == names.size())
      throw pkm::InvalidArgumentError("--region: unknown axis '" + axis + "' for " +
                                      pkm::kind_name(m.kind()));
    if (seen[idx])
      throw pkm::InvalidArgumentError("--region: axis '" + axis + "' given twice");
    seen[idx] = true;

    const std::string spec = flag.substr(eq + 1);
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3)
      throw pkm::InvalidArgumentError("--region expects axis=min:max:count, got '" + flag +
                                      "'");
    try {
      region.axes[idx].min = std::stod(parts[0]);
      region.axes[idx].max = std::stod(parts[1]);
      region.axes[idx].count = std::stoi(parts[2]);
    } catch (const std::exception&) {
      throw pkm::InvalidArgumentError("--region: cannot parse '" + spec + "'");
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i)
    if (!seen[i])
      throw pkm::InvalidArgumentError("--region: axis '" + names[i] + "' not specified");
  return region;
}

int run_map(const std::string& model_path, const std::vector<std::string>& region_flags,
            const std::string& mode_text, double lo, double hi,
            const std::string& out_path) {
  const pkm::MechanismModel model = pkm::load_mechanism_file(model_path);
  const pkm::Region region = parse_region(region_flags, model);
  const pkm::WorkingMode mode = resolve_mode(mode_text, model);
  if (std::isnan(lo) != std::isnan(hi))
    throw pkm::InvalidArgumentError("--lo and --hi must be given together");
  std::optional<pkm::FactorBounds> bounds;
  if (!std::isnan(lo)) bounds = pkm::FactorBounds{lo, hi};

  const pkm::WorkspaceGrid grid = pkm::sweep_grid(model, region, mode);
  std::ostringstream csv;
  pkm::write_grid_csv(csv, model, grid, bounds);
  write_output(out_path, csv.str());
  return 0;
}

int run_modes(const std::string& model_path, const std::string& pose_text,
              const std::string& joints_text, const std::string& out_path) {
  const pkm::MechanismModel model = pkm::load_mechanism_file(model_path);
  if (pose_text.empty() == joints_text.empty())
    throw pkm::InvalidArgumentError("pass exactly one of --pose or --joints");

  pkm::json doc;
  doc["kind"] = pkm::kind_name(model.kind());
  if (!pose_text.empty()) {
    const pkm::Pose pose = parse_pose(pose_text, model);
    doc["pose"] = pkm::vec_to_json(pose.coords);
    pkm::json list = pkm::json::array();
    for (const auto& mode : pkm::enumerate_working_modes(model)) {
      pkm::json entry;
      pkm::json signs = pkm::json::array();
      for (std::size_t i = 0; i < mode.size(); ++i) signs.push_back(mode[i]);
      entry["signs"] = signs;
      try {
        const pkm::IkSolution ik = pkm::inverse_kinematics(model, pose, mode);
        entry["reachable"] = true;
        entry["joints"] = pkm::vec_to_json(ik.joints.values);
        entry["within_joint_limits"] = ik.within_joint_limits;
      } catch (const pkm::OutOfReachError&) {
        entry["reachable"] = false;
        entry["joints"] = nullptr;
      }
      list.push_back(entry);
    }
    doc["working_modes"] = list;
  } else {
    const pkm::JointVector joints = parse_joints(joints_text, model);
    doc["joints"] = pkm::vec_to_json(joints.values);
    pkm::json list = pkm::json::array();
    int index = 1;
    for (const auto& pose : pkm::enumerate_assembly_modes(model, joints)) {
      list.push_back({{"index", index++}, {"pose", pkm::vec_to_json(pose.coords)}});
    }
    doc["assembly_modes"] = list;
  }
  write_output(out_path, doc.dump(2) + "\n");
  return 0;
}

int run_synth(double cube, double lo, double hi, int lattice,
              const std::string& model_out, const std::string& report_out) {
  pkm::SynthesisSpec spec;
  spec.cube_edge = cube;
  spec.bounds = pkm::FactorBounds{lo, hi};
  spec.lattice_density = lattice;
  const pkm::SynthesisResult result = pkm::synthesize_orthoglide(spec);

  const pkm::MechanismModel model = pkm::synthesized_model(result);
  {
    std::ofstream out(model_out);
    if (!out) throw pkm::InvalidArgumentError("cannot open output file: " + model_out);
    out << pkm::mechanism_to_json(model).dump(2) << "\n";
  }
  {
    std::ofstream out(report_out);
    if (!out) throw pkm::InvalidArgumentError("cannot open output file: " + report_out);
    out << pkm::synthesis_report_to_json(result, spec.bounds).dump(2) << "\n";
  }
  std::cout << "leg_length " << pkm::format_number(result.leg_length) << "\n"
            << "wrote " << model_out << " and " << report_out << "\n";
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"kinetostatic design tools for parallel kinematic machines"};
  app.require_subcommand(1);

  std::string model_path, pose_text, mode_text, joints_text, out_path;
  double char_length = 0.0;

  auto* analyze = app.add_subcommand("analyze", "kinetostatic report for one pose");
  analyze->add_option("--model", model_path, "mechanism description file")->required();
  analyze->add_option("--pose", pose_text, "pose coordinates, e.g. --pose=0,4")->required();
  analyze->add_option("--mode", mode_text,
                      "working-mode signs, e.g. --mode=-1,1 (required for biglide/orthoglide)");
  analyze->add_option("--char-length", char_length,
                      "characteristic length (mm) homogenizing the 3rpr jacobian");
  analyze->add_option("-o,--out", out_path, "output path (default stdout)");

  std::vector<std::string> region_flags;
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  auto* map = app.add_subcommand("map", "sweep a grid and emit a CSV metric map");
  map->add_option("--model", model_path, "mechanism description file")->required();
  map->add_option("--region", region_flags,
                  "axis=min:max:count, once per pose axis (x,y[,z|phi])")
      ->required()
      ->expected(-1);
  map->add_option("--mode", mode_text, "working-mode signs");
  map->add_option("--lo", lo, "lower amplification bound (adds the dextrous column)");
  map->add_option("--hi", hi, "upper amplification bound");
  map->add_option("-o,--out", out_path, "output path (default stdout)");

  auto* modes = app.add_subcommand("modes", "list working or assembly modes");
  modes->add_option("--model", model_path, "mechanism description file")->required();
  modes->add_option("--pose", pose_text, "pose: list working modes and their IK joints");
  modes->add_option("--joints", joints_text, "joints: list assembly-mode poses");
  modes->add_option("-o,--out", out_path, "output path (default stdout)");

  double cube = 0.0, slo = 0.0, shi = 0.0;
  int lattice = 21;
  std::string model_out = "orthoglide.json", report_out = "synth_report.json";
  auto* synth = app.add_subcommand("synth", "orthoglide dimensional synthesis");
  synth->add_option("--cube", cube, "prescribed cube edge, mm")->required();
  synth->add_option("--lo", slo, "lower amplification bound")->required();
  synth->add_option("--hi", shi, "upper amplification bound")->required();
  synth->add_option("--lattice", lattice, "verification lattice density (default 21)");
  synth->add_option("--model-out", model_out, "mechanism file path");
  synth->add_option("--report-out", report_out, "synthesis report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (analyze->parsed())
    return run_analyze(model_path, pose_text, mode_text, char_length, out_path);
  if (map->parsed()) return run_map(model_path, region_flags, mode_text, lo, hi, out_path);
  if (modes->parsed()) return run_modes(model_path, pose_text, joints_text, out_path);
  return run_synth(cube, slo, shi, lattice, model_out, report_out);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const pkm::OutOfReachError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pkm::UnsupportedOperationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const pkm::InfeasibleSpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
