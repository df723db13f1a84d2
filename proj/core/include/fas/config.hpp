#pragma once

#include <memory>
#include <string>

#include "fas/control.hpp"
#include "fas/energy.hpp"
#include "fas/path.hpp"
#include "fas/schedule.hpp"
#include "fas/spectral.hpp"
#include "fas/trainer.hpp"

namespace fas {

/// The full run configuration: one JSON document with sections
/// {grid, eigsys, schedule, arch, train, energy, phys}. Parsing is strict;
/// unknown keys are rejected. Defaults are the synthetic-benchmark settings.
struct FullConfig {
  // grid
  int K = 100;
  double length = 1.0;
  // eigsys
  double kappa = 1e-2;
  double s = 1.0;
  // schedule
  std::string schedule_kind = "geometric";  // "constant" | "geometric"
  double sigma = 1.0;                       // constant schedule
  double beta_min = 0.1;
  double beta_max = 10.0;
  double horizon = 1.0;
  // arch
  ControlArch arch;
  // train
  TrainConfig train;
  // energy
  std::string energy_name = "muller_brown_tpd";
  // "muller_brown_tpd" | "muller_brown_fk" | "quadratic" | "external"
  std::vector<double> A = {-0.558, 1.442};
  std::vector<double> B = {0.624, 0.028};
  std::vector<double> quad_b;       // per-mode coefficients for "quadratic"
  std::string external_command;     // backend command for "external"
  std::string external_workdir = ".";
  double thp_eps = 0.1;
  int idpp_steps = 0;               // reference-path IDPP refinement
  double idpp_step_size = 1e-3;
  int dim_per_atom = 2;
  int refine_steps = 0;             // gradient-flow refinement of the reference
  double refine_step_size = 2e-4;   // against the terminal energy
  // phys
  PhysParams phys;

  Grid grid() const;
  EigenSystem eigsys() const;
  NoiseSchedule schedule() const;
  ReferencePath reference() const;
  std::unique_ptr<EnergyModel> make_energy(const ReferencePath& x0) const;

  Eigen::VectorXd endpoint_a() const;
  Eigen::VectorXd endpoint_b() const;
};

/// Strict parse: every key must be known, sections may be omitted (defaults
/// apply) but unknown sections/keys raise std::invalid_argument.
FullConfig parse_config(const std::string& json_text);
FullConfig load_config_file(const std::string& path);

/// Canonical resolved snapshot (all keys explicit, sorted) for run
/// directories; re-parsing it reproduces the config exactly.
std::string resolved_config(const FullConfig& cfg);

/// FNV-1a hash of the resolved snapshot, hex-encoded.
std::string config_hash(const FullConfig& cfg);

}  // namespace fas
