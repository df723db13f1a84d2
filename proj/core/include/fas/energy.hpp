#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>

#include "fas/path.hpp"
#include "fas/schedule.hpp"
#include "fas/spectral.hpp"

namespace fas {

/// Physical constants of the transition-path density.
struct PhysParams {
  double gamma_m = 1.0;   // friction x mass
  double kBT = 5.0;       // thermal energy
  double delta_u = 0.0;   // image spacing; 0 = derive from grid as L/(K+1)

  void validate() const;
  double spacing(const Grid& grid) const;
};

/// Terminal energy functional over paths. Implementations must pass the
/// finite-difference gradient gate before being used in training.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;
  virtual double energy(const PathSample& path) const = 0;
  /// dU/dX on the interior grid, K x d.
  virtual Eigen::MatrixXd gradient(const PathSample& path) const = 0;
};

/// A scalar potential with its derivatives, V: R^d -> R.
struct Potential {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hess;
};

// --- Mueller-Brown potential (closed form) ---
double muller_brown(const Eigen::Vector2d& p);
Eigen::Vector2d mb_gradient(const Eigen::Vector2d& p);
Eigen::Matrix2d mb_hessian(const Eigen::Vector2d& p);
Potential muller_brown_potential();

/// Langevin-kernel transition-path NLL:
///   U = sum_u ||X[u+1] - X[u] + (du/gm) grad V(X[u])||^2 * gm/(4 kBT du)
/// over all consecutive pairs including both pinned endpoints.
class TpdSyntheticEnergy : public EnergyModel {
 public:
  TpdSyntheticEnergy(Potential pot, PhysParams phys);
  double energy(const PathSample& path) const override;
  Eigen::MatrixXd gradient(const PathSample& path) const override;

 private:
  Potential pot_;
  PhysParams phys_;
};

/// Feynman-Kac / chain-of-states NLL:
///   U = (1/kBT) sum_u [ V(X[u]) + (k/2)||X[u+1] - X[u]||^2 ],  k = gm/(2 du).
class TpdFkEnergy : public EnergyModel {
 public:
  TpdFkEnergy(Potential pot, PhysParams phys);
  double energy(const PathSample& path) const override;
  Eigen::MatrixXd gradient(const PathSample& path) const override;

 private:
  Potential pot_;
  PhysParams phys_;
};

/// IDPP mismatch over a path of multi-atom images. Each image row packs
/// n_atoms blocks of dim_per_atom coordinates; with fewer than two atoms the
/// functional is identically zero.
double idpp_energy(const PathSample& path, const Eigen::VectorXd& A,
                   const Eigen::VectorXd& B, int dim_per_atom = 3);
Eigen::MatrixXd idpp_gradient(const PathSample& path, const Eigen::VectorXd& A,
                              const Eigen::VectorXd& B, int dim_per_atom = 3);

/// IDPP as an EnergyModel (for gradient-flow refinement and regularization).
class IdppEnergy : public EnergyModel {
 public:
  IdppEnergy(Eigen::VectorXd A, Eigen::VectorXd B, int dim_per_atom = 3);
  double energy(const PathSample& path) const override;
  Eigen::MatrixXd gradient(const PathSample& path) const override;

 private:
  Eigen::VectorXd A_, B_;
  int dim_;
};

/// Closed-form Gaussian validation target: U(X) = 1/2 sum_k b_k r_k^2 over
/// residual mode coefficients r = dst(X - x0). The tilted per-mode variance
/// is (1/q_inf + b_k)^{-1}.
class QuadraticModeEnergy : public EnergyModel {
 public:
  QuadraticModeEnergy(Eigen::VectorXd b, ReferencePath x0);
  double energy(const PathSample& path) const override;
  Eigen::MatrixXd gradient(const PathSample& path) const override;
  const Eigen::VectorXd& coefficients() const { return b_; }

 private:
  Eigen::VectorXd b_;
  ReferencePath x0_;
  SineBasis basis_;
};

/// Out-of-process backend: writes the query path as CSV, runs a command, and
/// reads the energy and gradient back. Request file `fas_energy_request.csv`
/// holds rows (u_index, channel, value); the command must write
/// `fas_energy_response.csv` with a first row `energy,<value>` followed by
/// rows (u_index, channel, dvalue).
class ExternalEnergy : public EnergyModel {
 public:
  ExternalEnergy(std::string command, std::string workdir);
  double energy(const PathSample& path) const override;
  Eigen::MatrixXd gradient(const PathSample& path) const override;

 private:
  void exchange(const PathSample& path) const;
  std::string command_, workdir_;
  mutable Eigen::MatrixXd last_query_, last_grad_;
  mutable double last_energy_ = 0.0;
  mutable bool have_ = false;
};

enum class ClipMode { Global, PerPoint };

/// Rescale v so the flattened 2-norm (or each row norm, per-point mode) does
/// not exceed alpha_max. Idempotent.
Eigen::MatrixXd clip_gradient(const Eigen::Ref<const Eigen::MatrixXd>& v,
                              double alpha_max, ClipMode mode = ClipMode::Global);

/// Clipped adjoint target Y_T = clip(D_x g(X_T)) where
/// g = U + lambda_reg * E_idpp + log q_T(residual). Returns nullopt (sample
/// dropped) if the gradient is non-finite.
std::optional<Eigen::MatrixXd> terminal_adjoint(
    const EnergyModel& energy, const PathSample& X_T, const ReferencePath& x0,
    const NoiseSchedule& sched, const EigenSystem& eig, double alpha_max,
    double lambda_reg = 0.0, const EnergyModel* reg = nullptr,
    ClipMode mode = ClipMode::Global);

}  // namespace fas
