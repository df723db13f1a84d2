#include "fas/energy.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fas/measures.hpp"

namespace fas {

void PhysParams::validate() const {
  if (!(gamma_m > 0.0) || !(kBT > 0.0) || delta_u < 0.0)
    throw std::invalid_argument("PhysParams: gamma_m, kBT must be > 0; delta_u >= 0");
}

double PhysParams::spacing(const Grid& grid) const {
  return delta_u > 0.0 ? delta_u : grid.du();
}

// --- Mueller-Brown ---

namespace {
constexpr double kA[4] = {-200.0, -100.0, -170.0, 15.0};
constexpr double ka[4] = {-1.0, -1.0, -6.5, 0.7};
constexpr double kb[4] = {0.0, 0.0, 11.0, 0.6};
constexpr double kc[4] = {-10.0, -10.0, -6.5, 0.7};
constexpr double kx0[4] = {1.0, 0.0, -0.5, -1.0};
constexpr double ky0[4] = {0.0, 0.5, 1.5, 1.0};
}  // namespace

double muller_brown(const Eigen::Vector2d& p) {
  double v = 0.0;
  for (int i = 0; i < 4; ++i) {
    double dx = p.x() - kx0[i], dy = p.y() - ky0[i];
    v += kA[i] * std::exp(ka[i] * dx * dx + kb[i] * dx * dy + kc[i] * dy * dy);
  }
  return v;
}

Eigen::Vector2d mb_gradient(const Eigen::Vector2d& p) {
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (int i = 0; i < 4; ++i) {
    double dx = p.x() - kx0[i], dy = p.y() - ky0[i];
    double e = kA[i] * std::exp(ka[i] * dx * dx + kb[i] * dx * dy + kc[i] * dy * dy);
    g.x() += e * (2.0 * ka[i] * dx + kb[i] * dy);
    g.y() += e * (kb[i] * dx + 2.0 * kc[i] * dy);
  }
  return g;
}

Eigen::Matrix2d mb_hessian(const Eigen::Vector2d& p) {
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  for (int i = 0; i < 4; ++i) {
    double dx = p.x() - kx0[i], dy = p.y() - ky0[i];
    double e = kA[i] * std::exp(ka[i] * dx * dx + kb[i] * dx * dy + kc[i] * dy * dy);
    double gx = 2.0 * ka[i] * dx + kb[i] * dy;
    double gy = kb[i] * dx + 2.0 * kc[i] * dy;
    h(0, 0) += e * (gx * gx + 2.0 * ka[i]);
    h(0, 1) += e * (gx * gy + kb[i]);
    h(1, 1) += e * (gy * gy + 2.0 * kc[i]);
  }
  h(1, 0) = h(0, 1);
  return h;
}

Potential muller_brown_potential() {
  Potential p;
  p.value = [](const Eigen::VectorXd& x) { return muller_brown(Eigen::Vector2d(x[0], x[1])); };
  p.grad = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return mb_gradient(Eigen::Vector2d(x[0], x[1]));
  };
  p.hess = [](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    return mb_hessian(Eigen::Vector2d(x[0], x[1]));
  };
  return p;
}

// --- Langevin-kernel TPD NLL ---

TpdSyntheticEnergy::TpdSyntheticEnergy(Potential pot, PhysParams phys)
    : pot_(std::move(pot)), phys_(phys) {
  phys_.validate();
}

double TpdSyntheticEnergy::energy(const PathSample& path) const {
  Eigen::MatrixXd X = path.with_endpoints();
  double du = phys_.spacing(path.grid);
  double scale = phys_.gamma_m / (4.0 * phys_.kBT * du);
  double ratio = du / phys_.gamma_m;
  double acc = 0.0;
  for (int u = 0; u + 1 < X.rows(); ++u) {
    Eigen::VectorXd g = pot_.grad(X.row(u).transpose());
    if (!g.allFinite())
      throw std::runtime_error("TpdSyntheticEnergy: non-finite potential gradient");
    acc += (X.row(u + 1) - X.row(u) + ratio * g.transpose()).squaredNorm();
  }
  return scale * acc;
}

Eigen::MatrixXd TpdSyntheticEnergy::gradient(const PathSample& path) const {
  Eigen::MatrixXd X = path.with_endpoints();
  const int K = static_cast<int>(path.interior.rows());
  const int d = path.channels();
  double du = phys_.spacing(path.grid);
  double scale = phys_.gamma_m / (4.0 * phys_.kBT * du);
  double ratio = du / phys_.gamma_m;

  // residuals r_u = X[u+1] - X[u] + ratio grad V(X[u]), u = 0..K
  Eigen::MatrixXd r(X.rows() - 1, d);
  for (int u = 0; u + 1 < X.rows(); ++u) {
    Eigen::VectorXd g = pot_.grad(X.row(u).transpose());
    if (!g.allFinite())
      throw std::runtime_error("TpdSyntheticEnergy: non-finite potential gradient");
    r.row(u) = X.row(u + 1) - X.row(u) + ratio * g.transpose();
  }

  Eigen::MatrixXd grad(K, d);
  for (int i = 0; i < K; ++i) {
    int j = i + 1;  // index into the full path
    Eigen::MatrixXd H = pot_.hess(X.row(j).transpose());
    Eigen::VectorXd gi = 2.0 * r.row(j - 1).transpose()  // X[j] enters r_{j-1} as +X
                         - 2.0 * r.row(j).transpose()    // and r_j as -X
                         + 2.0 * ratio * (H * r.row(j).transpose());
    grad.row(i) = (scale * gi).transpose();
  }
  return grad;
}

// --- Feynman-Kac / chain-of-states NLL ---

TpdFkEnergy::TpdFkEnergy(Potential pot, PhysParams phys)
    : pot_(std::move(pot)), phys_(phys) {
  phys_.validate();
}

double TpdFkEnergy::energy(const PathSample& path) const {
  Eigen::MatrixXd X = path.with_endpoints();
  double du = phys_.spacing(path.grid);
  double spring = 0.5 * phys_.gamma_m / du;
  double acc = 0.0;
  for (int u = 0; u + 1 < X.rows(); ++u) {
    double v = pot_.value(X.row(u).transpose());
    if (!std::isfinite(v)) throw std::runtime_error("TpdFkEnergy: non-finite potential");
    acc += v + 0.5 * spring * (X.row(u + 1) - X.row(u)).squaredNorm();
  }
  return acc / phys_.kBT;
}

Eigen::MatrixXd TpdFkEnergy::gradient(const PathSample& path) const {
  Eigen::MatrixXd X = path.with_endpoints();
  const int K = static_cast<int>(path.interior.rows());
  const int d = path.channels();
  double du = phys_.spacing(path.grid);
  double spring = 0.5 * phys_.gamma_m / du;
  Eigen::MatrixXd grad(K, d);
  for (int i = 0; i < K; ++i) {
    int j = i + 1;
    Eigen::VectorXd g = pot_.grad(X.row(j).transpose()) +
                        spring * (2.0 * X.row(j) - X.row(j - 1) - X.row(j + 1)).transpose();
    grad.row(i) = (g / phys_.kBT).transpose();
  }
  return grad;
}

// --- IDPP ---

namespace {

struct IdppPairs {
  int n_atoms, dim;
  Eigen::VectorXd dA, dB;  // upper-triangular pair distances, row-major i<j
};

IdppPairs idpp_setup(const Eigen::VectorXd& A, const Eigen::VectorXd& B, int dim) {
  if (A.size() != B.size() || A.size() % dim != 0)
    throw std::invalid_argument("idpp: endpoint size not divisible by dim_per_atom");
  IdppPairs s;
  s.dim = dim;
  s.n_atoms = static_cast<int>(A.size()) / dim;
  int np = s.n_atoms * (s.n_atoms - 1) / 2;
  s.dA.resize(np);
  s.dB.resize(np);
  int p = 0;
  for (int i = 0; i < s.n_atoms; ++i)
    for (int j = i + 1; j < s.n_atoms; ++j, ++p) {
      s.dA[p] = (A.segment(i * dim, dim) - A.segment(j * dim, dim)).norm();
      s.dB[p] = (B.segment(i * dim, dim) - B.segment(j * dim, dim)).norm();
      if (s.dA[p] <= 0.0 || s.dB[p] <= 0.0)
        throw std::invalid_argument("idpp: coincident atoms in an endpoint");
    }
  return s;
}

}  // namespace

double idpp_energy(const PathSample& path, const Eigen::VectorXd& A,
                   const Eigen::VectorXd& B, int dim_per_atom) {
  IdppPairs s = idpp_setup(A, B, dim_per_atom);
  if (s.n_atoms < 2) return 0.0;
  double acc = 0.0;
  for (int img = 0; img < path.interior.rows(); ++img) {
    double u = path.grid.point(img) / path.grid.length;
    Eigen::VectorXd x = path.interior.row(img).transpose();
    int p = 0;
    for (int i = 0; i < s.n_atoms; ++i)
      for (int j = i + 1; j < s.n_atoms; ++j, ++p) {
        double dt = (1.0 - u) * s.dA[p] + u * s.dB[p];
        double dij = (x.segment(i * s.dim, s.dim) - x.segment(j * s.dim, s.dim)).norm();
        double w = 1.0 / (dt * dt * dt * dt);
        acc += w * (dij - dt) * (dij - dt);
      }
  }
  return acc;
}

Eigen::MatrixXd idpp_gradient(const PathSample& path, const Eigen::VectorXd& A,
                              const Eigen::VectorXd& B, int dim_per_atom) {
  IdppPairs s = idpp_setup(A, B, dim_per_atom);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(path.interior.rows(), path.channels());
  if (s.n_atoms < 2) return grad;
  for (int img = 0; img < path.interior.rows(); ++img) {
    double u = path.grid.point(img) / path.grid.length;
    Eigen::VectorXd x = path.interior.row(img).transpose();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    int p = 0;
    for (int i = 0; i < s.n_atoms; ++i)
      for (int j = i + 1; j < s.n_atoms; ++j, ++p) {
        double dt = (1.0 - u) * s.dA[p] + u * s.dB[p];
        Eigen::VectorXd diff = x.segment(i * s.dim, s.dim) - x.segment(j * s.dim, s.dim);
        double dij = diff.norm();
        if (dij == 0.0) continue;  // flat direction; subgradient 0
        double w = 1.0 / (dt * dt * dt * dt);
        Eigen::VectorXd dd = 2.0 * w * (dij - dt) * diff / dij;
        g.segment(i * s.dim, s.dim) += dd;
        g.segment(j * s.dim, s.dim) -= dd;
      }
    grad.row(img) = g.transpose();
  }
  return grad;
}

IdppEnergy::IdppEnergy(Eigen::VectorXd A, Eigen::VectorXd B, int dim_per_atom)
    : A_(std::move(A)), B_(std::move(B)), dim_(dim_per_atom) {
  idpp_setup(A_, B_, dim_);  // validate eagerly
}

double IdppEnergy::energy(const PathSample& path) const {
  return idpp_energy(path, A_, B_, dim_);
}

Eigen::MatrixXd IdppEnergy::gradient(const PathSample& path) const {
  return idpp_gradient(path, A_, B_, dim_);
}

// --- Quadratic mode energy ---

QuadraticModeEnergy::QuadraticModeEnergy(Eigen::VectorXd b, ReferencePath x0)
    : b_(std::move(b)), x0_(std::move(x0)), basis_(x0_.x0.grid.n_interior) {
  if ((b_.array() < 0.0).any())
    throw std::invalid_argument("QuadraticModeEnergy: coefficients must be >= 0");
  if (b_.size() != x0_.x0.grid.n_interior)
    throw std::invalid_argument("QuadraticModeEnergy: one coefficient per mode required");
}

double QuadraticModeEnergy::energy(const PathSample& path) const {
  Eigen::MatrixXd R = path.interior - x0_.x0.interior;
  Eigen::MatrixXd modes = basis_.dst(R);
  double acc = 0.0;
  for (int k = 0; k < modes.rows(); ++k) acc += b_[k] * modes.row(k).squaredNorm();
  return 0.5 * acc;
}

Eigen::MatrixXd QuadraticModeEnergy::gradient(const PathSample& path) const {
  Eigen::MatrixXd R = path.interior - x0_.x0.interior;
  Eigen::MatrixXd modes = basis_.dst(R);
  return basis_.idst(scale_modes(modes, b_));
}

// --- External backend ---

ExternalEnergy::ExternalEnergy(std::string command, std::string workdir)
    : command_(std::move(command)), workdir_(std::move(workdir)) {}

void ExternalEnergy::exchange(const PathSample& path) const {
  if (have_ && last_query_.rows() == path.interior.rows() &&
      last_query_.cols() == path.interior.cols() && last_query_ == path.interior)
    return;
  namespace fs = std::filesystem;
  fs::path req = fs::path(workdir_) / "fas_energy_request.csv";
  fs::path resp = fs::path(workdir_) / "fas_energy_response.csv";
  std::error_code ec;
  fs::remove(resp, ec);
  {
    std::ofstream out(req);
    if (!out) throw std::runtime_error("ExternalEnergy: cannot write " + req.string());
    out.precision(17);
    for (int i = 0; i < path.interior.rows(); ++i)
      for (int c = 0; c < path.interior.cols(); ++c)
        out << i << ',' << c << ',' << path.interior(i, c) << '\n';
  }
  std::string cmd = "cd '" + workdir_ + "' && " + command_;
  if (std::system(cmd.c_str()) != 0)
    throw std::runtime_error("ExternalEnergy: backend command failed");
  std::ifstream in(resp);
  if (!in) throw std::runtime_error("ExternalEnergy: backend wrote no response");
  std::string line;
  if (!std::getline(in, line) || line.rfind("energy,", 0) != 0)
    throw std::runtime_error("ExternalEnergy: response must start with 'energy,<value>'");
  last_energy_ = std::stod(line.substr(7));
  last_grad_.setZero(path.interior.rows(), path.interior.cols());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw std::runtime_error("ExternalEnergy: malformed response row");
    last_grad_(std::stoi(a), std::stoi(b)) = std::stod(c);
  }
  last_query_ = path.interior;
  have_ = true;
}

double ExternalEnergy::energy(const PathSample& path) const {
  exchange(path);
  return last_energy_;
}

Eigen::MatrixXd ExternalEnergy::gradient(const PathSample& path) const {
  exchange(path);
  return last_grad_;
}

// --- Clipped adjoint target ---

Eigen::MatrixXd clip_gradient(const Eigen::Ref<const Eigen::MatrixXd>& v,
                              double alpha_max, ClipMode mode) {
  if (!(alpha_max > 0.0)) throw std::invalid_argument("clip_gradient: alpha_max must be > 0");
  Eigen::MatrixXd out = v;
  if (mode == ClipMode::Global) {
    double n = out.norm();
    if (n > alpha_max) out *= alpha_max / n;
  } else {
    for (int i = 0; i < out.rows(); ++i) {
      double n = out.row(i).norm();
      if (n > alpha_max) out.row(i) *= alpha_max / n;
    }
  }
  return out;
}

std::optional<Eigen::MatrixXd> terminal_adjoint(
    const EnergyModel& energy, const PathSample& X_T, const ReferencePath& x0,
    const NoiseSchedule& sched, const EigenSystem& eig, double alpha_max,
    double lambda_reg, const EnergyModel* reg, ClipMode mode) {
  Eigen::MatrixXd G;
  try {
    G = energy.gradient(X_T);
    if (lambda_reg != 0.0 && reg) G += lambda_reg * reg->gradient(X_T);
  } catch (const std::runtime_error&) {
    return std::nullopt;
  }
  SineBasis basis(X_T.grid.n_interior);
  Eigen::MatrixXd R = X_T.interior - x0.x0.interior;
  G += basis.idst(measures::grad_log_rnd(basis.dst(R), sched, eig, sched.horizon));
  if (!G.allFinite()) return std::nullopt;
  return clip_gradient(G, alpha_max, mode);
}

}  // namespace fas
