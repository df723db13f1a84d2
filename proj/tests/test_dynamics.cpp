#include <doctest.h>

#include <cmath>

#include "fas/dynamics.hpp"
#include "fas/measures.hpp"

using namespace fas;

namespace {

ControlParams zero_control(int channels, int K) {
  ControlArch arch;
  arch.channels = channels;
  arch.n_modes = std::min(4, K);
  arch.width = 8;
  arch.embed_dim = 16;
  return ControlNet::init(arch, 0);
}

}  // namespace

TEST_CASE("reference path interpolates the endpoints") {
  Eigen::VectorXd A(2), B(2);
  A << -0.558, 1.442;
  B << 0.624, 0.028;
  ReferencePath ref = reference_path(A, B, Grid(9, 1.0));
  // midpoint of the paper's two minima
  CHECK(ref.x0.interior(4, 0) == doctest::Approx(0.033));
  CHECK(ref.x0.interior(4, 1) == doctest::Approx(0.735));
  CHECK((ref.x0.endpoint_a - A).norm() == doctest::Approx(0.0));
  CHECK((ref.x0.endpoint_b - B).norm() == doctest::Approx(0.0));

  ReferencePath cst = reference_path(A, A, Grid(5));
  for (int i = 0; i < 5; ++i)
    CHECK((cst.x0.interior.row(i).transpose() - A).norm() == doctest::Approx(0.0));
}

TEST_CASE("lift adds the residual and preserves endpoints") {
  Eigen::VectorXd A(2), B(2);
  A << 1.0, 2.0;
  B << -1.0, 0.5;
  ReferencePath ref = reference_path(A, B, Grid(6));
  Eigen::MatrixXd R = Eigen::MatrixXd::Random(6, 2);
  PathSample X = lift(R, ref);
  CHECK((X.interior - ref.x0.interior - R).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((X.endpoint_a - A).norm() == doctest::Approx(0.0));
  CHECK((X.endpoint_b - B).norm() == doctest::Approx(0.0));
  PathSample zero = lift(Eigen::MatrixXd::Zero(6, 2), ref);
  CHECK((zero.interior - ref.x0.interior).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK_THROWS(lift(Eigen::MatrixXd::Zero(5, 2), ref));
}

TEST_CASE("zero-control terminal variance matches the OU marginal oracle") {
  int K = 4;
  Eigen::VectorXd A = Eigen::VectorXd::Zero(1), B = Eigen::VectorXd::Ones(1);
  ReferencePath ref = reference_path(A, B, Grid(K));
  EigenSystem eig = EigenSystem::build(K, 1.0, 0.6, 1.0);
  NoiseSchedule sched = NoiseSchedule::constant(1.0, 1.0);
  SimOptions so;
  so.n_steps = 200;
  so.batch = 10000;
  so.seed = 5;
  SimResult sim = simulate(zero_control(1, K), sched, eig, ref, so);
  for (int k = 0; k < K; ++k) {
    double q = 0.0;
    for (int b = 0; b < so.batch; ++b) {
      double r = sim.terminal_modes(k, b);
      q += r * r;
    }
    q /= so.batch;
    // exact oracle: the discrete-time variance recursion of the Euler scheme
    double lam = eig.lambdas[k];
    double dt = 1.0 / so.n_steps;
    double v = 0.0;
    for (int n = 0; n < so.n_steps; ++n) {
      double sig = sched.sigma_at(n * dt);
      double a = 1.0 - lam * dt;
      v = a * a * v + sig * sig * std::pow(lam, -eig.s) * dt;
    }
    double se = v * std::sqrt(2.0 / so.batch);
    CHECK(std::abs(q - v) < 3 * se);
    // and the continuous-time marginal is approached to first order
    double target = measures::mode_variance(sched, eig, k, 1.0);
    CHECK(std::abs(q - target) < 3 * se + 0.25 * target);
  }
  // boundary pinning is exact for every sample
  for (int b = 0; b < 16; ++b) {
    CHECK((sim.samples[b].endpoint_a - A).norm() == doctest::Approx(0.0));
    CHECK((sim.samples[b].endpoint_b - B).norm() == doctest::Approx(0.0));
  }
  // zero control accrues zero running cost
  CHECK(sim.control_cost.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("one-step Euler gives the exact one-step Gaussian") {
  // oracle: after a single Euler step from 0, R_T ~ N(0, sigma_0^2 l^{-s} dt)
  int K = 1;
  ReferencePath ref = reference_path(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), Grid(K));
  EigenSystem eig = EigenSystem::build(K, 1.0, 1.0, 1.0);
  NoiseSchedule sched = NoiseSchedule::constant(2.0, 1.0);
  SimOptions so;
  so.n_steps = 1;
  so.batch = 20000;
  so.seed = 9;
  SimResult sim = simulate(zero_control(1, K), sched, eig, ref, so);
  double q = sim.terminal_modes.row(0).squaredNorm() / so.batch;
  double target = 4.0 / eig.lambdas[0];  // sigma^2 l^{-s} dt with dt = 1
  CHECK(q == doctest::Approx(target).epsilon(3 * std::sqrt(2.0 / so.batch)));
}

TEST_CASE("simulation is deterministic in the seed and thread count") {
  int K = 6;
  Eigen::VectorXd A = Eigen::VectorXd::Zero(2), B = Eigen::VectorXd::Ones(2);
  ReferencePath ref = reference_path(A, B, Grid(K));
  EigenSystem eig = EigenSystem::build(K, 1.0, 1.0, 1.0);
  NoiseSchedule sched = NoiseSchedule::geometric(0.1, 10.0, 1.0);
  ControlParams params = zero_control(2, K);
  // give the net non-zero output so the control path is exercised
  params.theta.setConstant(0.01);
  SimOptions so;
  so.n_steps = 20;
  so.batch = 8;
  so.seed = 12;
  SimResult a = simulate(params, sched, eig, ref, so);
  SimResult b = simulate(params, sched, eig, ref, so);
  CHECK((a.terminal_modes - b.terminal_modes).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  so.n_threads = 3;
  SimResult c = simulate(params, sched, eig, ref, so);
  CHECK((a.terminal_modes - c.terminal_modes).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("halving the step leaves the zero-control variance within MC error") {
  int K = 3;
  ReferencePath ref = reference_path(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), Grid(K));
  EigenSystem eig = EigenSystem::build(K, 1.0, 0.8, 1.0);
  NoiseSchedule sched = NoiseSchedule::constant(1.0, 1.0);
  ControlParams params = zero_control(1, K);
  auto var0 = [&](int steps) {
    SimOptions so;
    so.n_steps = steps;
    so.batch = 10000;
    so.seed = 77;
    SimResult sim = simulate(params, sched, eig, ref, so);
    return sim.terminal_modes.row(0).squaredNorm() / so.batch;
  };
  double v100 = var0(100), v200 = var0(200);
  double target = measures::mode_variance(sched, eig, 0, 1.0);
  CHECK(std::abs(v100 - v200) < 3 * target * std::sqrt(2.0 / 10000));
}

TEST_CASE("exponential Euler matches the exact OU variance even at coarse steps") {
  int K = 2;
  ReferencePath ref = reference_path(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), Grid(K));
  EigenSystem eig = EigenSystem::build(K, 1.0, 2.0, 1.0);  // stiff
  NoiseSchedule sched = NoiseSchedule::constant(1.0, 1.0);
  SimOptions so;
  so.n_steps = 4;
  so.batch = 20000;
  so.seed = 31;
  so.exponential_euler = true;
  SimResult sim = simulate(zero_control(1, K), sched, eig, ref, so);
  for (int k = 0; k < K; ++k) {
    double q = sim.terminal_modes.row(k).squaredNorm() / so.batch;
    double target = measures::mode_variance(sched, eig, k, 1.0);
    CHECK(std::abs(q - target) < 3 * target * std::sqrt(2.0 / so.batch));
  }
}

TEST_CASE("non-finite control output aborts with a diagnostic") {
  int K = 3;
  ReferencePath ref = reference_path(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), Grid(K));
  EigenSystem eig = EigenSystem::build(K, 1.0, 1.0, 1.0);
  NoiseSchedule sched = NoiseSchedule::constant(1.0, 1.0);
  ControlParams bad = zero_control(1, K);
  bad.theta.setConstant(std::numeric_limits<double>::quiet_NaN());
  SimOptions so;
  so.n_steps = 2;
  so.batch = 2;
  CHECK_THROWS(simulate(bad, sched, eig, ref, so));
}

TEST_CASE("trajectory recording covers every step with pinned boundaries") {
  int K = 4;
  Eigen::VectorXd A(1), B(1);
  A << 2.0;
  B << -1.0;
  ReferencePath ref = reference_path(A, B, Grid(K));
  EigenSystem eig = EigenSystem::build(K, 1.0, 1.0, 1.0);
  NoiseSchedule sched = NoiseSchedule::constant(1.0, 1.0);
  SimOptions so;
  so.n_steps = 5;
  so.batch = 3;
  so.record_trajectory = true;
  SimResult sim = simulate(zero_control(1, K), sched, eig, ref, so);
  REQUIRE(sim.trajectory.size() == 6);
  CHECK(sim.times.front() == doctest::Approx(0.0));
  CHECK(sim.times.back() == doctest::Approx(1.0));
  CHECK(sim.trajectory[0].cwiseAbs().maxCoeff() ==
        doctest::Approx(ref.x0.interior.cwiseAbs().maxCoeff()));
}
