#include <doctest.h>

#include <cmath>

#include "fas/measures.hpp"
#include "fas/trainer.hpp"

using namespace fas;

namespace {

struct TinySetup {
  Grid grid;
  EigenSystem eig;
  NoiseSchedule sched;
  ReferencePath x0;
  ControlArch arch;

  explicit TinySetup(int K)
      : grid(K),
        eig(EigenSystem::build(K, 1.0, 0.5, 1.0)),
        sched(NoiseSchedule::constant(1.0, 1.0)),
        x0(reference_path(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), grid)) {
    arch.channels = 1;
    arch.n_layers = 1;
    arch.n_modes = std::min(4, K);
    arch.width = 8;
    arch.embed_dim = 16;
  }
};

}  // namespace

TEST_CASE("replay buffer is a FIFO ring with uniform sampling") {
  ReplayBuffer buf(3);
  auto entry = [](double v) { return Eigen::MatrixXd::Constant(1, 1, v); };
  for (int i = 0; i < 5; ++i) buf.push(entry(i), entry(-i));
  CHECK(buf.size() == 3);
  // after 5 pushes into capacity 3, the survivors are 2, 3, 4
  std::vector<double> vals;
  for (std::size_t i = 0; i < 3; ++i) vals.push_back(buf.at(i).x_T(0, 0));
  std::sort(vals.begin(), vals.end());
  CHECK(vals[0] == doctest::Approx(2.0));
  CHECK(vals[2] == doctest::Approx(4.0));
  // pairs stay together
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(buf.at(i).y_T(0, 0) == doctest::Approx(-buf.at(i).x_T(0, 0)));
  rng::Stream rs(1);
  CHECK_NOTHROW(buf.sample(rs));
  ReplayBuffer empty(2);
  rng::Stream rs2(1);
  CHECK_THROWS(empty.sample(rs2));
  CHECK_THROWS(ReplayBuffer(0));
}

TEST_CASE("training runs, logs every epoch, and is seed-deterministic") {
  TinySetup s(8);
  Eigen::VectorXd b(8);
  b << 1, 1, 1, 1, 0, 0, 0, 0;
  QuadraticModeEnergy energy(b, s.x0);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.grad_steps = 5;
  cfg.rollouts = 16;
  cfg.buffer_capacity = 64;
  cfg.batch_size = 8;
  cfg.n_sde_steps = 10;
  cfg.lr = 1e-3;
  cfg.seed = 3;

  int cb_count = 0;
  TrainResult a = train(cfg, s.sched, s.eig, s.arch, energy, s.x0, nullptr, nullptr,
                        [&](const EpochLog&, const ControlParams&) { ++cb_count; });
  CHECK(a.log.size() == 4);
  CHECK(cb_count == 4);
  for (const EpochLog& lg : a.log) {
    CHECK(std::isfinite(lg.loss));
    CHECK(lg.dropped == 0);
  }
  CHECK(a.log[0].buffer_fill == 16);
  CHECK(a.log[3].buffer_fill == 64);

  TrainResult c = train(cfg, s.sched, s.eig, s.arch, energy, s.x0);
  for (std::size_t i = 0; i < a.log.size(); ++i)
    CHECK(a.log[i].loss == doctest::Approx(c.log[i].loss).epsilon(1e-14));
  CHECK((a.params.theta - c.params.theta).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("training loss decreases on an easy quadratic target") {
  TinySetup s(6);
  Eigen::VectorXd b = Eigen::VectorXd::Constant(6, 2.0);
  QuadraticModeEnergy energy(b, s.x0);
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.grad_steps = 20;
  cfg.rollouts = 32;
  cfg.buffer_capacity = 256;
  cfg.batch_size = 16;
  cfg.n_sde_steps = 16;
  cfg.lr = 3e-3;
  cfg.seed = 11;
  TrainResult r = train(cfg, s.sched, s.eig, s.arch, energy, s.x0);
  double early = (r.log[0].loss + r.log[1].loss) / 2;
  double late = (r.log[10].loss + r.log[11].loss) / 2;
  CHECK(late < early);
}

TEST_CASE("soc_cost: two-estimator agreement at zero control and zero energy") {
  TinySetup s(5);
  QuadraticModeEnergy zero(Eigen::VectorXd::Zero(5), s.x0);
  ControlParams p = ControlNet::init(s.arch, 0);
  int n = 4000;
  SocCost c = soc_cost(p, s.sched, s.eig, zero, s.x0, n, 60, 17);

  // direct MC of log q_T over exact terminal marginal draws
  rng::Stream rs(99);
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd r = measures::sample_marginal(1.0, s.sched, s.eig, 1, rs);
    double v = measures::log_rnd(r, s.sched, s.eig, 1.0);
    sum += v;
    sq += v * v;
  }
  double mean = sum / n;
  double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(c.mean - mean) < 3 * (se + c.std_error) + 0.05 * std::abs(mean));
}

TEST_CASE("bridge minibatch marginals match the rollout law") {
  // endpoint-disintegration consistency: pooling bridge draws X_t | X_T over
  // rollout endpoints reproduces the (zero-control) marginal of X_t
  TinySetup s(3);
  ControlParams p = ControlNet::init(s.arch, 0);
  SimOptions so;
  so.n_steps = 50;
  so.batch = 4000;
  so.seed = 23;
  SimResult sim = simulate(p, s.sched, s.eig, s.x0, so);
  double t = 0.5;
  rng::Stream rs(31);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(3);
  for (int b = 0; b < so.batch; ++b) {
    Eigen::MatrixXd rt = measures::sample_bridge(
        sim.terminal_modes.col(b), t, s.sched, s.eig, 1.0, rs);
    sq += rt.col(0).cwiseProduct(rt.col(0));
  }
  for (int k = 0; k < 3; ++k) {
    double target = measures::mode_variance(s.sched, s.eig, k, t);
    // MC error plus Euler bias at dt = 1/50
    CHECK(sq[k] / so.batch == doctest::Approx(target).epsilon(0.1));
  }
}

TEST_CASE("train validates its configuration") {
  TinySetup s(4);
  QuadraticModeEnergy e(Eigen::VectorXd::Zero(4), s.x0);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS(train(cfg, s.sched, s.eig, s.arch, e, s.x0));
  cfg.epochs = 1;
  cfg.lr = 0.0;
  CHECK_THROWS(train(cfg, s.sched, s.eig, s.arch, e, s.x0));
}
