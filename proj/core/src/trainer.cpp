#include "fas/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "fas/measures.hpp"
#include "fas/metrics.hpp"
#include "fas/optimizer.hpp"
#include "fas/rng.hpp"

namespace fas {

void TrainConfig::validate() const {
  if (epochs < 1 || grad_steps < 1 || rollouts < 1 || buffer_capacity < 1 ||
      n_sde_steps < 1 || batch_size < 1)
    throw std::invalid_argument("TrainConfig: all counts must be positive");
  if (!(lr > 0.0) || !(alpha_max > 0.0))
    throw std::invalid_argument("TrainConfig: lr and alpha_max must be > 0");
  if (lambda_reg < 0.0) throw std::invalid_argument("TrainConfig: lambda_reg must be >= 0");
}

namespace {

// stream sub-keys: 1 = rollout seeds, 3 = gradient-step draws
constexpr std::uint64_t kRollKey = 1;
constexpr std::uint64_t kStepKey = 3;

}  // namespace

TrainResult train(const TrainConfig& cfg, const NoiseSchedule& sched,
                  const EigenSystem& eig, const ControlArch& arch,
                  const EnergyModel& energy, const ReferencePath& x0,
                  const Potential* pot, const EnergyModel* reg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  const Grid& grid = x0.x0.grid;
  const int K = grid.n_interior;
  const int d = x0.x0.channels();
  if (eig.n_modes() != K) throw std::invalid_argument("train: eigensystem size must match grid");
  const double T = sched.horizon;
  SineBasis basis(K);
  const Eigen::MatrixXd& E = basis.matrix();

  TrainResult res;
  res.params = ControlNet::init(arch, cfg.seed);
  AdamOptimizer opt(ControlNet::param_count(arch), cfg.lr);
  ReplayBuffer buffer(static_cast<std::size_t>(cfg.buffer_capacity));

  int consecutive_bad = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    EpochLog lg;
    lg.epoch = epoch;

    // --- rollouts with the frozen current control ---
    SimOptions so;
    so.n_steps = cfg.n_sde_steps;
    so.batch = cfg.rollouts;
    so.seed = rng::Stream::keyed({cfg.seed, kRollKey, static_cast<std::uint64_t>(epoch)}).next_u64();
    so.exponential_euler = cfg.exponential_euler;
    so.n_threads = cfg.n_threads;
    SimResult sim = simulate(res.params, sched, eig, x0, so);

    double ets_sum = 0.0, ets_sq = 0.0;
    int ets_n = 0;
    for (const PathSample& s : sim.samples) {
      auto y = terminal_adjoint(energy, s, x0, sched, eig, cfg.alpha_max,
                                cfg.lambda_reg, reg, cfg.clip_mode);
      if (!y) {
        ++lg.dropped;
        continue;
      }
      buffer.push(s.interior, std::move(*y));
      if (pot) {
        double e = metrics::ets(s, *pot);
        ets_sum += e;
        ets_sq += e * e;
        ++ets_n;
      }
    }
    res.total_dropped += lg.dropped;
    if (pot && ets_n > 0) {
      lg.ets_mean = ets_sum / ets_n;
      lg.ets_std = std::sqrt(std::max(0.0, ets_sq / ets_n - lg.ets_mean * lg.ets_mean));
    } else {
      lg.ets_mean = lg.ets_std = std::numeric_limits<double>::quiet_NaN();
    }
    lg.buffer_fill = buffer.size();

    // --- gradient steps on bridge-resampled minibatches ---
    bool bad_epoch = buffer.empty();
    double loss_acc = 0.0;
    int loss_n = 0;
    if (!bad_epoch) {
      Eigen::MatrixXd X(K, static_cast<Eigen::Index>(cfg.batch_size) * d);
      Eigen::MatrixXd Y(K, static_cast<Eigen::Index>(cfg.batch_size) * d);
      Eigen::MatrixXd modes(K, static_cast<Eigen::Index>(cfg.batch_size) * d);
      for (int step = 0; step < cfg.grad_steps; ++step) {
        rng::Stream rs = rng::Stream::keyed({cfg.seed, kStepKey,
                                             static_cast<std::uint64_t>(epoch),
                                             static_cast<std::uint64_t>(step)});
        double t = rs.uniform(0.0, T);
        for (int b = 0; b < cfg.batch_size; ++b) {
          const ReplayBuffer::Entry& e = buffer.sample(rs);
          Eigen::MatrixXd rT = basis.dst(e.x_T - x0.x0.interior);
          modes.middleCols(static_cast<Eigen::Index>(b) * d, d) =
              measures::sample_bridge(rT, t, sched, eig, T, rs);
          Y.middleCols(static_cast<Eigen::Index>(b) * d, d) = e.y_T;
        }
        X = E * modes;
        for (int b = 0; b < cfg.batch_size; ++b)
          X.middleCols(static_cast<Eigen::Index>(b) * d, d) += x0.x0.interior;
        try {
          std::vector<double> ts(cfg.batch_size, t);
          auto lr = ControlNet::loss_and_grad(res.params, X, Y, cfg.batch_size, grid,
                                              ts, cfg.weighting, sched, eig);
          opt.step(res.params.theta, lr.grad);
          loss_acc += lr.loss;
          ++loss_n;
        } catch (const std::runtime_error&) {
          bad_epoch = true;
          break;
        }
      }
    }
    lg.loss = loss_n > 0 ? loss_acc / loss_n
                         : std::numeric_limits<double>::quiet_NaN();
    if (bad_epoch || !std::isfinite(lg.loss)) {
      if (++consecutive_bad >= 3)
        throw std::runtime_error("train: non-finite loss for 3 consecutive epochs (epoch " +
                                 std::to_string(epoch) + ")");
    } else {
      consecutive_bad = 0;
    }

    lg.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
    res.log.push_back(lg);
    if (on_epoch) on_epoch(lg, res.params);
  }
  return res;
}

SocCost soc_cost(const ControlParams& control, const NoiseSchedule& sched,
                 const EigenSystem& eig, const EnergyModel& energy,
                 const ReferencePath& x0, int n_samples, int n_steps,
                 std::uint64_t seed, double lambda_reg, const EnergyModel* reg) {
  if (n_samples < 1) throw std::invalid_argument("soc_cost: n_samples must be >= 1");
  SimOptions so;
  so.n_steps = n_steps;
  so.batch = n_samples;
  so.seed = seed;
  SimResult sim = simulate(control, sched, eig, x0, so);
  SineBasis basis(x0.x0.grid.n_interior);
  double sum = 0.0, sq = 0.0;
  for (int b = 0; b < n_samples; ++b) {
    const PathSample& s = sim.samples[b];
    double g = energy.energy(s);
    if (lambda_reg != 0.0 && reg) g += lambda_reg * reg->energy(s);
    g += measures::log_rnd(basis.dst(s.interior - x0.x0.interior), sched, eig,
                           sched.horizon);
    double c = sim.control_cost[b] + g;
    sum += c;
    sq += c * c;
  }
  SocCost out;
  out.n = n_samples;
  out.mean = sum / n_samples;
  double var = std::max(0.0, sq / n_samples - out.mean * out.mean);
  out.std_error = std::sqrt(var / n_samples);
  return out;
}

}  // namespace fas
