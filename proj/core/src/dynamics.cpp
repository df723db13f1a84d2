#include "fas/dynamics.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "fas/rng.hpp"

namespace fas {

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FAS_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

SimResult simulate(const ControlParams& control, const NoiseSchedule& sched,
                   const EigenSystem& eig, const ReferencePath& x0,
                   const SimOptions& opts) {
  if (opts.n_steps < 1) throw std::invalid_argument("simulate: n_steps must be >= 1");
  if (opts.batch < 1) throw std::invalid_argument("simulate: batch must be >= 1");
  const Grid& grid = x0.x0.grid;
  const int K = grid.n_interior;
  if (eig.n_modes() != K)
    throw std::invalid_argument("simulate: eigensystem size must match grid");
  const int d = x0.x0.channels();
  const int B = opts.batch;
  const double T = sched.horizon;
  const double dt = T / opts.n_steps;
  const double sqdt = std::sqrt(dt);

  const Eigen::VectorXd& lam = eig.lambdas;
  const Eigen::VectorXd qw = eig.q_weights();              // lambda^{-s}
  const Eigen::VectorXd sqw = qw.array().sqrt();           // lambda^{-s/2}
  SineBasis basis(K);
  const Eigen::MatrixXd& E = basis.matrix();

  SimResult res;
  res.terminal_modes.setZero(K, static_cast<Eigen::Index>(B) * d);
  res.control_cost.setZero(B);
  res.samples.resize(B);
  if (opts.record_trajectory) {
    res.trajectory.assign(opts.n_steps + 1,
                          Eigen::MatrixXd(K, static_cast<Eigen::Index>(B) * d));
    res.times.resize(opts.n_steps + 1);
    for (int i = 0; i <= opts.n_steps; ++i) res.times[i] = i * dt;
  }

  auto roll = [&](int b0, int b1) {
    const int nb = b1 - b0;
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(K, static_cast<Eigen::Index>(nb) * d);
    Eigen::MatrixXd eps(K, static_cast<Eigen::Index>(nb) * d);
    Eigen::MatrixXd x0_pack(K, static_cast<Eigen::Index>(nb) * d);
    for (int b = 0; b < nb; ++b)
      x0_pack.middleCols(static_cast<Eigen::Index>(b) * d, d) = x0.x0.interior;

    for (int step = 0; step < opts.n_steps; ++step) {
      const double t = step * dt;
      const double sig = sched.sigma_at(t);

      Eigen::MatrixXd X = x0_pack + E * R;  // lifted grid values
      if (opts.record_trajectory)
        res.trajectory[step].middleCols(static_cast<Eigen::Index>(b0) * d,
                                        static_cast<Eigen::Index>(nb) * d) = X;

      std::vector<double> ts(nb, t);
      Eigen::MatrixXd u = ControlNet::forward(control, X, nb, grid, ts);
      if (!u.allFinite())
        throw std::runtime_error("simulate: control produced NaN at step " +
                                 std::to_string(step));
      Eigen::MatrixXd ut = E * u;  // mode coefficients of the control

      Eigen::ArrayXd decay = (-(T - t) * lam.array()).exp();
      // alpha_k = sigma lambda^{-s/2} e^{-(T-t)lambda} u~_k; drift = sigma
      // lambda^{-s/2} alpha
      Eigen::ArrayXd aw = sig * sqw.array() * decay;
      for (int b = 0; b < nb; ++b) {
        double c = 0.0;
        for (int c0 = 0; c0 < d; ++c0)
          c += (aw * ut.col(static_cast<Eigen::Index>(b) * d + c0).array()).square().sum();
        res.control_cost[b0 + b] += 0.5 * c * dt;
      }

      for (int b = 0; b < nb; ++b)
        for (int k = 0; k < K; ++k) {
          rng::Stream rs = rng::Stream::keyed(
              {opts.seed, static_cast<std::uint64_t>(b0 + b),
               static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(k)});
          for (int c0 = 0; c0 < d; ++c0)
            eps(k, static_cast<Eigen::Index>(b) * d + c0) = rs.normal();
        }

      if (!opts.exponential_euler) {
        for (Eigen::Index col = 0; col < R.cols(); ++col)
          R.col(col).array() +=
              (-lam.array() * R.col(col).array() +
               sig * aw * sqw.array() * ut.col(col).array()) * dt +
              sig * sqw.array() * sqdt * eps.col(col).array();
      } else {
        Eigen::ArrayXd ed = (-dt * lam.array()).exp();
        Eigen::ArrayXd phi = (1.0 - ed) / lam.array();  // (1-e^{-l dt})/l
        Eigen::ArrayXd nsd =
            (sig * sig * qw.array() * (-((-2.0 * dt * lam.array()).exp() - 1.0)) /
             (2.0 * lam.array())).sqrt();
        for (Eigen::Index col = 0; col < R.cols(); ++col)
          R.col(col).array() = ed * R.col(col).array() +
                               phi * sig * aw * sqw.array() * ut.col(col).array() +
                               nsd * eps.col(col).array();
      }
      if (!R.allFinite())
        throw std::runtime_error(
            "simulate: non-finite state at step " + std::to_string(step) +
            "; reduce the step size or kappa");
    }

    res.terminal_modes.middleCols(static_cast<Eigen::Index>(b0) * d,
                                  static_cast<Eigen::Index>(nb) * d) = R;
    Eigen::MatrixXd XT = x0_pack + E * R;
    if (opts.record_trajectory)
      res.trajectory[opts.n_steps].middleCols(static_cast<Eigen::Index>(b0) * d,
                                              static_cast<Eigen::Index>(nb) * d) = XT;
    for (int b = 0; b < nb; ++b) {
      Eigen::MatrixXd Rb = XT.middleCols(static_cast<Eigen::Index>(b) * d, d) -
                           x0.x0.interior;
      res.samples[b0 + b] = lift(Rb, x0);
    }
  };

  int workers = std::min(worker_count(opts.n_threads), B);
  if (workers <= 1) {
    roll(0, B);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(workers);
    int base = B / workers, extra = B % workers, b0 = 0;
    for (int w = 0; w < workers; ++w) {
      int b1 = b0 + base + (w < extra ? 1 : 0);
      pool.emplace_back([&, w, b0, b1] {
        try {
          roll(b0, b1);
        } catch (...) {
          errs[w] = std::current_exception();
        }
      });
      b0 = b1;
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
  return res;
}

}  // namespace fas
