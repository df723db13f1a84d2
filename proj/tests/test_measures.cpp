#include <doctest.h>

#include <cmath>

#include "fas/measures.hpp"

using namespace fas;

namespace {

// independent oracle: Simpson quadrature of int_0^t sigma_s^2 e^{-2(t-s)l} l^{-s} ds
double quad_variance(const NoiseSchedule& sched, const EigenSystem& eig, int k,
                     double t, int n = 20000) {
  if (t == 0.0) return 0.0;
  double l = eig.lambdas[k];
  double qw = std::pow(l, -eig.s);
  auto f = [&](double s) {
    double sig = sched.sigma_at(s);
    return sig * sig * std::exp(-2.0 * (t - s) * l) * qw;
  };
  double h = t / n, acc = f(0.0) + f(t);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return acc * h / 3.0;
}

double gauss_logpdf(double x, double var) {
  return -0.5 * (std::log(2.0 * M_PI * var) + x * x / var);
}

}  // namespace

TEST_CASE("mode variance matches quadrature, constant schedule") {
  EigenSystem eig = EigenSystem::build(6, 1.0, 0.8, 1.0);
  NoiseSchedule s = NoiseSchedule::constant(1.3, 1.0);
  for (int k : {0, 2, 5})
    for (double t : {0.1, 0.5, 1.0})
      CHECK(measures::mode_variance(s, eig, k, t) ==
            doctest::Approx(quad_variance(s, eig, k, t)).epsilon(1e-8));
}

TEST_CASE("mode variance matches quadrature, geometric schedule") {
  EigenSystem eig = EigenSystem::build(6, 1.0, 0.8, 1.0);
  NoiseSchedule s = NoiseSchedule::geometric(0.1, 10.0, 1.0);
  for (int k : {0, 3, 5})
    for (double t : {0.05, 0.4, 1.0})
      CHECK(measures::mode_variance(s, eig, k, t) ==
            doctest::Approx(quad_variance(s, eig, k, t)).epsilon(1e-8));
}

TEST_CASE("mode variance edge cases") {
  EigenSystem eig = EigenSystem::build(3, 1.0, 1.0, 1.0);
  NoiseSchedule s = NoiseSchedule::constant(1.0, 1.0);
  CHECK(measures::mode_variance(s, eig, 0, 0.0) == doctest::Approx(0.0));
  CHECK_THROWS(measures::mode_variance(s, eig, -1, 0.5));
  CHECK_THROWS(measures::mode_variance(s, eig, 3, 0.5));
  CHECK_THROWS(measures::mode_variance(s, eig, 0, 1.5));
}

TEST_CASE("constant-schedule variance approaches the invariant value") {
  EigenSystem eig = EigenSystem::build(3, 1.0, 1.0, 1.0);
  NoiseSchedule s = NoiseSchedule::constant(0.7, 50.0);
  for (int k = 0; k < 3; ++k)
    CHECK(measures::mode_variance(s, eig, k, 50.0) ==
          doctest::Approx(measures::invariant_variance(s, eig, k)).epsilon(1e-10));
}

TEST_CASE("log RND equals the Gaussian log-density-ratio oracle") {
  rng::Stream rs(7);
  for (bool geometric : {false, true}) {
    EigenSystem eig = EigenSystem::build(5, 1.0, 0.9, 1.2);
    NoiseSchedule s = geometric ? NoiseSchedule::geometric(0.1, 10.0, 1.0)
                                : NoiseSchedule::constant(1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::MatrixXd r(5, 2);
      for (int k = 0; k < 5; ++k)
        for (int c = 0; c < 2; ++c) r(k, c) = rs.normal();
      double oracle = 0.0;
      for (int k = 0; k < 5; ++k) {
        double qT = measures::mode_variance(s, eig, k, 1.0);
        double qi = measures::invariant_variance(s, eig, k);
        for (int c = 0; c < 2; ++c)
          oracle += gauss_logpdf(r(k, c), qT) - gauss_logpdf(r(k, c), qi);
      }
      CHECK(measures::log_rnd(r, s, eig, 1.0) == doctest::Approx(oracle).epsilon(1e-10));
    }
  }
}

TEST_CASE("grad log RND matches finite differences") {
  EigenSystem eig = EigenSystem::build(4, 1.0, 0.9, 1.0);
  NoiseSchedule s = NoiseSchedule::geometric(0.2, 5.0, 1.0);
  rng::Stream rs(11);
  Eigen::MatrixXd r(4, 2);
  for (int k = 0; k < 4; ++k)
    for (int c = 0; c < 2; ++c) r(k, c) = rs.normal();
  Eigen::MatrixXd g = measures::grad_log_rnd(r, s, eig, 1.0);
  double h = 1e-6;
  for (int k = 0; k < 4; ++k)
    for (int c = 0; c < 2; ++c) {
      Eigen::MatrixXd rp = r, rm = r;
      rp(k, c) += h;
      rm(k, c) -= h;
      double fd = (measures::log_rnd(rp, s, eig, 1.0) -
                   measures::log_rnd(rm, s, eig, 1.0)) / (2 * h);
      CHECK(g(k, c) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("bridge sample is exact at the endpoints of [0, T]") {
  EigenSystem eig = EigenSystem::build(3, 1.0, 1.0, 1.0);
  NoiseSchedule s = NoiseSchedule::constant(1.0, 1.0);
  Eigen::MatrixXd rT = Eigen::MatrixXd::Constant(3, 1, 1.7);
  rng::Stream rs(3);
  CHECK((measures::sample_bridge(rT, 1.0, s, eig, 1.0, rs) - rT).norm() == doctest::Approx(0.0));
  CHECK(measures::sample_bridge(rT, 0.0, s, eig, 1.0, rs).norm() == doctest::Approx(0.0));
}

TEST_CASE("bridge sample mean and variance match the conditional formulas") {
  // oracle: empirical moments over 40000 draws vs m = (q_t/q_T) e^{-(T-t)l} r_T
  // and v = q_t - q_t^2 e^{-2(T-t)l}/q_T
  EigenSystem eig = EigenSystem::build(2, 1.0, 1.0, 1.0);
  NoiseSchedule s = NoiseSchedule::geometric(0.1, 10.0, 1.0);
  double t = 0.4, T = 1.0;
  Eigen::MatrixXd rT(2, 1);
  rT << 0.8, -1.1;
  int n = 40000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 1), sq = Eigen::MatrixXd::Zero(2, 1);
  rng::Stream rs(19);
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd x = measures::sample_bridge(rT, t, s, eig, T, rs);
    sum += x;
    sq += x.cwiseProduct(x);
  }
  for (int k = 0; k < 2; ++k) {
    double l = eig.lambdas[k];
    double qt = measures::mode_variance(s, eig, k, t);
    double qT = measures::mode_variance(s, eig, k, T);
    double m = qt / qT * std::exp(-(T - t) * l) * rT(k, 0);
    double v = qt - qt * qt * std::exp(-2 * (T - t) * l) / qT;
    double mean = sum(k, 0) / n;
    double var = sq(k, 0) / n - mean * mean;
    double se = std::sqrt(v / n);
    CHECK(std::abs(mean - m) < 4 * se);
    CHECK(var == doctest::Approx(v).epsilon(0.05));
  }
}

TEST_CASE("marginal sample variance matches q_t") {
  EigenSystem eig = EigenSystem::build(2, 1.0, 1.0, 1.0);
  NoiseSchedule s = NoiseSchedule::constant(1.0, 1.0);
  rng::Stream rs(23);
  int n = 40000;
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd x = measures::sample_marginal(0.6, s, eig, 1, rs);
    sq += x.col(0).cwiseProduct(x.col(0));
  }
  for (int k = 0; k < 2; ++k)
    CHECK(sq[k] / n == doctest::Approx(measures::mode_variance(s, eig, k, 0.6)).epsilon(0.05));
}
