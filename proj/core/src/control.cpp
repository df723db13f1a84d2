#include "fas/control.hpp"

#include <cmath>
#include <stdexcept>

#include "fas/rng.hpp"

namespace fas {

namespace {

constexpr int kGridFeats = 4;

struct Layout {
  int c, F, M, E, d, L;
  int w_in, b_in;                       // offsets
  int layer_base, layer_stride;
  int a_off, w_p_off, b_p_off, w_g_off, b_g_off;  // within a layer
  int w_out, b_out;
  int total;

  explicit Layout(const ControlArch& a) {
    c = a.width;
    F = a.channels + kGridFeats;
    M = a.n_modes;
    E = a.embed_dim;
    d = a.channels;
    L = a.n_layers;
    w_in = 0;
    b_in = w_in + c * F;
    layer_base = b_in + c;
    a_off = 0;
    w_p_off = a_off + M * c * c;
    b_p_off = w_p_off + c * c;
    w_g_off = b_p_off + c;
    b_g_off = w_g_off + 2 * c * E;
    layer_stride = b_g_off + 2 * c;
    w_out = layer_base + L * layer_stride;
    b_out = w_out + d * c;
    total = b_out + d;
  }
};

void check_arch(const ControlArch& a) {
  if (a.channels < 1 || a.n_layers < 1 || a.n_modes < 1 || a.width < 1 ||
      a.embed_dim < 2 || a.embed_dim % 2 != 0)
    throw std::invalid_argument("ControlArch: all fields positive, embed_dim even >= 2");
}

Eigen::MatrixXd grid_features(const Grid& grid) {
  const double pi = 3.14159265358979323846;
  Eigen::MatrixXd G(grid.n_interior, kGridFeats);
  for (int i = 0; i < grid.n_interior; ++i) {
    double u = grid.point(i) / grid.length;
    G(i, 0) = std::sin(pi * u);
    G(i, 1) = std::cos(pi * u);
    G(i, 2) = std::sin(2.0 * pi * u);
    G(i, 3) = std::cos(2.0 * pi * u);
  }
  return G;
}

Eigen::VectorXd time_embedding(double t, int E) {
  int half = E / 2;
  Eigen::VectorXd e(E);
  for (int j = 0; j < half; ++j) {
    double freq = (half == 1) ? 1.0 : std::pow(1e4, static_cast<double>(j) / (half - 1));
    e[2 * j] = std::sin(freq * t);
    e[2 * j + 1] = std::cos(freq * t);
  }
  return e;
}

// Truncated orthonormal sine basis rows 1..M for a K-point grid.
Eigen::MatrixXd low_mode_basis(int M, int K) {
  if (M > K)
    throw std::invalid_argument("ControlNet: n_modes exceeds grid size");
  const double pi = 3.14159265358979323846;
  const double w = std::sqrt(2.0 / (K + 1));
  Eigen::MatrixXd EM(M, K);
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < K; ++i)
      EM(m, i) = w * std::sin(pi * (m + 1) * (i + 1) / (K + 1));
  return EM;
}

using MapMat = Eigen::Map<const Eigen::MatrixXd>;
using MapMatMut = Eigen::Map<Eigen::MatrixXd>;
using MapVec = Eigen::Map<const Eigen::VectorXd>;
using MapVecMut = Eigen::Map<Eigen::VectorXd>;

// Caches for reverse mode.
struct ForwardTape {
  Eigen::MatrixXd feats;                 // K x (B*F)
  std::vector<Eigen::MatrixXd> h_in;     // per layer, K x (B*c)
  std::vector<Eigen::MatrixXd> coeffs;   // per layer, M x (B*c)
  std::vector<Eigen::MatrixXd> z_pre;    // per layer, pre-modulation, K x (B*c)
  std::vector<Eigen::MatrixXd> tanh_z;   // per layer, K x (B*c)
  Eigen::MatrixXd h_last;                // K x (B*c)
  Eigen::MatrixXd embeds;                // E x B
  Eigen::MatrixXd scales, shifts;        // (L*c) x B stacked per layer
};

Eigen::MatrixXd run_forward(const ControlParams& params,
                            const Eigen::Ref<const Eigen::MatrixXd>& X,
                            int batch, const Grid& grid,
                            const std::vector<double>& t, ForwardTape* tape) {
  check_arch(params.arch);
  const Layout ly(params.arch);
  if (params.theta.size() != ly.total)
    throw std::invalid_argument("ControlParams: theta length does not match arch");
  const int K = grid.n_interior;
  const int B = batch;
  if (X.rows() != K || X.cols() != static_cast<Eigen::Index>(B) * ly.d)
    throw std::invalid_argument("ControlNet: input shape mismatch with grid/batch");
  if (static_cast<int>(t.size()) != B)
    throw std::invalid_argument("ControlNet: one time value per sample required");
  if (!X.allFinite())
    throw std::invalid_argument("ControlNet: non-finite input");

  const double* th = params.theta.data();
  MapMat W_in(th + ly.w_in, ly.c, ly.F);
  MapVec b_in(th + ly.b_in, ly.c);
  MapMat W_out(th + ly.w_out, ly.d, ly.c);
  MapVec b_out(th + ly.b_out, ly.d);

  Eigen::MatrixXd G = grid_features(grid);
  Eigen::MatrixXd EM = low_mode_basis(ly.M, K);

  // lift: feats_b = [X_b | G], H_b = feats_b * W_in^T + b_in
  Eigen::MatrixXd feats(K, static_cast<Eigen::Index>(B) * ly.F);
  for (int b = 0; b < B; ++b) {
    feats.middleCols(static_cast<Eigen::Index>(b) * ly.F, ly.d) =
        X.middleCols(static_cast<Eigen::Index>(b) * ly.d, ly.d);
    feats.middleCols(static_cast<Eigen::Index>(b) * ly.F + ly.d, kGridFeats) = G;
  }
  Eigen::MatrixXd H(K, static_cast<Eigen::Index>(B) * ly.c);
  for (int b = 0; b < B; ++b)
    H.middleCols(static_cast<Eigen::Index>(b) * ly.c, ly.c) =
        (feats.middleCols(static_cast<Eigen::Index>(b) * ly.F, ly.F) * W_in.transpose()).rowwise() +
        b_in.transpose();

  // per-sample time embedding and per-layer modulation
  Eigen::MatrixXd embeds(ly.E, B);
  for (int b = 0; b < B; ++b) embeds.col(b) = time_embedding(t[b], ly.E);
  Eigen::MatrixXd scales(ly.L * ly.c, B), shifts(ly.L * ly.c, B);
  for (int l = 0; l < ly.L; ++l) {
    const double* lb = th + ly.layer_base + static_cast<std::ptrdiff_t>(l) * ly.layer_stride;
    MapMat W_g(lb + ly.w_g_off, 2 * ly.c, ly.E);
    MapVec b_g(lb + ly.b_g_off, 2 * ly.c);
    Eigen::MatrixXd mod = (W_g * embeds).colwise() + b_g;  // 2c x B
    scales.middleRows(l * ly.c, ly.c) = mod.topRows(ly.c).array() + 1.0;
    shifts.middleRows(l * ly.c, ly.c) = mod.bottomRows(ly.c);
  }

  if (tape) {
    tape->feats = feats;
    tape->embeds = embeds;
    tape->scales = scales;
    tape->shifts = shifts;
    tape->h_in.resize(ly.L);
    tape->coeffs.resize(ly.L);
    tape->z_pre.resize(ly.L);
    tape->tanh_z.resize(ly.L);
  }

  Eigen::MatrixXd Cm(ly.c, B), Chat_m(ly.c, B);
  for (int l = 0; l < ly.L; ++l) {
    const double* lb = th + ly.layer_base + static_cast<std::ptrdiff_t>(l) * ly.layer_stride;
    MapMat W_p(lb + ly.w_p_off, ly.c, ly.c);
    MapVec b_p(lb + ly.b_p_off, ly.c);

    if (tape) tape->h_in[l] = H;

    // spectral path on the lowest M modes
    Eigen::MatrixXd C = EM * H;  // M x (B*c)
    Eigen::MatrixXd Chat(ly.M, static_cast<Eigen::Index>(B) * ly.c);
    for (int m = 0; m < ly.M; ++m) {
      MapMat A_m(lb + ly.a_off + static_cast<std::ptrdiff_t>(m) * ly.c * ly.c, ly.c, ly.c);
      for (int b = 0; b < B; ++b)
        for (int j = 0; j < ly.c; ++j)
          Cm(j, b) = C(m, static_cast<Eigen::Index>(b) * ly.c + j);
      Chat_m.noalias() = A_m * Cm;
      for (int b = 0; b < B; ++b)
        for (int j = 0; j < ly.c; ++j)
          Chat(m, static_cast<Eigen::Index>(b) * ly.c + j) = Chat_m(j, b);
    }
    Eigen::MatrixXd Z = EM.transpose() * Chat;  // K x (B*c)

    // pointwise path
    for (int b = 0; b < B; ++b)
      Z.middleCols(static_cast<Eigen::Index>(b) * ly.c, ly.c) +=
          (H.middleCols(static_cast<Eigen::Index>(b) * ly.c, ly.c) * W_p.transpose()).rowwise() +
          b_p.transpose();

    if (tape) {
      tape->coeffs[l] = C;
      tape->z_pre[l] = Z;
    }

    // feature-wise modulation, then residual tanh update
    Eigen::MatrixXd Zm(K, static_cast<Eigen::Index>(B) * ly.c);
    for (int b = 0; b < B; ++b)
      for (int j = 0; j < ly.c; ++j)
        Zm.col(static_cast<Eigen::Index>(b) * ly.c + j) =
            scales(l * ly.c + j, b) * Z.col(static_cast<Eigen::Index>(b) * ly.c + j).array() +
            shifts(l * ly.c + j, b);
    Eigen::MatrixXd T = Zm.array().tanh();
    if (tape) tape->tanh_z[l] = T;
    H += T;
  }

  if (tape) tape->h_last = H;

  Eigen::MatrixXd U(K, static_cast<Eigen::Index>(B) * ly.d);
  for (int b = 0; b < B; ++b)
    U.middleCols(static_cast<Eigen::Index>(b) * ly.d, ly.d) =
        (H.middleCols(static_cast<Eigen::Index>(b) * ly.c, ly.c) * W_out.transpose()).rowwise() +
        b_out.transpose();
  return U;
}

// Reverse pass; dU is dLoss/dU, K x (B*d). Returns gradient over theta.
Eigen::VectorXd run_backward(const ControlParams& params, const ForwardTape& tape,
                             const Eigen::Ref<const Eigen::MatrixXd>& dU,
                             int batch, const Grid& grid) {
  const Layout ly(params.arch);
  const int K = grid.n_interior;
  const int B = batch;
  const double* th = params.theta.data();

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(ly.total);
  double* g = grad.data();

  MapMat W_out(th + ly.w_out, ly.d, ly.c);
  MapMatMut dW_out(g + ly.w_out, ly.d, ly.c);
  MapVecMut db_out(g + ly.b_out, ly.d);

  Eigen::MatrixXd EM = low_mode_basis(ly.M, K);

  // output projection
  Eigen::MatrixXd dH(K, static_cast<Eigen::Index>(B) * ly.c);
  for (int b = 0; b < B; ++b) {
    auto dU_b = dU.middleCols(static_cast<Eigen::Index>(b) * ly.d, ly.d);
    auto H_b = tape.h_last.middleCols(static_cast<Eigen::Index>(b) * ly.c, ly.c);
    dW_out.noalias() += dU_b.transpose() * H_b;
    db_out += dU_b.colwise().sum().transpose();
    dH.middleCols(static_cast<Eigen::Index>(b) * ly.c, ly.c).noalias() = dU_b * W_out;
  }

  Eigen::MatrixXd Cm(ly.c, B), Dm(ly.c, B);
  for (int l = ly.L - 1; l >= 0; --l) {
    const double* lb = th + ly.layer_base + static_cast<std::ptrdiff_t>(l) * ly.layer_stride;
    double* gl = g + ly.layer_base + static_cast<std::ptrdiff_t>(l) * ly.layer_stride;
    MapMat W_p(lb + ly.w_p_off, ly.c, ly.c);
    MapMatMut dW_p(gl + ly.w_p_off, ly.c, ly.c);
    MapVecMut db_p(gl + ly.b_p_off, ly.c);
    MapMatMut dW_g(gl + ly.w_g_off, 2 * ly.c, ly.E);
    MapVecMut db_g(gl + ly.b_g_off, 2 * ly.c);

    const Eigen::MatrixXd& T = tape.tanh_z[l];
    const Eigen::MatrixXd& Z = tape.z_pre[l];
    const Eigen::MatrixXd& H_in = tape.h_in[l];

    // through tanh and modulation
    Eigen::MatrixXd dZm = dH.array() * (1.0 - T.array().square());
    Eigen::MatrixXd dmod(2 * ly.c, B);  // [dscale; dshift]
    Eigen::MatrixXd dZ(K, static_cast<Eigen::Index>(B) * ly.c);
    for (int b = 0; b < B; ++b)
      for (int j = 0; j < ly.c; ++j) {
        Eigen::Index col = static_cast<Eigen::Index>(b) * ly.c + j;
        dmod(j, b) = dZm.col(col).dot(Z.col(col));
        dmod(ly.c + j, b) = dZm.col(col).sum();
        dZ.col(col) = tape.scales(l * ly.c + j, b) * dZm.col(col);
      }
    dW_g.noalias() += dmod * tape.embeds.transpose();
    db_g += dmod.rowwise().sum();

    // residual passthrough
    // (dH for the layer input starts as the residual gradient)
    Eigen::MatrixXd dHin = dH;

    // pointwise path
    for (int b = 0; b < B; ++b) {
      auto dZ_b = dZ.middleCols(static_cast<Eigen::Index>(b) * ly.c, ly.c);
      auto H_b = H_in.middleCols(static_cast<Eigen::Index>(b) * ly.c, ly.c);
      dW_p.noalias() += dZ_b.transpose() * H_b;
      db_p += dZ_b.colwise().sum().transpose();
      dHin.middleCols(static_cast<Eigen::Index>(b) * ly.c, ly.c).noalias() += dZ_b * W_p;
    }

    // spectral path
    Eigen::MatrixXd dChat = EM * dZ;  // M x (B*c)
    Eigen::MatrixXd dC(ly.M, static_cast<Eigen::Index>(B) * ly.c);
    const Eigen::MatrixXd& C = tape.coeffs[l];
    for (int m = 0; m < ly.M; ++m) {
      MapMat A_m(lb + ly.a_off + static_cast<std::ptrdiff_t>(m) * ly.c * ly.c, ly.c, ly.c);
      MapMatMut dA_m(gl + ly.a_off + static_cast<std::ptrdiff_t>(m) * ly.c * ly.c, ly.c, ly.c);
      for (int b = 0; b < B; ++b)
        for (int j = 0; j < ly.c; ++j) {
          Cm(j, b) = C(m, static_cast<Eigen::Index>(b) * ly.c + j);
          Dm(j, b) = dChat(m, static_cast<Eigen::Index>(b) * ly.c + j);
        }
      dA_m.noalias() += Dm * Cm.transpose();
      Eigen::MatrixXd back = A_m.transpose() * Dm;  // c x B
      for (int b = 0; b < B; ++b)
        for (int j = 0; j < ly.c; ++j)
          dC(m, static_cast<Eigen::Index>(b) * ly.c + j) = back(j, b);
    }
    dHin.noalias() += EM.transpose() * dC;

    dH.swap(dHin);
  }

  // lift layer
  MapMatMut dW_in(g + ly.w_in, ly.c, ly.F);
  MapVecMut db_in(g + ly.b_in, ly.c);
  for (int b = 0; b < B; ++b) {
    auto dH_b = dH.middleCols(static_cast<Eigen::Index>(b) * ly.c, ly.c);
    auto F_b = tape.feats.middleCols(static_cast<Eigen::Index>(b) * ly.F, ly.F);
    dW_in.noalias() += dH_b.transpose() * F_b;
    db_in += dH_b.colwise().sum().transpose();
  }
  return grad;
}

}  // namespace

int ControlNet::param_count(const ControlArch& arch) {
  check_arch(arch);
  return Layout(arch).total;
}

ControlParams ControlNet::init(const ControlArch& arch, std::uint64_t seed) {
  check_arch(arch);
  const Layout ly(arch);
  ControlParams p;
  p.arch = arch;
  p.theta = Eigen::VectorXd::Zero(ly.total);
  rng::Stream rs = rng::Stream::keyed({0xC0117201ull, seed});
  double* th = p.theta.data();

  auto fill = [&](double* dst, int n, double std) {
    for (int i = 0; i < n; ++i) dst[i] = std * rs.normal();
  };
  fill(th + ly.w_in, ly.c * ly.F, 1.0 / std::sqrt(static_cast<double>(ly.F)));
  for (int l = 0; l < ly.L; ++l) {
    double* lb = th + ly.layer_base + static_cast<std::ptrdiff_t>(l) * ly.layer_stride;
    fill(lb + ly.a_off, ly.M * ly.c * ly.c, 1.0 / std::sqrt(2.0 * ly.c));
    fill(lb + ly.w_p_off, ly.c * ly.c, 1.0 / std::sqrt(2.0 * ly.c));
    fill(lb + ly.w_g_off, 2 * ly.c * ly.E, 0.02 / std::sqrt(static_cast<double>(ly.E)));
  }
  // W_out, b_out stay zero: the fresh control is identically zero
  return p;
}

Eigen::MatrixXd ControlNet::forward(const ControlParams& params,
                                    const Eigen::Ref<const Eigen::MatrixXd>& X,
                                    int batch, const Grid& grid,
                                    const std::vector<double>& t) {
  return run_forward(params, X, batch, grid, t, nullptr);
}

Eigen::MatrixXd ControlNet::forward(const ControlParams& params,
                                    const Eigen::Ref<const Eigen::MatrixXd>& X,
                                    const Grid& grid, double t) {
  return run_forward(params, X, 1, grid, {t}, nullptr);
}

ControlNet::LossResult ControlNet::loss_and_grad(
    const ControlParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
    const Eigen::Ref<const Eigen::MatrixXd>& Y, int batch, const Grid& grid,
    const std::vector<double>& t, LossWeighting weighting,
    const NoiseSchedule& sched, const EigenSystem& eig) {
  if (batch < 1) throw std::invalid_argument("loss_and_grad: empty batch");
  if (Y.rows() != X.rows() || Y.cols() != X.cols())
    throw std::invalid_argument("loss_and_grad: X/Y shape mismatch");

  ForwardTape tape;
  Eigen::MatrixXd U = run_forward(params, X, batch, grid, t, &tape);
  const int d = params.arch.channels;
  const double du = grid.du();
  const int B = batch;

  Eigen::MatrixXd R = U + Y;
  double loss;
  Eigen::MatrixXd dU;
  if (weighting == LossWeighting::Unweighted) {
    loss = 0.5 * du * R.squaredNorm() / B;
    dU = (du / B) * R;
  } else {
    const int K = grid.n_interior;
    if (eig.n_modes() != K)
      throw std::invalid_argument("loss_and_grad: eigsys size must match grid for Ct weighting");
    SineBasis basis(K);
    dU.resize(R.rows(), R.cols());
    loss = 0.0;
    for (int b = 0; b < B; ++b) {
      double sig = sched.sigma_at(t[b]);
      Eigen::VectorXd w(K);
      for (int k = 0; k < K; ++k)
        w[k] = sig * std::pow(eig.lambdas[k], -eig.s / 2.0) *
               std::exp(-(sched.horizon - t[b]) * eig.lambdas[k]);
      auto R_b = R.middleCols(static_cast<Eigen::Index>(b) * d, d);
      Eigen::MatrixXd Rt = basis.dst(R_b);
      Eigen::MatrixXd Wt = w.asDiagonal() * Rt;
      loss += 0.5 * du * Wt.squaredNorm() / B;
      dU.middleCols(static_cast<Eigen::Index>(b) * d, d) =
          (du / B) * basis.idst(w.array().square().matrix().asDiagonal() * Rt);
    }
  }
  if (!std::isfinite(loss)) throw std::runtime_error("loss_and_grad: non-finite loss");

  LossResult out;
  out.loss = loss;
  out.grad = run_backward(params, tape, dU, batch, grid);
  return out;
}

}  // namespace fas
