#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fas/config.hpp"
#include "fas/dynamics.hpp"
#include "fas/io.hpp"
#include "fas/metrics.hpp"
#include "fas/pathinit.hpp"
#include "fas/trainer.hpp"

namespace fs = std::filesystem;
using namespace fas;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

// Diffusion-scale compensation at grid refinement. The trace-class Q-weighting
// gives every mode a resolution-independent noise amplitude, so refined grids
// reuse the training schedule unchanged; discretizations that inject white
// noise per grid point lose a factor ~sqrt(r) per mode and need
// 1 + 2*log10(r) here instead.
double refine_scale(int /*r*/) { return 1.0; }

io::MetricsReport evaluate_paths(const std::vector<PathSample>& paths,
                                 const Eigen::VectorXd& B, double thp_eps,
                                 const PhysParams& phys, const std::string& hash) {
  io::MetricsReport rep;
  rep.n_paths = static_cast<int>(paths.size());
  rep.config_hash = hash;
  Potential pot = muller_brown_potential();
  std::vector<Eigen::VectorXd> ends;
  double es = 0, es2 = 0, ls = 0, ls2 = 0;
  for (const PathSample& p : paths) {
    ends.push_back(p.endpoint_b);
    double e = metrics::ets(p, pot);
    double l = metrics::llk(p, phys, pot).total;
    es += e;
    es2 += e * e;
    ls += l;
    ls2 += l * l;
  }
  int n = rep.n_paths;
  rep.thp = metrics::thp(ends, B, thp_eps);
  rep.ets_mean = es / n;
  rep.ets_std = std::sqrt(std::max(0.0, es2 / n - rep.ets_mean * rep.ets_mean));
  rep.llk_mean = ls / n;
  rep.llk_std = std::sqrt(std::max(0.0, ls2 / n - rep.llk_mean * rep.llk_mean));
  return rep;
}

void write_landscape_csv(const std::string& path, double x0, double x1, double y0,
                         double y1, int nx, int ny) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(10);
  out << "x,y,V\n";
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      double x = x0 + (x1 - x0) * i / std::max(1, nx - 1);
      double y = y0 + (y1 - y0) * j / std::max(1, ny - 1);
      out << x << ',' << y << ',' << muller_brown(Eigen::Vector2d(x, y)) << '\n';
    }
}

int cmd_train(const std::string& cfg_path, const std::string& out_dir) {
  FullConfig cfg;
  try {
    cfg = load_config_file(cfg_path);
  } catch (const std::exception& e) {
    std::cerr << "config error (" << cfg_path << "): " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    fs::create_directories(out_dir);
    {
      std::ofstream rc(fs::path(out_dir) / "config.json");
      rc << resolved_config(cfg) << '\n';
    }
    ReferencePath x0 = cfg.reference();
    auto energy = cfg.make_energy(x0);
    NoiseSchedule sched = cfg.schedule();
    EigenSystem eig = cfg.eigsys();
    Potential pot = muller_brown_potential();
    bool mb = cfg.energy_name.rfind("muller_brown", 0) == 0;

    std::ofstream log(fs::path(out_dir) / "train_log.jsonl");
    int interval = cfg.train.checkpoint_interval;
    EpochCallback cb = [&](const EpochLog& lg, const ControlParams& params) {
      log << io::epoch_log_line(lg) << '\n';
      log.flush();
      std::cerr << "epoch " << lg.epoch << " loss " << lg.loss << " ets "
                << lg.ets_mean << " dropped " << lg.dropped << '\n';
      if (interval > 0 && (lg.epoch + 1) % interval == 0)
        io::save_checkpoint((fs::path(out_dir) / ("ckpt_" + std::to_string(lg.epoch + 1) +
                                                  ".bin")).string(),
                            params, cfg, lg.epoch + 1);
    };
    TrainResult res = train(cfg.train, sched, eig, cfg.arch, *energy, x0,
                            mb ? &pot : nullptr, nullptr, cb);
    io::save_checkpoint((fs::path(out_dir) / "ckpt_final.bin").string(), res.params,
                        cfg, cfg.train.epochs);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_sample(const std::string& ckpt_path, int n_paths, int refine,
               std::uint64_t seed, const std::string& out_dir) {
  io::Checkpoint ck;
  try {
    ck = io::load_checkpoint(ckpt_path);
  } catch (const std::exception& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    FullConfig cfg = ck.config;
    // Build the reference at the grid the checkpoint was trained on, then
    // interpolate to the refined grid: the lifting stays the same function
    // of u across refinement levels.
    ReferencePath native_ref = cfg.reference();
    cfg.K *= refine;
    double scale = refine_scale(refine);
    cfg.beta_min *= scale;
    cfg.beta_max *= scale;
    cfg.sigma *= scale;
    if (cfg.arch.n_modes > cfg.K) {
      std::cerr << "arch/grid incompatibility: n_modes " << cfg.arch.n_modes
                << " exceeds refined grid " << cfg.K << '\n';
      return kExitConfig;
    }

    fs::create_directories(fs::path(out_dir) / "paths");
    {
      std::ofstream rc(fs::path(out_dir) / "config.json");
      rc << resolved_config(cfg) << '\n';
    }
    ReferencePath x0 = refine > 1 ? resample_reference(native_ref, cfg.grid())
                                  : std::move(native_ref);
    NoiseSchedule sched = cfg.schedule();
    EigenSystem eig = cfg.eigsys();

    SimOptions so;
    so.n_steps = cfg.train.n_sde_steps;
    so.batch = n_paths;
    so.seed = seed;
    SimResult sim = simulate(ck.params, sched, eig, x0, so);
    for (int i = 0; i < n_paths; ++i)
      io::write_path_csv((fs::path(out_dir) / "paths" /
                          ("path_" + std::to_string(i) + ".csv")).string(),
                         sim.samples[i], so.n_steps, sched.horizon);
    if (cfg.energy_name.rfind("muller_brown", 0) == 0) {
      io::MetricsReport rep = evaluate_paths(sim.samples, cfg.endpoint_b(),
                                             cfg.thp_eps, cfg.phys, config_hash(cfg));
      io::write_metrics_json((fs::path(out_dir) / "metrics.json").string(), rep);
      std::cerr << "thp " << rep.thp << " ets " << rep.ets_mean << " +- "
                << rep.ets_std << '\n';
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "sampling aborted: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_eval(const std::string& in_dir, const std::string& out_path, double thp_eps,
             const PhysParams& phys, const std::vector<double>& Bv) {
  std::vector<PathSample> paths;
  try {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(in_dir))
      if (entry.path().extension() == ".csv" || entry.path().extension() == ".fasp")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      if (f.extension() == ".csv")
        paths.push_back(io::read_path_csv(f.string()));
      else {
        auto traj = io::read_trajectory_fasp(f.string());
        if (!traj.empty()) paths.push_back(traj.back());
      }
    }
    if (paths.empty()) {
      std::cerr << "no trajectory files in " << in_dir << '\n';
      return kExitConfig;
    }
    Eigen::VectorXd B = Eigen::Map<const Eigen::VectorXd>(
        Bv.data(), static_cast<Eigen::Index>(Bv.size()));
    io::MetricsReport rep = evaluate_paths(paths, B, thp_eps, phys, "");
    if (fs::path(out_path).has_parent_path())
      fs::create_directories(fs::path(out_path).parent_path());
    io::write_metrics_json(out_path, rep);
    write_landscape_csv((fs::path(out_path).parent_path() / "landscape.csv").string(),
                        -1.8, 1.2, -0.5, 2.2, 100, 100);
    std::cout << "thp " << rep.thp << " ets " << rep.ets_mean << " +- " << rep.ets_std
              << " llk " << rep.llk_mean << '\n';
  } catch (const std::exception& e) {
    std::cerr << "eval error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

int cmd_init_path(const std::vector<double>& Av, const std::vector<double>& Bv, int K,
                  int idpp_steps, double step_size, int dim_per_atom,
                  const std::string& out_path) {
  try {
    if (Av.size() != Bv.size() || Av.empty())
      throw std::invalid_argument("endpoints must be non-empty and the same size");
    Eigen::VectorXd A = Eigen::Map<const Eigen::VectorXd>(
        Av.data(), static_cast<Eigen::Index>(Av.size()));
    Eigen::VectorXd B = Eigen::Map<const Eigen::VectorXd>(
        Bv.data(), static_cast<Eigen::Index>(Bv.size()));
    ReferencePath ref = idpp_init(A, B, Grid(K), idpp_steps, step_size, dim_per_atom);
    io::write_path_csv(out_path, ref.x0, 0, 0.0);
    std::cout << "wrote " << out_path << '\n';
  } catch (const std::exception& e) {
    std::cerr << "init-path error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fas - functional adjoint sampler for transition paths"};
  app.require_subcommand(1);

  std::string cfg_path, out_dir = "out", ckpt_path, in_dir, out_path = "metrics.json";
  int n_paths = 64, refine = 1, K = 100, idpp_steps = 200, dim_per_atom = 3;
  std::uint64_t seed = 0;
  double step_size = 1e-3, thp_eps = 0.1;
  PhysParams phys;
  std::vector<double> Av, Bv = {0.624, 0.028};

  auto* tr = app.add_subcommand("train", "train a control from a JSON config");
  tr->add_option("-c,--config", cfg_path, "config JSON")->required();
  tr->add_option("-o,--out", out_dir, "output directory");

  auto* sa = app.add_subcommand("sample", "roll out paths from a checkpoint");
  sa->add_option("-k,--checkpoint", ckpt_path, "checkpoint file")->required();
  sa->add_option("-n,--n-paths", n_paths, "number of paths");
  sa->add_option("-r,--refine", refine, "grid refinement factor")
      ->check(CLI::IsMember({1, 2, 4, 10, 100}));
  sa->add_option("-s,--seed", seed, "rng seed");
  sa->add_option("-o,--out", out_dir, "output directory");

  auto* ev = app.add_subcommand("eval", "compute metrics over a directory of paths");
  ev->add_option("-i,--input", in_dir, "directory of trajectory files")->required();
  ev->add_option("-o,--out", out_path, "metrics JSON output");
  ev->add_option("--thp-eps", thp_eps, "THP hit threshold");
  ev->add_option("--gamma-m", phys.gamma_m, "friction x mass");
  ev->add_option("--kBT", phys.kBT, "thermal energy");
  ev->add_option("--delta-u", phys.delta_u, "image spacing (0 = from grid)");
  ev->add_option("--B", Bv, "target state B");

  auto* ip = app.add_subcommand("init-path", "build a (possibly IDPP-refined) initial path");
  ip->add_option("--A", Av, "endpoint A")->required();
  ip->add_option("--B", Bv, "endpoint B")->required();
  ip->add_option("-K,--n-points", K, "interior grid points");
  ip->add_option("--idpp-steps", idpp_steps, "IDPP descent iterations");
  ip->add_option("--idpp-step-size", step_size, "IDPP descent step");
  ip->add_option("--dim-per-atom", dim_per_atom, "coordinates per atom");
  std::string ip_out = "init_path.csv";
  ip->add_option("-o,--out", ip_out, "output CSV");

  CLI11_PARSE(app, argc, argv);

  if (tr->parsed()) return cmd_train(cfg_path, out_dir);
  if (sa->parsed()) return cmd_sample(ckpt_path, n_paths, refine, seed, out_dir);
  if (ev->parsed()) return cmd_eval(in_dir, out_path, thp_eps, phys, Bv);
  if (ip->parsed())
    return cmd_init_path(Av, Bv, K, idpp_steps, step_size, dim_per_atom, ip_out);
  return kExitConfig;
}
