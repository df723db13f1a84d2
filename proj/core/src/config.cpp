#include "fas/config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fas/pathinit.hpp"

namespace fas {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& section,
                const std::set<std::string>& allowed) {
  if (!obj.is_object())
    throw std::invalid_argument("config: section '" + section + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::invalid_argument("config: unknown key '" + it.key() + "' in section '" +
                                  section + "'");
}

template <typename T>
void get(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

LossWeighting parse_weighting(const std::string& s) {
  if (s == "unweighted") return LossWeighting::Unweighted;
  if (s == "ct_weighted") return LossWeighting::CtWeighted;
  throw std::invalid_argument("config: weighting must be 'unweighted' or 'ct_weighted'");
}

ClipMode parse_clip(const std::string& s) {
  if (s == "global") return ClipMode::Global;
  if (s == "per_point") return ClipMode::PerPoint;
  throw std::invalid_argument("config: clip_mode must be 'global' or 'per_point'");
}

}  // namespace

FullConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
  }
  check_keys(j, "<root>", {"grid", "eigsys", "schedule", "arch", "train", "energy", "phys"});

  FullConfig c;
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, "grid", {"K", "length"});
    get(g, "K", c.K);
    get(g, "length", c.length);
  }
  if (j.contains("eigsys")) {
    const json& g = j["eigsys"];
    check_keys(g, "eigsys", {"kappa", "s"});
    get(g, "kappa", c.kappa);
    get(g, "s", c.s);
  }
  if (j.contains("schedule")) {
    const json& g = j["schedule"];
    check_keys(g, "schedule", {"kind", "sigma", "beta_min", "beta_max", "horizon"});
    get(g, "kind", c.schedule_kind);
    get(g, "sigma", c.sigma);
    get(g, "beta_min", c.beta_min);
    get(g, "beta_max", c.beta_max);
    get(g, "horizon", c.horizon);
  }
  if (j.contains("arch")) {
    const json& g = j["arch"];
    check_keys(g, "arch", {"channels", "n_layers", "n_modes", "width", "embed_dim"});
    get(g, "channels", c.arch.channels);
    get(g, "n_layers", c.arch.n_layers);
    get(g, "n_modes", c.arch.n_modes);
    get(g, "width", c.arch.width);
    get(g, "embed_dim", c.arch.embed_dim);
  }
  if (j.contains("train")) {
    const json& g = j["train"];
    check_keys(g, "train",
               {"epochs", "grad_steps", "rollouts", "buffer_capacity", "lr", "alpha_max",
                "n_sde_steps", "batch_size", "seed", "lambda_reg", "weighting",
                "clip_mode", "exponential_euler", "n_threads", "checkpoint_interval"});
    get(g, "epochs", c.train.epochs);
    get(g, "grad_steps", c.train.grad_steps);
    get(g, "rollouts", c.train.rollouts);
    get(g, "buffer_capacity", c.train.buffer_capacity);
    get(g, "lr", c.train.lr);
    get(g, "alpha_max", c.train.alpha_max);
    get(g, "n_sde_steps", c.train.n_sde_steps);
    get(g, "batch_size", c.train.batch_size);
    get(g, "seed", c.train.seed);
    get(g, "lambda_reg", c.train.lambda_reg);
    if (g.contains("weighting")) c.train.weighting = parse_weighting(g["weighting"]);
    if (g.contains("clip_mode")) c.train.clip_mode = parse_clip(g["clip_mode"]);
    get(g, "exponential_euler", c.train.exponential_euler);
    get(g, "n_threads", c.train.n_threads);
    get(g, "checkpoint_interval", c.train.checkpoint_interval);
  }
  if (j.contains("energy")) {
    const json& g = j["energy"];
    check_keys(g, "energy",
               {"name", "A", "B", "quad_b", "external_command", "external_workdir",
                "thp_eps", "idpp_steps", "idpp_step_size", "dim_per_atom",
                "refine_steps", "refine_step_size"});
    get(g, "name", c.energy_name);
    get(g, "A", c.A);
    get(g, "B", c.B);
    get(g, "quad_b", c.quad_b);
    get(g, "external_command", c.external_command);
    get(g, "external_workdir", c.external_workdir);
    get(g, "thp_eps", c.thp_eps);
    get(g, "idpp_steps", c.idpp_steps);
    get(g, "idpp_step_size", c.idpp_step_size);
    get(g, "dim_per_atom", c.dim_per_atom);
    get(g, "refine_steps", c.refine_steps);
    get(g, "refine_step_size", c.refine_step_size);
  }
  if (j.contains("phys")) {
    const json& g = j["phys"];
    check_keys(g, "phys", {"gamma_m", "kBT", "delta_u"});
    get(g, "gamma_m", c.phys.gamma_m);
    get(g, "kBT", c.phys.kBT);
    get(g, "delta_u", c.phys.delta_u);
  }

  if (c.A.size() != c.B.size() || c.A.empty())
    throw std::invalid_argument("config: endpoints A and B must be non-empty, same size");
  if (c.schedule_kind != "constant" && c.schedule_kind != "geometric")
    throw std::invalid_argument("config: schedule kind must be 'constant' or 'geometric'");
  c.schedule();  // validates schedule parameters eagerly
  c.eigsys();
  c.phys.validate();
  c.train.validate();
  if (c.arch.channels != static_cast<int>(c.A.size()))
    throw std::invalid_argument("config: arch.channels must equal the endpoint dimension");
  if (c.refine_steps < 0 || !(c.refine_step_size > 0.0))
    throw std::invalid_argument(
        "config: refine_steps must be >= 0 and refine_step_size > 0");
  return c;
}

FullConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot read file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Grid FullConfig::grid() const { return Grid(K, length); }

EigenSystem FullConfig::eigsys() const { return EigenSystem::build(K, length, kappa, s); }

NoiseSchedule FullConfig::schedule() const {
  if (schedule_kind == "constant") return NoiseSchedule::constant(sigma, horizon);
  return NoiseSchedule::geometric(beta_min, beta_max, horizon);
}

Eigen::VectorXd FullConfig::endpoint_a() const {
  return Eigen::Map<const Eigen::VectorXd>(A.data(), static_cast<Eigen::Index>(A.size()));
}

Eigen::VectorXd FullConfig::endpoint_b() const {
  return Eigen::Map<const Eigen::VectorXd>(B.data(), static_cast<Eigen::Index>(B.size()));
}

ReferencePath FullConfig::reference() const {
  ReferencePath ref =
      idpp_steps > 0
          ? idpp_init(endpoint_a(), endpoint_b(), grid(), idpp_steps, idpp_step_size,
                      dim_per_atom)
          : reference_path(endpoint_a(), endpoint_b(), grid());
  if (refine_steps > 0) {
    std::unique_ptr<EnergyModel> energy = make_energy(ref);
    ref.x0 = gradient_flow_refine(ref.x0, *energy, refine_step_size, refine_steps).path;
  }
  return ref;
}

std::unique_ptr<EnergyModel> FullConfig::make_energy(const ReferencePath& x0) const {
  if (energy_name == "muller_brown_tpd")
    return std::make_unique<TpdSyntheticEnergy>(muller_brown_potential(), phys);
  if (energy_name == "muller_brown_fk")
    return std::make_unique<TpdFkEnergy>(muller_brown_potential(), phys);
  if (energy_name == "quadratic") {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
    for (std::size_t i = 0; i < quad_b.size() && i < static_cast<std::size_t>(K); ++i)
      b[static_cast<Eigen::Index>(i)] = quad_b[i];
    return std::make_unique<QuadraticModeEnergy>(b, x0);
  }
  if (energy_name == "external") {
    if (external_command.empty())
      throw std::invalid_argument("config: external energy requires external_command");
    return std::make_unique<ExternalEnergy>(external_command, external_workdir);
  }
  throw std::invalid_argument("config: unknown energy '" + energy_name + "'");
}

std::string resolved_config(const FullConfig& c) {
  json j;
  j["grid"] = {{"K", c.K}, {"length", c.length}};
  j["eigsys"] = {{"kappa", c.kappa}, {"s", c.s}};
  j["schedule"] = {{"kind", c.schedule_kind}, {"sigma", c.sigma},
                   {"beta_min", c.beta_min}, {"beta_max", c.beta_max},
                   {"horizon", c.horizon}};
  j["arch"] = {{"channels", c.arch.channels}, {"n_layers", c.arch.n_layers},
               {"n_modes", c.arch.n_modes}, {"width", c.arch.width},
               {"embed_dim", c.arch.embed_dim}};
  j["train"] = {{"epochs", c.train.epochs},
                {"grad_steps", c.train.grad_steps},
                {"rollouts", c.train.rollouts},
                {"buffer_capacity", c.train.buffer_capacity},
                {"lr", c.train.lr},
                {"alpha_max", c.train.alpha_max},
                {"n_sde_steps", c.train.n_sde_steps},
                {"batch_size", c.train.batch_size},
                {"seed", c.train.seed},
                {"lambda_reg", c.train.lambda_reg},
                {"weighting", c.train.weighting == LossWeighting::Unweighted
                                  ? "unweighted" : "ct_weighted"},
                {"clip_mode", c.train.clip_mode == ClipMode::Global ? "global" : "per_point"},
                {"exponential_euler", c.train.exponential_euler},
                {"n_threads", c.train.n_threads},
                {"checkpoint_interval", c.train.checkpoint_interval}};
  j["energy"] = {{"name", c.energy_name},        {"A", c.A},
                 {"B", c.B},                     {"quad_b", c.quad_b},
                 {"external_command", c.external_command},
                 {"external_workdir", c.external_workdir},
                 {"thp_eps", c.thp_eps},         {"idpp_steps", c.idpp_steps},
                 {"idpp_step_size", c.idpp_step_size},
                 {"dim_per_atom", c.dim_per_atom},
                 {"refine_steps", c.refine_steps},
                 {"refine_step_size", c.refine_step_size}};
  j["phys"] = {{"gamma_m", c.phys.gamma_m}, {"kBT", c.phys.kBT},
               {"delta_u", c.phys.delta_u}};
  return j.dump(2);
}

std::string config_hash(const FullConfig& cfg) {
  std::string s = resolved_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace fas
