#include "fas/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fas {
namespace io {

using nlohmann::json;

namespace {

void write_f64(std::ostream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_f64(std::istream& in, double* data, std::size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("io: truncated f64 block");
}

}  // namespace

void save_checkpoint(const std::string& path, const ControlParams& params,
                     const FullConfig& config, int epoch) {
  json header;
  header["version"] = params.version;
  header["epoch"] = epoch;
  header["n_params"] = params.theta.size();
  header["config"] = json::parse(resolved_config(config));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot write checkpoint " + path);
  out << header.dump() << '\n';
  write_f64(out, params.theta.data(), static_cast<std::size_t>(params.theta.size()));
  if (!out) throw std::runtime_error("io: checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot read checkpoint " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("io: missing checkpoint header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("io: bad checkpoint header: ") + e.what());
  }
  Checkpoint ck;
  ck.epoch = header.at("epoch").get<int>();
  ck.config = parse_config(header.at("config").dump());
  ck.params.version = header.at("version").get<std::uint32_t>();
  ck.params.arch = ck.config.arch;
  Eigen::Index n = header.at("n_params").get<Eigen::Index>();
  if (n != ControlNet::param_count(ck.params.arch))
    throw std::runtime_error("io: checkpoint parameter count does not match arch");
  ck.params.theta.resize(n);
  read_f64(in, ck.params.theta.data(), static_cast<std::size_t>(n));
  return ck;
}

void write_path_csv(const std::string& path, const PathSample& sample, int step,
                    double t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot write " + path);
  out.precision(17);
  out << "step,t,u_index,channel,value\n";
  Eigen::MatrixXd X = sample.with_endpoints();
  for (int u = 0; u < X.rows(); ++u)
    for (int c = 0; c < X.cols(); ++c)
      out << step << ',' << t << ',' << u << ',' << c << ',' << X(u, c) << '\n';
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<PathSample>& steps,
                          const std::vector<double>& times) {
  if (steps.size() != times.size())
    throw std::invalid_argument("io: one time per trajectory step required");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot write " + path);
  out.precision(17);
  out << "step,t,u_index,channel,value\n";
  for (std::size_t s = 0; s < steps.size(); ++s) {
    Eigen::MatrixXd X = steps[s].with_endpoints();
    for (int u = 0; u < X.rows(); ++u)
      for (int c = 0; c < X.cols(); ++c)
        out << s << ',' << times[s] << ',' << u << ',' << c << ',' << X(u, c) << '\n';
  }
}

PathSample read_path_csv(const std::string& path, double length) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("io: cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,", 0) != 0)
    throw std::runtime_error("io: bad trajectory header in " + path);
  int max_step = -1;
  std::map<std::pair<int, int>, double> values;  // (u_index, channel) of max step
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f[5];
    for (int i = 0; i < 5; ++i)
      if (!std::getline(ss, f[i], i == 4 ? '\n' : ','))
        throw std::runtime_error("io: malformed row in " + path);
    int step = std::stoi(f[0]);
    if (step > max_step) {
      max_step = step;
      values.clear();
    }
    if (step == max_step)
      values[{std::stoi(f[2]), std::stoi(f[3])}] = std::stod(f[4]);
  }
  if (values.empty()) throw std::runtime_error("io: no rows in " + path);
  int n_points = 0, d = 0;
  for (const auto& [key, v] : values) {
    n_points = std::max(n_points, key.first + 1);
    d = std::max(d, key.second + 1);
  }
  if (n_points < 3) throw std::runtime_error("io: need at least 3 grid points in " + path);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n_points, d);
  for (const auto& [key, v] : values) X(key.first, key.second) = v;
  PathSample p;
  p.grid = Grid(n_points - 2, length);
  p.endpoint_a = X.row(0).transpose();
  p.endpoint_b = X.row(n_points - 1).transpose();
  p.interior = X.middleRows(1, n_points - 2);
  return p;
}

void write_trajectory_fasp(const std::string& path,
                           const std::vector<PathSample>& steps,
                           const std::vector<double>& times) {
  if (steps.empty() || steps.size() != times.size())
    throw std::invalid_argument("io: fasp needs matching non-empty steps/times");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot write " + path);
  out.write("FASP", 4);
  std::uint32_t version = 1;
  std::uint32_t n_rec = static_cast<std::uint32_t>(steps.size());
  std::uint32_t n_pts = static_cast<std::uint32_t>(steps[0].interior.rows() + 2);
  std::uint32_t d = static_cast<std::uint32_t>(steps[0].channels());
  for (std::uint32_t v : {version, n_rec, n_pts, d})
    out.write(reinterpret_cast<const char*>(&v), 4);
  for (std::size_t s = 0; s < steps.size(); ++s) {
    write_f64(out, &times[s], 1);
    Eigen::MatrixXd X = steps[s].with_endpoints().transpose();  // channel-fastest
    write_f64(out, X.data(), static_cast<std::size_t>(X.size()));
  }
}

std::vector<PathSample> read_trajectory_fasp(const std::string& path,
                                             std::vector<double>* times,
                                             double length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "FASP", 4) != 0)
    throw std::runtime_error("io: not a FASP file: " + path);
  std::uint32_t version, n_rec, n_pts, d;
  for (std::uint32_t* v : {&version, &n_rec, &n_pts, &d})
    in.read(reinterpret_cast<char*>(v), 4);
  if (!in || version != 1 || n_pts < 3 || d < 1)
    throw std::runtime_error("io: bad FASP header in " + path);
  std::vector<PathSample> out;
  out.reserve(n_rec);
  if (times) times->clear();
  for (std::uint32_t r = 0; r < n_rec; ++r) {
    double t;
    read_f64(in, &t, 1);
    if (times) times->push_back(t);
    Eigen::MatrixXd Xt(d, n_pts);
    read_f64(in, Xt.data(), static_cast<std::size_t>(Xt.size()));
    Eigen::MatrixXd X = Xt.transpose();
    PathSample p;
    p.grid = Grid(static_cast<int>(n_pts) - 2, length);
    p.endpoint_a = X.row(0).transpose();
    p.endpoint_b = X.row(n_pts - 1).transpose();
    p.interior = X.middleRows(1, n_pts - 2);
    out.push_back(std::move(p));
  }
  return out;
}

void write_metrics_json(const std::string& path, const MetricsReport& r) {
  json j;
  j["thp"] = r.thp;
  j["ets_mean"] = r.ets_mean;
  j["ets_std"] = r.ets_std;
  j["llk_mean"] = r.llk_mean;
  j["llk_std"] = r.llk_std;
  j["n_paths"] = r.n_paths;
  j["config_hash"] = r.config_hash;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string epoch_log_line(const EpochLog& lg) {
  json j;
  j["epoch"] = lg.epoch;
  j["loss"] = lg.loss;
  if (std::isfinite(lg.ets_mean)) {
    j["ets_mean"] = lg.ets_mean;
    j["ets_std"] = lg.ets_std;
  } else {
    j["ets_mean"] = nullptr;
    j["ets_std"] = nullptr;
  }
  j["wall_ms"] = lg.wall_ms;
  j["dropped"] = lg.dropped;
  j["buffer_fill"] = lg.buffer_fill;
  return j.dump();
}

}  // namespace io
}  // namespace fas
