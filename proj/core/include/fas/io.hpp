#pragma once

#include <string>
#include <vector>

#include "fas/config.hpp"
#include "fas/control.hpp"
#include "fas/path.hpp"
#include "fas/trainer.hpp"

namespace fas {
namespace io {

struct Checkpoint {
  ControlParams params;
  FullConfig config;
  int epoch = 0;
};

/// Single-line JSON header (version, epoch, parameter count, full resolved
/// config) followed by the little-endian f64 parameter block; byte-for-byte
/// reloadable.
void save_checkpoint(const std::string& path, const ControlParams& params,
                     const FullConfig& config, int epoch);
Checkpoint load_checkpoint(const std::string& path);

/// One CSV per sample, rows (step, t, u_index, channel, value); u_index runs
/// over the full path including both pinned endpoints.
void write_path_csv(const std::string& path, const PathSample& sample, int step,
                    double t);
void write_trajectory_csv(const std::string& path,
                          const std::vector<PathSample>& steps,
                          const std::vector<double>& times);
/// Reads the rows of the largest step index back into a path.
PathSample read_path_csv(const std::string& path, double length = 1.0);

/// Compact binary trajectory: magic "FASP", version u32, record/point/channel
/// counts, then per record a little-endian f64 time and (K+2) x d values.
void write_trajectory_fasp(const std::string& path,
                           const std::vector<PathSample>& steps,
                           const std::vector<double>& times);
std::vector<PathSample> read_trajectory_fasp(const std::string& path,
                                             std::vector<double>* times = nullptr,
                                             double length = 1.0);

struct MetricsReport {
  double thp = 0.0;
  double ets_mean = 0.0, ets_std = 0.0;
  double llk_mean = 0.0, llk_std = 0.0;
  int n_paths = 0;
  std::string config_hash;
};

void write_metrics_json(const std::string& path, const MetricsReport& report);

/// JSON-lines training log, one record per epoch.
std::string epoch_log_line(const EpochLog& lg);

}  // namespace io
}  // namespace fas
