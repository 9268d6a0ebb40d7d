#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bred/geometry.hpp"

namespace bred {

struct RunConfig {
  std::string experiment = "geometry-audit";
  char model = 'A';
  ModelParams params;
  std::string process = "reduced";
  double t_a = 0.0;
  double t_b = 0.0;  // 0: experiment default
  double dt = 1e-3;
  long n_paths = 0;  // 0: experiment default
  std::uint64_t seed = 20240611;
  int workers = 1;
  std::vector<int> channels;
  double tol_sigma = 3.0;
  double tol_rel = 0.05;
  double tol_residual = 1e-10;
  double tol_fd = 1e-5;
  std::string out_dir = ".";
  bool json = false;
  void validate() const;
};

struct ResultRow {
  std::string experiment, model, channel, quantity;
  double value = 0.0, stderr_ = 0.0, target = 0.0, tolerance = 0.0;
  bool has_target = false;
  bool pass = true;
  long n_paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
};

struct ExperimentInfo {
  const char* name;
  const char* description;
};
const std::vector<ExperimentInfo>& experiments();
std::string list_experiments(bool json);

std::vector<ResultRow> run_experiment(const RunConfig& cfg);

// INI-style file with sections [run], [model], [tolerance], [output]; throws ConfigError.
RunConfig load_config(const std::string& path, RunConfig base = {});
// Applies BRED_* environment overrides.
void apply_env(RunConfig& cfg);

std::string csv_header();
std::string csv_line(const ResultRow& r);
std::string json_summary(const RunConfig& cfg, const std::vector<ResultRow>& rows, double wall_time);

inline constexpr int kSchemaVersion = 1;

int cli_main(int argc, char** argv);

}  // namespace bred
