#include "bred/cli.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace bred {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_value(const std::string& key, const std::string& s) {
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  T v{};
  is >> v;
  if (is.fail() || !(is >> std::ws).eof()) throw ConfigError("bad value for " + key + ": '" + s + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("bad boolean for " + key + ": '" + s + "'");
}

char parse_model(const std::string& s) {
  if (s.size() != 1 || (s[0] != 'A' && s[0] != 'B' && s[0] != 'C')) throw ConfigError("model must be A, B or C: '" + s + "'");
  return s[0];
}

std::vector<int> parse_channels(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (!tok.empty()) out.push_back(parse_value<int>("channels", tok));
  }
  return out;
}

// key -> setter, shared by the config file and the environment
using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = {
      {"run.experiment", [](RunConfig& c, const std::string& v) { c.experiment = v; }},
      {"run.model", [](RunConfig& c, const std::string& v) { c.model = parse_model(v); }},
      {"run.process", [](RunConfig& c, const std::string& v) { c.process = v; }},
      {"run.t_a", [](RunConfig& c, const std::string& v) { c.t_a = parse_value<double>("t_a", v); }},
      {"run.t_b", [](RunConfig& c, const std::string& v) { c.t_b = parse_value<double>("t_b", v); }},
      {"run.dt", [](RunConfig& c, const std::string& v) { c.dt = parse_value<double>("dt", v); }},
      {"run.paths", [](RunConfig& c, const std::string& v) { c.n_paths = parse_value<long>("paths", v); }},
      {"run.seed", [](RunConfig& c, const std::string& v) { c.seed = parse_value<std::uint64_t>("seed", v); }},
      {"run.workers", [](RunConfig& c, const std::string& v) { c.workers = parse_value<int>("workers", v); }},
      {"run.channels", [](RunConfig& c, const std::string& v) { c.channels = parse_channels(v); }},
      {"model.R1", [](RunConfig& c, const std::string& v) { c.params.R1 = parse_value<double>("R1", v); }},
      {"model.R2", [](RunConfig& c, const std::string& v) { c.params.R2 = parse_value<double>("R2", v); }},
      {"model.q", [](RunConfig& c, const std::string& v) { c.params.q = parse_value<double>("q", v); }},
      {"model.n", [](RunConfig& c, const std::string& v) { c.params.n = parse_value<int>("n", v); }},
      {"model.c", [](RunConfig& c, const std::string& v) { c.params.c = parse_value<double>("c", v); }},
      {"model.mu", [](RunConfig& c, const std::string& v) { c.params.mu = parse_value<double>("mu", v); }},
      {"model.kappa", [](RunConfig& c, const std::string& v) { c.params.kappa = parse_value<double>("kappa", v); }},
      {"model.m", [](RunConfig& c, const std::string& v) { c.params.m = parse_value<double>("m", v); }},
      {"model.v0", [](RunConfig& c, const std::string& v) { c.params.v0 = parse_value<double>("v0", v); }},
      {"tolerance.sigma", [](RunConfig& c, const std::string& v) { c.tol_sigma = parse_value<double>("sigma", v); }},
      {"tolerance.rel", [](RunConfig& c, const std::string& v) { c.tol_rel = parse_value<double>("rel", v); }},
      {"tolerance.residual", [](RunConfig& c, const std::string& v) { c.tol_residual = parse_value<double>("residual", v); }},
      {"tolerance.fd", [](RunConfig& c, const std::string& v) { c.tol_fd = parse_value<double>("fd", v); }},
      {"output.dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
      {"output.json", [](RunConfig& c, const std::string& v) { c.json = parse_bool("json", v); }},
  };
  return m;
}

const std::vector<std::pair<const char*, const char*>>& env_keys() {
  static const std::vector<std::pair<const char*, const char*>> e = {
      {"BRED_EXPERIMENT", "run.experiment"}, {"BRED_MODEL", "run.model"}, {"BRED_PATHS", "run.paths"},
      {"BRED_DT", "run.dt"},                 {"BRED_T", "run.t_b"},        {"BRED_SEED", "run.seed"},
      {"BRED_WORKERS", "run.workers"},       {"BRED_OUT", "output.dir"}};
  return e;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char ch : s) o += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return o + "\"";
}

}  // namespace

void RunConfig::validate() const {
  bool known = false;
  for (const auto& e : experiments()) known = known || experiment == e.name;
  if (!known) throw ConfigError("unknown experiment: " + experiment);
  parse_model(std::string(1, model));
  if (process != "original" && process != "adapted" && process != "filtered" && process != "reduced")
    throw ConfigError("process must be original, adapted, filtered or reduced");
  auto pos = [](double v, const char* k) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(k) + " must be positive");
  };
  pos(dt, "dt");
  pos(params.R1, "R1");
  pos(params.R2, "R2");
  pos(params.c, "c");
  pos(params.mu, "mu");
  pos(params.kappa, "kappa");
  pos(params.m, "m");
  pos(tol_sigma, "tolerance.sigma");
  pos(tol_rel, "tolerance.rel");
  pos(tol_residual, "tolerance.residual");
  pos(tol_fd, "tolerance.fd");
  if (!(t_a >= 0.0) || !(t_b >= 0.0)) throw ConfigError("times must be non-negative");
  if (t_a != 0.0) throw ConfigError("experiments start at t_a = 0");
  if (t_b > 0.0 && std::abs(t_b / dt - std::round(t_b / dt)) > 1e-9) throw ConfigError("t must be a multiple of dt");
  if (n_paths < 0) throw ConfigError("paths must be positive");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (params.n == 0) throw ConfigError("model B charge n must be nonzero");
}

std::string list_experiments(bool json) {
  if (json) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& e : experiments()) a.push_back({{"name", e.name}, {"description", e.description}});
    return a.dump(2) + "\n";
  }
  std::string s;
  for (const auto& e : experiments()) s += std::string(e.name) + "  " + e.description + "\n";
  return s;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const auto& S = setters();
  for (const auto& sec : pt) {
    if (sec.second.empty() && !sec.second.data().empty()) throw ConfigError("config: key outside a section: " + sec.first);
    for (const auto& kv : sec.second) {
      std::string key = sec.first + "." + kv.first;
      auto it = S.find(key);
      if (it == S.end()) throw ConfigError("config: unknown key " + key);
      it->second(base, kv.second.data());
    }
  }
  return base;
}

void apply_env(RunConfig& cfg) {
  for (const auto& [var, key] : env_keys())
    if (const char* v = std::getenv(var)) setters().at(key)(cfg, v);
}

std::string csv_header() {
  return "experiment,model,channel,quantity,value,stderr,target,tolerance,pass,n_paths,dt,seed";
}

std::string csv_line(const ResultRow& r) {
  std::string s = csv_escape(r.experiment) + "," + r.model + "," + csv_escape(r.channel) + "," + csv_escape(r.quantity) +
                  "," + fmt17(r.value) + "," + fmt17(r.stderr_) + "," + (r.has_target ? fmt17(r.target) : "") + "," +
                  fmt17(r.tolerance) + "," + (r.pass ? "true" : "false") + "," + std::to_string(r.n_paths) + "," +
                  fmt17(r.dt) + "," + std::to_string(r.seed);
  return s;
}

std::string json_summary(const RunConfig& cfg, const std::vector<ResultRow>& rows, double wall_time) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["experiment"] = cfg.experiment;
  j["model"] = std::string(1, cfg.model);
  j["seed"] = cfg.seed;
  j["dt"] = cfg.dt;
  j["workers"] = cfg.workers;
  j["wall_time"] = wall_time;
  bool all = true;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    all = all && r.pass;
    nlohmann::json o = {{"experiment", r.experiment}, {"model", r.model},    {"channel", r.channel},
                        {"quantity", r.quantity},     {"value", r.value},    {"stderr", r.stderr_},
                        {"tolerance", r.tolerance},   {"pass", r.pass},      {"n_paths", r.n_paths},
                        {"dt", r.dt},                 {"seed", r.seed},      {"wall_time", r.wall_time}};
    o["target"] = r.has_target ? nlohmann::json(r.target) : nlohmann::json(nullptr);
    arr.push_back(o);
  }
  j["all_pass"] = all;
  j["n_rows"] = rows.size();
  j["rows"] = arr;
  return j.dump(2) + "\n";
}

int cli_main(int argc, char** argv) {
  CLI::App app{"bred: stochastic reduction experiments"};
  app.require_subcommand(0, 1);
  bool list_json = false;
  app.add_flag("--json", list_json, "print the experiment list as JSON");

  auto* list = app.add_subcommand("list", "list experiments");
  bool lj = false;
  list->add_flag("--json", lj, "JSON array");

  auto* run = app.add_subcommand("run", "run one experiment");
  std::string config_path, experiment, model, out;
  long paths = 0;
  double dt = 0, t = 0;
  std::uint64_t seed = 0;
  int workers = 0;
  bool json = false;
  auto* o_config = run->add_option("--config", config_path, "config file");
  auto* o_exp = run->add_option("--experiment", experiment, "experiment name");
  auto* o_model = run->add_option("--model", model, "A, B or C");
  auto* o_paths = run->add_option("--paths", paths, "Monte Carlo paths");
  auto* o_dt = run->add_option("--dt", dt, "time step");
  auto* o_t = run->add_option("--t", t, "final time");
  auto* o_seed = run->add_option("--seed", seed, "master seed");
  auto* o_workers = run->add_option("--workers", workers, "worker threads");
  auto* o_out = run->add_option("--out", out, "output directory");
  run->add_flag("--json", json, "also write the JSON summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return 2;
  }

  if (!run->parsed()) {
    std::cout << list_experiments(list_json || lj);
    return 0;
  }

  RunConfig cfg;
  try {
    if (*o_config) cfg = load_config(config_path, cfg);
    apply_env(cfg);
    const auto& S = setters();
    if (*o_exp) cfg.experiment = experiment;
    if (*o_model) S.at("run.model")(cfg, model);
    if (*o_paths) cfg.n_paths = paths;
    if (*o_dt) cfg.dt = dt;
    if (*o_t) cfg.t_b = t;
    if (*o_seed) cfg.seed = seed;
    if (*o_workers) cfg.workers = workers;
    if (*o_out) cfg.out_dir = out;
    if (json) cfg.json = true;
    cfg.validate();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  std::vector<ResultRow> rows;
  auto t0 = std::chrono::steady_clock::now();
  try {
    rows = run_experiment(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 3;
  }
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::filesystem::create_directories(cfg.out_dir);
  std::string stem = cfg.out_dir + "/" + cfg.experiment + "_" + std::string(1, cfg.model);
  {
    std::ofstream f(stem + ".csv", std::ios::binary);
    f << csv_header() << "\n";
    for (const auto& r : rows) f << csv_line(r) << "\n";
  }
  if (cfg.json) {
    std::ofstream f(stem + ".json", std::ios::binary);
    f << json_summary(cfg, rows, wall);
  }

  bool all = true;
  int npass = 0;
  for (const auto& r : rows) {
    all = all && r.pass;
    npass += r.pass;
    std::printf("%-5s %-44s %-8s %.6g", r.pass ? "ok" : "FAIL", r.quantity.c_str(), r.channel.c_str(), r.value);
    if (r.has_target) std::printf("  target %.6g +- %.3g", r.target, r.tolerance);
    std::printf("\n");
  }
  std::printf("%s model %c: %d/%zu rows pass, %.1f s -> %s.csv\n", cfg.experiment.c_str(), cfg.model, npass, rows.size(),
              wall, stem.c_str());
  return all ? 0 : 1;
}

}  // namespace bred
