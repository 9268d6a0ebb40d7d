#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bred/cli.hpp"

using namespace bred;
namespace fs = std::filesystem;

namespace {

struct Run {
  std::vector<ResultRow> rows;
  double seconds = 0.0;
};

std::map<std::string, Run> cache;

const Run& run(const std::string& experiment, char model) {
  std::string key = experiment + "/" + model;
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  RunConfig c;
  c.experiment = experiment;
  c.model = model;
  auto t0 = std::chrono::steady_clock::now();
  Run r;
  r.rows = run_experiment(c);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return cache[key] = r;
}

bool starts(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

struct Check {
  bool ok = true;
  int rows = 0;
  double seconds = 0.0;
  std::string detail;
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
  // every row matching the predicate passes and satisfies the extra condition
  void rows_of(const std::string& exp, char model, const std::function<bool(const ResultRow&)>& pick,
               const std::function<bool(const ResultRow&)>& cond = nullptr) {
    const Run& r = run(exp, model);
    seconds += r.seconds;
    int n = 0;
    for (const auto& row : r.rows) {
      if (!pick(row)) continue;
      ++n;
      if (!row.pass || (cond && !cond(row))) {
        ok = false;
        char b[256];
        std::snprintf(b, sizeof b, "%s/%c %s = %.3g", exp.c_str(), model, row.quantity.c_str(), row.value);
        note(b);
      }
    }
    if (n == 0) {
      ok = false;
      note(exp + "/" + model + ": no rows");
    }
    rows += n;
  }
  void limit(double s) {
    if (seconds > s) {
      ok = false;
      char b[64];
      std::snprintf(b, sizeof b, "runtime above %.0f s", s);
      note(b);
    }
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bred");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

bool within(const ResultRow& r) { return r.has_target && std::abs(r.value - r.target) <= r.tolerance; }

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"geometry audit: det and inverse-metric identities < 1e-10 on A, B, C",
       [] {
         Check c;
         for (char m : {'A', 'B', 'C'})
           c.rows_of("geometry-audit", m,
                     [](const ResultRow& r) {
                       return r.quantity == "det_identity_max_rel" || r.quantity == "inverse_times_metric_max_abs";
                     },
                     [](const ResultRow& r) { return r.value < 1e-10; });
         c.limit(10);
         return c;
       }},
      {"isometry and Killing suite < 1e-5",
       [] {
         Check c;
         for (char m : {'A', 'B', 'C'})
           c.rows_of("geometry-audit", m,
                     [](const ResultRow& r) {
                       return starts(r.quantity, "pullback") || starts(r.quantity, "isometry") ||
                              starts(r.quantity, "killing");
                     },
                     [](const ResultRow& r) { return r.value < 1e-5; });
         c.limit(30);
         return c;
       }},
      {"filtered-coefficient residuals < 1e-10 on A, B, C",
       [] {
         Check c;
         for (char m : {'A', 'B', 'C'})
           c.rows_of("sde-convergence", m, [](const ResultRow& r) { return starts(r.quantity, "filtered_equation_"); },
                     [](const ResultRow& r) { return r.value < 1e-10; });
         c.limit(10);
         return c;
       }},
      {"law equivalence of adapted and filtered processes within 3 sigma",
       [] {
         Check c;
         for (char m : {'A', 'C'})
           c.rows_of("sde-convergence", m, [](const ResultRow& r) { return starts(r.quantity, "law_phi"); },
                     [](const ResultRow& r) { return r.n_paths == 10000 && within(r); });
         c.limit(120);
         return c;
       }},
      {"Girsanov martingale within 3 sigma and pathwise identity < 2%",
       [] {
         Check c;
         c.rows_of("girsanov-audit", 'A',
                   [](const ResultRow& r) {
                     return starts(r.quantity, "martingale_mean_weight_t") ||
                            r.quantity == "pathwise_identity_mean_rel_dev";
                   },
                   [](const ResultRow& r) {
                     return r.n_paths == 100000 && (r.quantity[0] != 'p' || r.value < 0.02);
                   });
         c.limit(300);
         return c;
       }},
      {"reduction identity on A at t = 0.1, 0.25, 0.5: < 3 sigma and < 5%",
       [] {
         Check c;
         c.rows_of("reduction-identity", 'A',
                   [](const ResultRow& r) { return starts(r.quantity, "diff_t") || starts(r.quantity, "rel_diff_t"); },
                   [](const ResultRow& r) { return r.quantity[0] == 'r' ? r.value < 0.05 : within(r); });
         if (c.rows != 6) {
           c.ok = false;
           c.note("expected six checkpoint rows");
         }
         c.limit(600);
         return c;
       }},
      {"PDE cross-check: Monte Carlo within max(3 sigma, 2%), grid order 2 +- 0.2",
       [] {
         Check c;
         c.rows_of("pde-cross-check", 'A',
                   [](const ResultRow& r) {
                     return starts(r.quantity, "mc_minus_pde_") || r.quantity == "pde_grid_convergence_order";
                   },
                   [](const ResultRow& r) {
                     return r.quantity[0] == 'p' ? std::abs(r.value - 2.0) <= 0.2 : within(r);
                   });
         c.limit(600);
         return c;
       }},
      {"channel consistency, abelian collapse < 1e-3, exact composition",
       [] {
         Check c;
         c.rows_of("channel-consistency", 'A',
                   [](const ResultRow& r) {
                     return r.quantity == "channel_sum_minus_total" || starts(r.quantity, "abelian_collapse") ||
                            starts(r.quantity, "composition");
                   },
                   [](const ResultRow& r) {
                     return starts(r.quantity, "abelian_collapse") ? r.value < 1e-3 : r.quantity[0] == 'c' && r.pass;
                   });
         c.limit(600);
         return c;
       }},
      {"circle and S3 eigenfunction decay within 3 sigma",
       [] {
         Check c;
         c.rows_of("pde-cross-check", 'A',
                   [](const ResultRow& r) {
                     return r.quantity == "circle_eigenfunction_decay" || r.quantity == "s3_eigenfunction_decay";
                   },
                   [](const ResultRow& r) { return r.n_paths == 100000 && within(r); });
         if (c.rows != 2) {
           c.ok = false;
           c.note("expected circle and S3 rows");
         }
         c.limit(300);
         return c;
       }},
      {"determinism: repeated runs give byte-identical CSV",
       [] {
         Check c;
         auto t0 = std::chrono::steady_clock::now();
         fs::path base = fs::temp_directory_path() / "bred_acceptance";
         fs::remove_all(base);
         for (const auto& [exp, model] : std::vector<std::pair<std::string, std::string>>{
                  {"geometry-audit", "B"}, {"girsanov-audit", "C"}, {"channel-consistency", "A"}}) {
           std::string csv[2];
           for (int k = 0; k < 2; ++k) {
             fs::path d = base / (exp + model + std::to_string(k));
             int rc = cli({"run", "--experiment", exp, "--model", model, "--paths", "2000", "--t", "0.1", "--seed", "7",
                           "--workers", "2", "--out", d.string()});
             if (rc == 2 || rc == 3) {
               c.ok = false;
               c.note(exp + " exit code " + std::to_string(rc));
             }
             csv[k] = slurp(d / (exp + "_" + model + ".csv"));
           }
           ++c.rows;
           if (csv[0].empty() || csv[0] != csv[1]) {
             c.ok = false;
             c.note(exp + " CSV differs");
           }
         }
         c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
         return c;
       }},
  };

  std::vector<std::string> lines;
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.ok = false;
      c.note(std::string("exception: ") + e.what());
    }
    all = all && c.ok;
    char b[512];
    std::snprintf(b, sizeof b, "%s %2zu %s [%d rows, %.1f s]%s%s", c.ok ? "PASS" : "FAIL", i + 1,
                  criteria[i].first.c_str(), c.rows, c.seconds, c.detail.empty() ? "" : " ", c.detail.c_str());
    lines.push_back(b);
  }
  std::printf("\n");
  for (const auto& l : lines) std::printf("%s\n", l.c_str());
  return all ? 0 : 1;
}
