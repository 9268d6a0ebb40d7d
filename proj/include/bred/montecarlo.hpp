#pragma once

#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "bred/filtering.hpp"
#include "bred/reduction.hpp"

namespace bred {

struct McConfig {
  long n_paths = 10000;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  int workers = 1;
};

struct Estimate {
  double value = 0.0, stderr_ = 0.0;
  long n_paths = 0, n_failed = 0;
  double dt = 0.0, t_a = 0.0, t_b = 0.0;
  std::uint64_t seed = 0;
  std::string model, channel;
};

// Mean and standard error of the entries with ok != 0.
Estimate make_estimate(const std::vector<double>& v, const std::vector<char>& ok);

// Runs f(i) for i in [0, n) on `workers` threads with contiguous blocks.
template <class F>
void parallel_for(long n, int workers, F&& f) {
  if (workers <= 1 || n < 2) {
    for (long i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> th;
  long chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    long lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    th.emplace_back([lo, hi, &f] {
      for (long i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& t : th) t.join();
}

using TotalFn = std::function<double(const RVec& y, const GroupElement& a)>;
using ReducedFn = std::function<double(const RVec& y)>;
using CoeffFn = std::function<CMat(const RVec& y)>;

// Checkpoint times must lie on the grid; an empty list means {t_b}.
std::vector<Estimate> semigroup_total(const ModelSpec& spec, const TotalFn& phi0, const AdaptedPoint& start,
                                      const TimeGrid& grid, const McConfig& cfg,
                                      std::vector<double> checkpoints = {});

// E over xi~ paths of phi(end) exp(int V/(eps m)) (d_b/d_a)^{1/4} exp(-eps/8 int J).
// With jacobian = false the xi process (drift b) is used without weights.
std::vector<Estimate> semigroup_reduced_zero(const ReducedDynamics& dyn, const ReducedFn& phi, const RVec& y0,
                                             const TimeGrid& grid, const McConfig& cfg,
                                             std::vector<double> checkpoints = {}, bool jacobian = true);

struct ChannelEstimate {
  RepChannel ch;
  MatrixEstimate Y;  // E[c(end)^T M exp(int V)]
  cplx value;        // tr(Y D(theta0))
  double stderr_re = 0.0, stderr_im = 0.0;
};

struct ChannelSum {
  std::vector<ChannelEstimate> channels;
  Estimate total;  // real part of the channel sum, per-path combined
  long n_failed = 0;
};

// Channel semigroups on the xi process (drift b, filtered diffusion).
ChannelSum semigroup_channel(const ReducedDynamics& dyn, const std::vector<CoeffFn>& c, const std::vector<RepChannel>& chs,
                             const RVec& y0, const GroupElement& theta0, const TimeGrid& grid, const McConfig& cfg);

cplx group_average(const HaarQuadrature& quad, const std::function<cplx(const GroupElement&)>& f);
cplx group_average(const HaarQuadrature& quad, const std::vector<cplx>& samples);

struct IdentityReport {
  double t = 0.0;
  Estimate lhs, rhs;
  double diff = 0.0, sigma = 0.0, rel = 0.0;
  bool pass = false;
};

// Weak form of the zero-momentum reduction identity at each checkpoint, with phi0 = phi o pi'
// and the section lift (x_a, e, f~_a) as total start point.  The two sides use independent streams.
std::vector<IdentityReport> reduction_identity_experiment(const ReducedDynamics& dyn, const ReducedFn& phi,
                                                          const RVec& y0, const TimeGrid& grid, const McConfig& cfg,
                                                          std::vector<double> checkpoints = {}, double rel_tol = 0.05);

}  // namespace bred
