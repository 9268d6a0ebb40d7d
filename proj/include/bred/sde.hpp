#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bred/reduced.hpp"

namespace bred {

struct SdeCoefficients {
  Vec drift;
  Mat diffusion;
  std::vector<std::string> row_labels;
  std::vector<std::string> channel_labels;
};

// Original process eta on (Q, f): drift is the chart Laplace-Beltrami first-order coefficient.
SdeCoefficients coefficients_original(const ModelSpec& spec, const Vec& Q, const Vec& f);
// Adapted process zeta on (x, f~, a).  The a-row drift is not formed (NaN).
SdeCoefficients coefficients_adapted(const ModelSpec& spec, const AdaptedPoint& pt);
// Filtered process zeta~ on (x, f~, a) with channels (w~m, w~b, w~beta).
SdeCoefficients coefficients_filtered(const ModelSpec& spec, const AdaptedPoint& pt);

struct FilteredDiffusion {
  Mat Xx, Xa_m, Xa_b, Z, Xal_m, Xal_b, Xal_beta;
  Mat full;  // (nM + nV + nG) square, rows (x, f~, a), channels (m, b, beta)
};

FilteredDiffusion solve_filtered_diffusion(const ModelSpec& spec, const AdaptedPoint& pt);
// Max-abs residuals of the six defining equations at pt.
std::array<double, 6> filtered_residuals(const ModelSpec& spec, const AdaptedPoint& pt);

struct TimeGrid {
  double t_a = 0.0, t_b = 1.0, dt = 1e-3;
  int steps() const;
};

// Per-path generators: one per channel group, seeded from (seed, stream, path, group).
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t path);
  // Fills dW with N(0, dt); the first n_base entries come from the base generator.
  void increments(RVec& dW, int n_base, double dt);

 private:
  std::mt19937_64 base_, fiber_;
  std::normal_distribution<double> nd_;
};

enum class ProcessKind { Original, Adapted, Filtered, Reduced };
const char* process_name(ProcessKind k);

// One Euler-Heun step of dy = a(y) dt + B(y) o dW with a the Stratonovich drift.
using StratFn = std::function<void(const Vec& y, Vec& a, Mat& B)>;
void euler_heun_step(const StratFn& f, Vec& y, const Vec& dW, double dt);

// Reduced-space step: drift eps/2 (b - c), diffusion sqrt(eps) X, where the
// kind selects b or b~ and the adapted or filtered diffusion.
class ReducedStepper {
 public:
  ReducedStepper(const ReducedDynamics& dyn, ProcessKind kind);
  int channels() const { return channels_; }
  int base_channels() const { return base_; }
  void coefficients(const RVec& y, RVec& a, RMat& B) const;
  void step(RVec& y, const RVec& dW, double dt) const;
  const ReducedDynamics& dynamics() const { return dyn_; }

 private:
  const ReducedDynamics& dyn_;
  ProcessKind kind_;
  int channels_, base_;
  bool wrap_x_;
};

// Total-space process eta simulated intrinsically (flat, or geodesic steps on S3 / SU(2)).
class TotalProcess {
 public:
  explicit TotalProcess(const ModelSpec& spec) : spec_(spec), eps_(spec.params.eps()) {}
  virtual ~TotalProcess() = default;
  virtual int state_dim() const = 0;
  virtual int channels() const = 0;
  virtual int base_channels() const = 0;
  virtual RVec lift(const AdaptedPoint& pt) const = 0;
  virtual void step(RVec& s, const RVec& dW, double dt) const = 0;
  virtual void project(const RVec& s, RVec& y, GroupElement& a) const = 0;
  const ModelSpec& spec() const { return spec_; }

 protected:
  ModelSpec spec_;
  double eps_;
};

std::unique_ptr<TotalProcess> make_total(const ModelSpec& spec);

struct PathSample {
  TimeGrid grid;
  std::vector<RVec> states;
  std::vector<RVec> increments;
  double potential_integral = 0.0;
  double log_weight = 0.0;
  Mat multiplicative;
  std::uint64_t seed = 0, stream = 0, path = 0;
  bool failed = false;
  std::string failure;
};

// Reduced kinds simulate (x, f~); Original simulates (Q, f) by Euler-Heun in the chart.
PathSample simulate(const ReducedDynamics& dyn, ProcessKind kind, const RVec& y0, const TimeGrid& grid,
                    std::uint64_t seed, std::uint64_t stream, std::uint64_t path);

}  // namespace bred
