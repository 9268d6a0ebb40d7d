#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bred/filtering.hpp"

namespace bred {

// Density on [0, 2 pi) of an angle diffusing with generator eps/(2 R^2) d^2/dtheta^2.
double heat_kernel_circle(double R, double t, double theta, double eps = 1.0, int nmax = 10);

// Density w.r.t. Riemannian volume on the unit S3 for generator eps/2 Lap, at geodesic distance psi.
double heat_kernel_s3(double t, double psi, double eps = 1.0);
// Leading image term e^{s} (4 pi s)^{-3/2} psi/sin(psi) e^{-psi^2/4s}, s = eps t / 2.
double heat_kernel_s3_principal(double t, double psi, double eps = 1.0);

// Channel generator applied to a matrix-valued function of (x, f~);
// derivatives of phi by central differences with step h.
CMat generator_apply(const ModelSpec& spec, const std::function<CMat(const RVec&)>& phi, const RVec& y,
                     const RepChannel& ch, double h = 1e-4);

struct GridSpec {
  int nx = 64;     // periodic x nodes
  int nf = 48;     // intervals per f~ axis on [-L, L]
  double L = 6.0;
  double dt = 0.0;  // 0: largest stable step
  int workers = 1;
};

struct GridSolution {
  GridSpec grid;
  double hx = 0.0, hf = 0.0, dt = 0.0, t_span = 0.0;
  double dt_max = 0.0;  // explicit stability bound
  int steps = 0;
  std::string boundary = "dirichlet-terminal";
  std::vector<double> values;  // index (i * (nf+1) + j) * (nf+1) + k
  double at_node(int i, int j, int k) const;
  double value_at(double x, double f1, double f2) const;  // trilinear
};

// Backward Kolmogorov solve for Model A on the reduced space with the xi~ generator,
// potential V/(eps m) and (jacobian = true) the reduction Jacobian -eps/8 J; the
// result is E[phi(end) ...] in the same normalisation as semigroup_reduced_zero.
GridSolution pde_backward_solve(const ModelSpec& spec, const std::function<double(double, double, double)>& phi,
                                double t_span, const GridSpec& grid, bool jacobian = true);

}  // namespace bred
