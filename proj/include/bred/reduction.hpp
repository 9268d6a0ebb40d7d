#pragma once

#include "bred/sde.hpp"

namespace bred {

struct SigmaDerivatives {
  double sigma = 0.0;
  Vec grad_x, grad_f;
  Mat hess;  // full (x, f~) Hessian of ln d
};

SigmaDerivatives sigma_derivatives(const ReducedDynamics& dyn, const RVec& y);
// Lap_M~ sigma + 1/4 <d sigma, d sigma> with the reduced inverse metric.
double jacobian_integrand(const ReducedDynamics& dyn, const RVec& y);
// <d sigma, d sigma> with the reduced inverse metric.
double sigma_quad_form(const ReducedDynamics& dyn, const RVec& y);

struct ReducedDrifts {
  Vec bi, ba;
};
ReducedDrifts reduced_drifts(const ReducedDynamics& dyn, const RVec& y);

// Accumulates the Ito log-weight of d mu^xi / d mu^xi~ and the dual (closed-form) Jacobian
// along a xi~ path: theta = sqrt(eps)/4 X~^T grad sigma at the left point.
class GirsanovAccumulator {
 public:
  GirsanovAccumulator(const ReducedDynamics& dyn, const RVec& y0);
  void step(const RVec& y0, const RVec& y1, const RVec& dW, double dt);
  double log_weight() const { return logw_; }
  // ln[(d_b/d_a)^{1/4}] - eps/8 int (Lap sigma + 1/4 |d sigma|^2) du, trapezoidal.
  double log_jacobian(const RVec& y_end) const;
  double integrand_integral() const { return jint_; }

 private:
  const ReducedDynamics& dyn_;
  double logw_ = 0.0, jint_ = 0.0, j_prev_, sigma_a_;
};

struct JacobianReport {
  double integrand_integral = 0.0;
  double boundary_factor = 1.0;
  double path_log_weight = 0.0;
};

JacobianReport girsanov_log_weight(const ReducedDynamics& dyn, const PathSample& path);

}  // namespace bred
