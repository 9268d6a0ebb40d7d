#include "bred/reduction.hpp"

#include <cmath>

namespace bred {

SigmaDerivatives sigma_derivatives(const ReducedDynamics& dyn, const RVec& y) {
  const int nM = dyn.spec().nM, nV = dyn.spec().nV, n = nM + nV;
  if (y.size() != n) throw ConfigError("reduced point has the wrong dimension");
  SigmaDerivatives s;
  s.sigma = dyn.log_d(y);
  RVec g;
  dyn.grad_sigma(y, g);
  s.grad_x = g.head(nM);
  s.grad_f = g.tail(nV);
  const double h = dyn.fd_step2;
  s.hess = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    RVec yp = y, ym = y;
    yp(k) += h;
    ym(k) -= h;
    RVec gp, gm;
    dyn.grad_sigma(yp, gp);
    dyn.grad_sigma(ym, gm);
    s.hess.col(k) = (gp - gm) / (2.0 * h);
  }
  return s;
}

double jacobian_integrand(const ReducedDynamics& dyn, const RVec& y) { return dyn.jacobian_integrand(y); }

double sigma_quad_form(const ReducedDynamics& dyn, const RVec& y) {
  RVec g;
  RMat gi;
  dyn.grad_sigma(y, g);
  dyn.inverse_metric(y, gi);
  return g.dot(gi * g);
}

ReducedDrifts reduced_drifts(const ReducedDynamics& dyn, const RVec& y) {
  RVec b;
  dyn.drift(y, true, b);
  const int nM = dyn.spec().nM, nV = dyn.spec().nV;
  return {Vec(b.head(nM)), Vec(b.tail(nV))};
}

GirsanovAccumulator::GirsanovAccumulator(const ReducedDynamics& dyn, const RVec& y0)
    : dyn_(dyn), j_prev_(dyn.jacobian_integrand(y0)), sigma_a_(dyn.log_d(y0)) {}

void GirsanovAccumulator::step(const RVec& y0, const RVec& y1, const RVec& dW, double dt) {
  RVec g;
  RMat X;
  dyn_.grad_sigma(y0, g);
  dyn_.diffusion(y0, X);
  RVec theta = (0.25 * std::sqrt(dyn_.eps())) * (X.transpose() * g);
  logw_ += theta.dot(dW) - 0.5 * theta.squaredNorm() * dt;
  double j1 = dyn_.jacobian_integrand(y1);
  jint_ += 0.5 * (j_prev_ + j1) * dt;
  j_prev_ = j1;
}

double GirsanovAccumulator::log_jacobian(const RVec& y_end) const {
  return 0.25 * (dyn_.log_d(y_end) - sigma_a_) - 0.125 * dyn_.eps() * jint_;
}

JacobianReport girsanov_log_weight(const ReducedDynamics& dyn, const PathSample& path) {
  if (path.states.size() != path.increments.size() + 1) throw ConfigError("path lacks stored increments");
  GirsanovAccumulator acc(dyn, path.states.front());
  for (std::size_t k = 0; k < path.increments.size(); ++k)
    acc.step(path.states[k], path.states[k + 1], path.increments[k], path.grid.dt);
  JacobianReport r;
  r.integrand_integral = acc.integrand_integral();
  r.boundary_factor = std::pow(std::exp(dyn.log_d(path.states.back()) - dyn.log_d(path.states.front())), 0.25);
  r.path_log_weight = acc.log_weight();
  return r;
}

}  // namespace bred
