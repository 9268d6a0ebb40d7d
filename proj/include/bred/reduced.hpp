#pragma once

#include <memory>

#include "bred/geometry.hpp"

namespace bred {

using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;
using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

// Coefficients of the channel equation for the conditional group expectation:
// du part Gamma1^mu J_mu + Gamma2^{mu nu} J_mu J_nu, dw part
// -sqrt(eps) (W dw)^nu J_nu with W = [A_gamma X~^x | A~ X~^a_b].
struct ChannelCoeffs {
  RVec Gamma1;
  RMat Gamma2;
  RMat W;
};

// Dynamics on the reduced space (x, f~) in the coordinates of a ModelSpec.
// Drifts are first-order generator coefficients (dy = eps/2 b dt + sqrt(eps) X dw).
class ReducedDynamics {
 public:
  explicit ReducedDynamics(const ModelSpec& spec);
  virtual ~ReducedDynamics() = default;

  const ModelSpec& spec() const { return spec_; }
  int dim() const { return nM + nV; }
  int channels() const { return nM + nV; }
  int adapted_channels() const { return nP + nV; }
  double eps() const { return eps_; }
  virtual bool analytic() const { return false; }

  // tilde = true: reduced drift b~ (density sqrt(H)); false: b (density sqrt(dH)).
  virtual void drift(const RVec& y, bool tilde, RVec& b) const = 0;
  // Filtered diffusion X~, dim x channels.
  virtual void diffusion(const RVec& y, RMat& X) const = 0;
  // Adapted-coordinate diffusion of (x, f~) before filtering, dim x (nP + nV).
  virtual void diffusion_adapted(const RVec& y, RMat& X) const = 0;
  virtual void inverse_metric(const RVec& y, RMat& g) const = 0;
  virtual double log_d(const RVec& y) const = 0;
  virtual double H(const RVec& y) const = 0;
  virtual void grad_sigma(const RVec& y, RVec& g) const;
  virtual double jacobian_integrand(const RVec& y) const;
  virtual ChannelCoeffs channel_coeffs(const RVec& y) const = 0;
  double potential(const RVec& y) const;

  // sum_k (X_k . grad) X_k for the filtered (adapted = false) or adapted diffusion.
  void strat_correction(const RVec& y, bool adapted, RVec& c) const;

  double fd_step = 1e-5;
  double fd_step2 = 1e-4;

 protected:
  ModelSpec spec_;
  int nP, nV, nG, nM;
  double eps_;
};

// Built from GeometryBlocks with finite-difference derivatives.
class GenericReduced : public ReducedDynamics {
 public:
  explicit GenericReduced(const ModelSpec& spec) : ReducedDynamics(spec) {}
  void drift(const RVec& y, bool tilde, RVec& b) const override;
  void diffusion(const RVec& y, RMat& X) const override;
  void diffusion_adapted(const RVec& y, RMat& X) const override;
  void inverse_metric(const RVec& y, RMat& g) const override;
  double log_d(const RVec& y) const override;
  double H(const RVec& y) const override;
  ChannelCoeffs channel_coeffs(const RVec& y) const override;

 private:
  GeometryBlocks blocks(const RVec& y) const;
};

// Closed forms for Model A.
class ReducedA : public ReducedDynamics {
 public:
  explicit ReducedA(const ModelSpec& spec);
  bool analytic() const override { return true; }
  void drift(const RVec& y, bool tilde, RVec& b) const override;
  void diffusion(const RVec& y, RMat& X) const override;
  void diffusion_adapted(const RVec& y, RMat& X) const override;
  void inverse_metric(const RVec& y, RMat& g) const override;
  double log_d(const RVec& y) const override;
  double H(const RVec& y) const override;
  void grad_sigma(const RVec& y, RVec& g) const override;
  double jacobian_integrand(const RVec& y) const override;
  ChannelCoeffs channel_coeffs(const RVec& y) const override;

 private:
  double R1, R2, q;
};

// Closed forms for Model C.
class ReducedC : public ReducedDynamics {
 public:
  explicit ReducedC(const ModelSpec& spec);
  bool analytic() const override { return true; }
  void drift(const RVec& y, bool tilde, RVec& b) const override;
  void diffusion(const RVec& y, RMat& X) const override;
  void diffusion_adapted(const RVec& y, RMat& X) const override;
  void inverse_metric(const RVec& y, RMat& g) const override;
  double log_d(const RVec& y) const override;
  double H(const RVec& y) const override;
  void grad_sigma(const RVec& y, RVec& g) const override;
  double jacobian_integrand(const RVec& y) const override;
  ChannelCoeffs channel_coeffs(const RVec& y) const override;

 private:
  double c;
};

std::unique_ptr<ReducedDynamics> make_reduced(const ModelSpec& spec, bool prefer_analytic = true);

RVec reduced_coords(const AdaptedPoint& pt);
AdaptedPoint adapted_point(const ModelSpec& spec, const RVec& y, const GroupElement& a);

}  // namespace bred
