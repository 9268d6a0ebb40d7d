#pragma once

#include <complex>
#include <string>
#include <vector>

#include "bred/sde.hpp"

namespace bred {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;

// Irreducible representation: U(1) charge n (label = n) or SU(2) spin j (label = 2j).
struct RepChannel {
  GroupKind group = GroupKind::U1;
  int label = 0;
  int dim = 1;
  std::vector<CMat> J;  // generators, J[mu] = d/dt D(exp(t e_mu)) at t = 0
  CMat D(const GroupElement& a) const;
  std::string name() const;
};

RepChannel channel(const ModelSpec& spec, int label);
RepChannel channel(GroupKind group, int label);

struct GammaCoefficients {
  RVec Gamma1;
  RMat Gamma2;
};
GammaCoefficients gamma_coefficients(const ReducedDynamics& dyn, const RVec& y);

// Exponent of one step of the ordered product, trapezoidal in the coefficients.
CMat channel_step_exponent(const RepChannel& ch, double eps, const ChannelCoeffs& c0, const ChannelCoeffs& c1,
                           const RVec& dW, double dt);
CMat channel_step_factor(const RepChannel& ch, double eps, const ChannelCoeffs& c0, const ChannelCoeffs& c1,
                         const RVec& dW, double dt);

struct MultiplicativeIntegral {
  CMat value;
  int label = 0;
  std::uint64_t path = 0;
  int steps = 0;
};

// Ordered product over steps [from, to) of a path with stored states and increments;
// later factors multiply on the left.
MultiplicativeIntegral multiplicative_integral(const ReducedDynamics& dyn, const PathSample& path,
                                               const RepChannel& ch, int from = 0, int to = -1);

struct MatrixEstimate {
  CMat value, stderr_;
  long n = 0;
};

MatrixEstimate filtered_expectation(const std::vector<MultiplicativeIntegral>& ints, const RepChannel& ch,
                                    const GroupElement& theta0);

// Normalized Haar quadrature.
struct HaarQuadrature {
  std::vector<GroupElement> nodes;
  std::vector<double> weights;
};
HaarQuadrature haar_u1(int n = 256);
HaarQuadrature haar_su2(int n_angle = 16);

// Peter-Weyl coefficients c_pq = d * int f(a) conj(D_pq(a)) dmu(a).
CMat peter_weyl_coefficients(const std::function<double(const GroupElement&)>& f, const RepChannel& ch,
                             const HaarQuadrature& quad);

}  // namespace bred
