#include "bred/filtering.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

namespace bred {

namespace {

const cplx I1(0.0, 1.0);

CMat su2_fundamental(const Quat& q) {
  CMat U(2, 2);
  U(0, 0) = cplx(q.w(), -q.z());
  U(0, 1) = cplx(-q.y(), -q.x());
  U(1, 0) = cplx(q.y(), -q.x());
  U(1, 1) = cplx(q.w(), q.z());
  return U;
}

}  // namespace

CMat RepChannel::D(const GroupElement& a) const {
  if (a.kind != group) throw ConfigError("channel and group element belong to different groups");
  if (group == GroupKind::U1) return CMat::Constant(1, 1, std::exp(I1 * (label * a.theta)));
  switch (label) {
    case 0:
      return CMat::Ones(1, 1);
    case 1:
      return su2_fundamental(a.q);
    default:
      return su2_adjoint(a.q).cast<cplx>();
  }
}

std::string RepChannel::name() const {
  if (group == GroupKind::U1) return "n=" + std::to_string(label);
  return label % 2 ? "j=" + std::to_string(label) + "/2" : "j=" + std::to_string(label / 2);
}

RepChannel channel(GroupKind group, int label) {
  RepChannel ch;
  ch.group = group;
  ch.label = label;
  if (group == GroupKind::U1) {
    if (label < -8 || label > 8) throw ConfigError("U(1) channels are limited to |n| <= 8");
    ch.dim = 1;
    ch.J = {CMat::Constant(1, 1, I1 * double(label))};
    return ch;
  }
  if (label < 0 || label > 2) throw ConfigError("SU(2) channels are limited to j in {0, 1/2, 1}");
  ch.dim = label + 1;
  for (int k = 0; k < 3; ++k) {
    if (label == 0) {
      ch.J.push_back(CMat::Zero(1, 1));
    } else if (label == 1) {
      Vec3 e = Vec3::Unit(k);
      CMat s(2, 2);
      // -i sigma_k / 2
      s(0, 0) = cplx(0.0, -0.5 * e(2));
      s(0, 1) = cplx(-0.5 * e(1), -0.5 * e(0));
      s(1, 0) = cplx(0.5 * e(1), -0.5 * e(0));
      s(1, 1) = cplx(0.0, 0.5 * e(2));
      ch.J.push_back(s);
    } else {
      ch.J.push_back(hat(Vec3::Unit(k)).cast<cplx>());
    }
  }
  return ch;
}

RepChannel channel(const ModelSpec& spec, int label) { return channel(spec.group, label); }

GammaCoefficients gamma_coefficients(const ReducedDynamics& dyn, const RVec& y) {
  ChannelCoeffs c = dyn.channel_coeffs(y);
  return {c.Gamma1, c.Gamma2};
}

CMat channel_step_exponent(const RepChannel& ch, double eps, const ChannelCoeffs& c0, const ChannelCoeffs& c1,
                           const RVec& dW, double dt) {
  const int nG = static_cast<int>(ch.J.size());
  CMat A = CMat::Zero(ch.dim, ch.dim);
  RVec g1 = 0.5 * (c0.Gamma1 + c1.Gamma1);
  RMat g2 = 0.5 * (c0.Gamma2 + c1.Gamma2);
  RVec w = 0.5 * (c0.W + c1.W) * dW;
  const double se = std::sqrt(eps);
  for (int mu = 0; mu < nG; ++mu) {
    A += (g1(mu) * dt - se * w(mu)) * ch.J[mu];
    for (int nu = 0; nu < nG; ++nu)
      if (g2(mu, nu) != 0.0) A += (g2(mu, nu) * dt) * (ch.J[mu] * ch.J[nu]);
  }
  return A;
}

CMat channel_step_factor(const RepChannel& ch, double eps, const ChannelCoeffs& c0, const ChannelCoeffs& c1,
                         const RVec& dW, double dt) {
  CMat A = channel_step_exponent(ch, eps, c0, c1, dW, dt);
  if (ch.dim == 1) return CMat::Constant(1, 1, std::exp(A(0, 0)));
  return A.exp();
}

MultiplicativeIntegral multiplicative_integral(const ReducedDynamics& dyn, const PathSample& path,
                                               const RepChannel& ch, int from, int to) {
  if (ch.group != dyn.spec().group) throw ConfigError("channel does not match the model's group");
  if (to < 0) to = static_cast<int>(path.increments.size());
  if (from < 0 || to > static_cast<int>(path.increments.size()) || from > to)
    throw ConfigError("step range outside the stored path");
  MultiplicativeIntegral m;
  m.value = CMat::Identity(ch.dim, ch.dim);
  m.label = ch.label;
  m.path = path.path;
  m.steps = to - from;
  if (from == to) return m;
  ChannelCoeffs c0 = dyn.channel_coeffs(path.states[from]);
  for (int k = from; k < to; ++k) {
    ChannelCoeffs c1 = dyn.channel_coeffs(path.states[k + 1]);
    m.value = channel_step_factor(ch, dyn.eps(), c0, c1, path.increments[k], path.grid.dt) * m.value;
    c0 = std::move(c1);
  }
  return m;
}

MatrixEstimate filtered_expectation(const std::vector<MultiplicativeIntegral>& ints, const RepChannel& ch,
                                    const GroupElement& theta0) {
  if (ints.empty()) throw ConfigError("empty ensemble");
  CMat D0 = ch.D(theta0);
  const long n = static_cast<long>(ints.size());
  CMat mean = CMat::Zero(ch.dim, ch.dim);
  Eigen::MatrixXd s2r = Eigen::MatrixXd::Zero(ch.dim, ch.dim), s2i = s2r;
  for (const auto& m : ints) mean += m.value * D0;
  mean /= double(n);
  for (const auto& m : ints) {
    CMat dev = m.value * D0 - mean;
    s2r += dev.real().cwiseAbs2();
    s2i += dev.imag().cwiseAbs2();
  }
  MatrixEstimate e;
  e.n = n;
  e.value = mean;
  double den = n > 1 ? double(n) * double(n - 1) : 1.0;
  e.stderr_ = CMat(ch.dim, ch.dim);
  for (int i = 0; i < ch.dim; ++i)
    for (int j = 0; j < ch.dim; ++j) e.stderr_(i, j) = cplx(std::sqrt(s2r(i, j) / den), std::sqrt(s2i(i, j) / den));
  return e;
}

HaarQuadrature haar_u1(int n) {
  HaarQuadrature h;
  for (int k = 0; k < n; ++k) {
    GroupElement g = GroupElement::identity(GroupKind::U1);
    g.theta = 2.0 * M_PI * k / n;
    h.nodes.push_back(g);
    h.weights.push_back(1.0 / n);
  }
  return h;
}

// g = exp(alpha e3) exp(beta e2) exp(gamma e3), alpha in [0, 2pi), beta in [0, pi], gamma in [0, 4pi);
// Haar density sin(beta) / (16 pi^2).
HaarQuadrature haar_su2(int n_angle) {
  using GL = boost::math::quadrature::gauss<double, 20>;
  std::vector<double> bx, bw;
  for (std::size_t i = 0; i < GL::abscissa().size(); ++i) {
    for (int s : {-1, 1}) {
      bx.push_back(0.5 * M_PI * (1.0 + s * GL::abscissa()[i]));
      bw.push_back(0.5 * M_PI * GL::weights()[i]);
    }
  }
  HaarQuadrature h;
  const int na = n_angle, ng = 2 * n_angle;
  for (int i = 0; i < na; ++i)
    for (std::size_t b = 0; b < bx.size(); ++b)
      for (int k = 0; k < ng; ++k) {
        double al = 2.0 * M_PI * i / na, ga = 4.0 * M_PI * k / ng;
        GroupElement g = GroupElement::identity(GroupKind::SU2);
        g.q = su2_exp(al * Vec3::UnitZ()) * su2_exp(bx[b] * Vec3::UnitY()) * su2_exp(ga * Vec3::UnitZ());
        h.nodes.push_back(g);
        h.weights.push_back(bw[b] * std::sin(bx[b]) / (2.0 * na * ng));
      }
  return h;
}

CMat peter_weyl_coefficients(const std::function<double(const GroupElement&)>& f, const RepChannel& ch,
                             const HaarQuadrature& quad) {
  CMat c = CMat::Zero(ch.dim, ch.dim);
  for (std::size_t k = 0; k < quad.nodes.size(); ++k) c += (quad.weights[k] * f(quad.nodes[k])) * ch.D(quad.nodes[k]).conjugate();
  return double(ch.dim) * c;
}

}  // namespace bred
