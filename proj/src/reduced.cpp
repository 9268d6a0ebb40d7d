#include "bred/reduced.hpp"

#include <cmath>

namespace bred {

ReducedDynamics::ReducedDynamics(const ModelSpec& spec)
    : spec_(spec), nP(spec.nP), nV(spec.nV), nG(spec.nG), nM(spec.nM), eps_(spec.params.eps()) {}

double ReducedDynamics::potential(const RVec& y) const {
  return spec_.eval_potential(Vec(y.head(nM)), Vec(y.tail(nV)));
}

void ReducedDynamics::grad_sigma(const RVec& y, RVec& g) const {
  const int n = dim();
  g.resize(n);
  for (int k = 0; k < n; ++k) {
    RVec yp = y, ym = y;
    yp(k) += fd_step;
    ym(k) -= fd_step;
    g(k) = (log_d(yp) - log_d(ym)) / (2.0 * fd_step);
  }
}

double ReducedDynamics::jacobian_integrand(const RVec& y) const {
  const int n = dim();
  const double h = fd_step2;
  RVec gs, bt;
  grad_sigma(y, gs);
  drift(y, true, bt);
  RMat g;
  inverse_metric(y, g);
  double s0 = log_d(y);
  double lap = bt.dot(gs);
  for (int k = 0; k < n; ++k)
    for (int l = k; l < n; ++l) {
      double hkl;
      if (k == l) {
        RVec yp = y, ym = y;
        yp(k) += h;
        ym(k) -= h;
        hkl = (log_d(yp) - 2.0 * s0 + log_d(ym)) / (h * h);
        lap += g(k, k) * hkl;
      } else {
        RVec ypp = y, ypm = y, ymp = y, ymm = y;
        ypp(k) += h, ypp(l) += h;
        ypm(k) += h, ypm(l) -= h;
        ymp(k) -= h, ymp(l) += h;
        ymm(k) -= h, ymm(l) -= h;
        hkl = (log_d(ypp) - log_d(ypm) - log_d(ymp) + log_d(ymm)) / (4.0 * h * h);
        lap += 2.0 * g(k, l) * hkl;
      }
    }
  return lap + 0.25 * gs.dot(g * gs);
}

void ReducedDynamics::strat_correction(const RVec& y, bool adapted, RVec& c) const {
  const int n = dim();
  RMat X, Xp, Xm;
  if (adapted)
    diffusion_adapted(y, X);
  else
    diffusion(y, X);
  c = RVec::Zero(n);
  for (int j = 0; j < X.cols(); ++j) {
    RVec dir = X.col(j);
    if (dir.squaredNorm() == 0.0) continue;
    RVec yp = y + fd_step * dir, ym = y - fd_step * dir;
    if (adapted) {
      diffusion_adapted(yp, Xp);
      diffusion_adapted(ym, Xm);
    } else {
      diffusion(yp, Xp);
      diffusion(ym, Xm);
    }
    c += (Xp.col(j) - Xm.col(j)) / (2.0 * fd_step);
  }
}

GeometryBlocks GenericReduced::blocks(const RVec& y) const {
  return geometry_blocks(spec_, Vec(y.head(nM)), Vec(y.tail(nV)));
}

void GenericReduced::inverse_metric(const RVec& y, RMat& g) const { g = blocks(y).reduced_inverse; }

double GenericReduced::log_d(const RVec& y) const { return std::log(blocks(y).d); }

double GenericReduced::H(const RVec& y) const { return blocks(y).H; }

void GenericReduced::drift(const RVec& y, bool tilde, RVec& b) const {
  const int n = dim();
  b = RVec::Zero(n);
  auto wg = [&](const RVec& z, double& w) {
    GeometryBlocks bl = blocks(z);
    w = std::sqrt(tilde ? bl.H : bl.d * bl.H);
    return RMat(w * bl.reduced_inverse);
  };
  double w0;
  wg(y, w0);
  for (int l = 0; l < n; ++l) {
    RVec yp = y, ym = y;
    yp(l) += fd_step;
    ym(l) -= fd_step;
    double w;
    RMat gp = wg(yp, w), gm = wg(ym, w);
    b += (gp.col(l) - gm.col(l)) / (2.0 * fd_step);
  }
  b /= w0;
}

void GenericReduced::diffusion(const RVec& y, RMat& X) const {
  GeometryBlocks bl = blocks(y);
  const int n = dim();
  X = RMat::Zero(n, n);
  Mat Xx = sym_sqrt(bl.h_inv);
  Mat R = bl.K_V.transpose() * bl.gamma_inv * bl.K_V + spec_.V_metric.inverse();
  X.topLeftCorner(nM, nM) = Xx;
  X.bottomLeftCorner(nV, nM) = bl.K_V.transpose() * bl.A_gamma * Xx;
  X.bottomRightCorner(nV, nV) = sym_sqrt(R);
}

void GenericReduced::diffusion_adapted(const RVec& y, RMat& X) const {
  GeometryBlocks bl = blocks(y);
  X = RMat::Zero(dim(), nP + nV);
  Mat XP = sym_sqrt(bl.G_inv);
  X.topLeftCorner(nM, nP) = bl.T * bl.N_P * XP;
  X.bottomLeftCorner(nV, nP) = bl.N_V * XP;
  X.bottomRightCorner(nV, nV) = sym_sqrt(spec_.V_metric.inverse());
}

ChannelCoeffs GenericReduced::channel_coeffs(const RVec& y) const {
  GeometryBlocks bl = blocks(y);
  ChannelCoeffs cc;
  cc.Gamma2 = 0.5 * eps_ * bl.d_inv;
  Mat Xx = sym_sqrt(bl.h_inv);
  Mat R = bl.K_V.transpose() * bl.gamma_inv * bl.K_V + spec_.V_metric.inverse();
  cc.W.resize(nG, nM + nV);
  cc.W.leftCols(nM) = bl.A_gamma * Xx;
  cc.W.rightCols(nV) = bl.A_p * sym_sqrt(R);

  const double w0 = std::sqrt(bl.d * bl.H);
  RVec divA = RVec::Zero(nG), divK = RVec::Zero(nG);
  for (int k = 0; k < nM + nV; ++k) {
    RVec yp = y, ym = y;
    yp(k) += fd_step;
    ym(k) -= fd_step;
    GeometryBlocks bp = blocks(yp), bm = blocks(ym);
    double wp = std::sqrt(bp.d * bp.H), wm = std::sqrt(bm.d * bm.H);
    if (k < nM) {
      Mat Fp = wp * bp.h_inv * bp.A_gamma.transpose(), Fm = wm * bm.h_inv * bm.A_gamma.transpose();
      divA += ((Fp.row(k) - Fm.row(k)) / (2.0 * fd_step)).transpose();
    } else {
      int b = k - nM;
      divK += (wp * bp.K_V.col(b) - wm * bm.K_V.col(b)) / (2.0 * fd_step);
    }
  }
  Mat LGL = bl.Lambda * bl.G_inv * bl.Lambda.transpose();
  cc.Gamma1 = -0.5 * eps_ * (divA / w0 + RVec(LGL * Vec(divK / w0)));
  return cc;
}

ReducedA::ReducedA(const ModelSpec& spec)
    : ReducedDynamics(spec), R1(spec.params.R1), R2(spec.params.R2), q(spec.params.q) {}

void ReducedA::drift(const RVec& y, bool tilde, RVec& b) const {
  double r2 = y(1) * y(1) + y(2) * y(2);
  double d = R2 * R2 + q * q * r2;
  double k = -q * q * (1.0 / (R2 * R2) + (tilde ? 1.0 / d : 0.0));
  b.resize(3);
  b << 0.0, k * y(1), k * y(2);
}

void ReducedA::diffusion(const RVec& y, RMat& X) const {
  double K0 = -q * y(2), K1 = q * y(1);
  double k2 = K0 * K0 + K1 * K1;
  X = RMat::Zero(3, 3);
  X(0, 0) = 1.0 / R1;
  double s = k2 > 0.0 ? (std::sqrt(1.0 + k2 / (R2 * R2)) - 1.0) / k2 : 0.0;
  X(1, 1) = 1.0 + s * K0 * K0;
  X(1, 2) = s * K0 * K1;
  X(2, 1) = s * K0 * K1;
  X(2, 2) = 1.0 + s * K1 * K1;
}

void ReducedA::diffusion_adapted(const RVec& y, RMat& X) const {
  double K0 = -q * y(2), K1 = q * y(1);
  X = RMat::Zero(3, 4);
  X(0, 0) = 1.0 / R1;
  X(1, 1) = -K0 / R2;
  X(2, 1) = -K1 / R2;
  X(1, 2) = 1.0;
  X(2, 3) = 1.0;
}

void ReducedA::inverse_metric(const RVec& y, RMat& g) const {
  double K0 = -q * y(2), K1 = q * y(1);
  g = RMat::Zero(3, 3);
  g(0, 0) = 1.0 / (R1 * R1);
  g(1, 1) = 1.0 + K0 * K0 / (R2 * R2);
  g(1, 2) = g(2, 1) = K0 * K1 / (R2 * R2);
  g(2, 2) = 1.0 + K1 * K1 / (R2 * R2);
}

double ReducedA::log_d(const RVec& y) const {
  return std::log(R2 * R2 + q * q * (y(1) * y(1) + y(2) * y(2)));
}

double ReducedA::H(const RVec& y) const {
  return R1 * R1 * R2 * R2 / (R2 * R2 + q * q * (y(1) * y(1) + y(2) * y(2)));
}

void ReducedA::grad_sigma(const RVec& y, RVec& g) const {
  double d = R2 * R2 + q * q * (y(1) * y(1) + y(2) * y(2));
  g.resize(3);
  g << 0.0, 2.0 * q * q * y(1) / d, 2.0 * q * q * y(2) / d;
}

double ReducedA::jacobian_integrand(const RVec& y) const {
  double r2 = y(1) * y(1) + y(2) * y(2);
  double d = R2 * R2 + q * q * r2;
  return (4.0 * q * q * R2 * R2 - q * q * q * q * r2) / (d * d);
}

ChannelCoeffs ReducedA::channel_coeffs(const RVec& y) const {
  double d = R2 * R2 + q * q * (y(1) * y(1) + y(2) * y(2));
  ChannelCoeffs cc;
  cc.Gamma1 = RVec::Zero(1);
  cc.Gamma2 = RMat::Constant(1, 1, 0.5 * eps_ / d);
  double s = 1.0 / (R2 * std::sqrt(d));
  cc.W.resize(1, 3);
  cc.W << 0.0, -q * y(2) * s, q * y(1) * s;
  return cc;
}

ReducedC::ReducedC(const ModelSpec& spec) : ReducedDynamics(spec), c(spec.params.c) {}

void ReducedC::drift(const RVec& y, bool tilde, RVec& b) const {
  double r2 = y.squaredNorm();
  double k = -2.0 * (1.0 / c + (tilde ? 1.0 / (c + r2) : 0.0));
  b = k * y;
}

void ReducedC::diffusion(const RVec& y, RMat& X) const {
  double r2 = y.squaredNorm();
  X = RMat::Identity(3, 3);
  if (r2 == 0.0) return;
  double s = std::sqrt(1.0 + r2 / c) - 1.0;
  X += s * (RMat::Identity(3, 3) - y * y.transpose() / r2);
}

void ReducedC::diffusion_adapted(const RVec& y, RMat& X) const {
  X = RMat::Zero(3, 6);
  X.leftCols(3) = -hat(Vec3(y(0), y(1), y(2))) / std::sqrt(c);
  X.rightCols(3).setIdentity();
}

void ReducedC::inverse_metric(const RVec& y, RMat& g) const {
  double r2 = y.squaredNorm();
  g = (1.0 + r2 / c) * RMat::Identity(3, 3) - y * y.transpose() / c;
}

double ReducedC::log_d(const RVec& y) const { return std::log(c) + 2.0 * std::log(c + y.squaredNorm()); }

double ReducedC::H(const RVec& y) const {
  double t = c / (c + y.squaredNorm());
  return t * t;
}

void ReducedC::grad_sigma(const RVec& y, RVec& g) const { g = 4.0 * y / (c + y.squaredNorm()); }

double ReducedC::jacobian_integrand(const RVec& y) const {
  double s = c + y.squaredNorm();
  return 12.0 * c / (s * s);
}

ChannelCoeffs ReducedC::channel_coeffs(const RVec& y) const {
  double r2 = y.squaredNorm();
  ChannelCoeffs cc;
  cc.Gamma1 = RVec::Zero(3);
  RMat P = RMat::Identity(3, 3);
  RMat rad = RMat::Zero(3, 3);
  if (r2 > 0.0) {
    rad = y * y.transpose() / r2;
    P -= rad;
  }
  cc.Gamma2 = 0.5 * eps_ * (P / (c + r2) + rad / c);
  cc.W = -hat(Vec3(y(0), y(1), y(2))) / std::sqrt(c * (c + r2));
  return cc;
}

std::unique_ptr<ReducedDynamics> make_reduced(const ModelSpec& spec, bool prefer_analytic) {
  if (prefer_analytic && spec.id == 'A') return std::make_unique<ReducedA>(spec);
  if (prefer_analytic && spec.id == 'C') return std::make_unique<ReducedC>(spec);
  return std::make_unique<GenericReduced>(spec);
}

RVec reduced_coords(const AdaptedPoint& pt) {
  RVec y(pt.x.size() + pt.ft.size());
  y << pt.x, pt.ft;
  return y;
}

AdaptedPoint adapted_point(const ModelSpec& spec, const RVec& y, const GroupElement& a) {
  AdaptedPoint p;
  p.x = y.head(spec.nM);
  p.ft = y.tail(spec.nV);
  p.a = a;
  return p;
}

}  // namespace bred
