#include "bred/geometry.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace bred {

Mat sym_sqrt(const Mat& A, double floor) {
  if (A.rows() == 0) return A;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
  Vec ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < floor) {
      std::ostringstream os;
      os << "square-root argument indefinite, smallest eigenvalue " << ev(i);
      throw NumericalDegeneracyError(os.str());
    }
    ev(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Mat sym_inv_sqrt(const Mat& A) {
  if (A.rows() == 0) return A;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
  Vec ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) <= 0.0) throw NumericalDegeneracyError("inverse square root of a non-positive matrix");
    ev(i) = 1.0 / std::sqrt(ev(i));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Mat ModelSpec::eval_killing_P(const Vec& Q) const {
  if (killing_P) return killing_P(Q);
  Mat K(nG, nP);
  for (int al = 0; al < nG; ++al) {
    Vec e = Vec::Zero(nG);
    e(al) = fd_step;
    Vec qp = action(Q, GroupElement::from_coords(group, e));
    Vec qm = action(Q, GroupElement::from_coords(group, -e));
    K.row(al) = ((qp - qm) / (2.0 * fd_step)).transpose();
  }
  return K;
}

Mat ModelSpec::eval_gauge_jac(const Vec& Q) const {
  if (gauge_jac) return gauge_jac(Q);
  Mat J(nG, nP);
  for (int B = 0; B < nP; ++B) {
    Vec qp = Q, qm = Q;
    qp(B) += fd_step;
    qm(B) -= fd_step;
    J.col(B) = (gauge(qp) - gauge(qm)) / (2.0 * fd_step);
  }
  return J;
}

Mat ModelSpec::eval_section_jac(const Vec& x) const {
  if (section_jac) return section_jac(x);
  Mat J(nP, nM);
  for (int i = 0; i < nM; ++i) {
    Vec xp = x, xm = x;
    xp(i) += fd_step;
    xm(i) -= fd_step;
    J.col(i) = (section(xp) - section(xm)) / (2.0 * fd_step);
  }
  return J;
}

double ModelSpec::eval_potential(const Vec& x, const Vec& ft) const {
  return potential ? potential(x, ft) : 0.0;
}

void ModelSpec::validate(double tol) const {
  if (V_metric.rows() != nV || V_metric.cols() != nV) throw ConfigError("V metric has wrong shape");
  if ((V_metric - V_metric.transpose()).norm() > tol) throw ConfigError("V metric not symmetric");
  Eigen::LLT<Mat> llt(V_metric);
  if (llt.info() != Eigen::Success) throw ConfigError("V metric not positive definite");
  if (static_cast<int>(Jbar.size()) != nG) throw ConfigError("generator count differs from group dimension");
  for (int a = 0; a < nG; ++a)
    for (int b = 0; b < nG; ++b) {
      Mat comm = Jbar[a] * Jbar[b] - Jbar[b] * Jbar[a];
      Mat rhs = Mat::Zero(nV, nV);
      for (int g = 0; g < nG; ++g) rhs -= structure[g](a, b) * Jbar[g];
      if ((comm - rhs).norm() > tol) throw ConfigError("generators do not close with the declared structure constants");
    }
  std::mt19937_64 rng(12345);
  for (int s = 0; s < 10; ++s) {
    AdaptedPoint pt = random_point(*this, rng);
    Vec Qs = section(pt.x);
    if (gauge(Qs).norm() > 1e-9) throw ConfigError("section does not lie on the gauge surface");
    Mat G = P_metric(Qs);
    Eigen::LLT<Mat> lp(G);
    if (lp.info() != Eigen::Success) throw ConfigError("P metric not positive definite");
  }
}

GeometryBlocks geometry_blocks(const ModelSpec& s, const Vec& x, const Vec& ft) {
  if (s.in_chart && !s.in_chart(x)) throw ChartError("base point outside the chart range");
  GeometryBlocks b;
  const int nP = s.nP, nV = s.nV, nG = s.nG, nM = s.nM;
  b.Qs = s.section(x);
  b.Qs_x = nM > 0 ? s.eval_section_jac(x) : Mat(nP, 0);
  b.G = s.P_metric(b.Qs);
  b.G_inv = b.G.inverse();
  b.K_P = s.eval_killing_P(b.Qs);
  b.K_V.resize(nG, nV);
  for (int al = 0; al < nG; ++al) b.K_V.row(al) = (s.Jbar[al] * ft).transpose();

  b.gamma = b.K_P * b.G * b.K_P.transpose();
  b.gamma_prime = b.K_V * s.V_metric * b.K_V.transpose();
  b.d_orbit = b.gamma + b.gamma_prime;
  Eigen::LLT<Mat> lg(b.gamma), ld(b.d_orbit);
  if (lg.info() != Eigen::Success || ld.info() != Eigen::Success)
    throw DegenerateOrbitError("orbit metric not positive definite");
  b.d = b.d_orbit.determinant();
  b.gamma_inv = lg.solve(Mat::Identity(nG, nG));
  b.d_inv = ld.solve(Mat::Identity(nG, nG));

  b.A_i = b.d_inv * b.K_P * b.G * b.Qs_x;
  b.A_p = b.d_inv * b.K_V * s.V_metric;
  b.A_gamma = b.gamma_inv * b.K_P * b.G * b.Qs_x;

  b.chi = s.eval_gauge_jac(b.Qs);
  b.FP = b.chi * b.K_P.transpose();
  double fpdet = b.FP.determinant();
  if (std::abs(fpdet) < 1e-12) {
    std::ostringstream os;
    os << "Faddeev-Popov matrix singular at x = " << x.transpose();
    throw GribovError(os.str());
  }
  b.Lambda = b.FP.inverse() * b.chi;
  b.N_P = Mat::Identity(nP, nP) - b.K_P.transpose() * b.Lambda;
  b.N_V = -b.K_V.transpose() * b.Lambda;
  Mat chiT = b.G_inv * b.chi.transpose() * b.gamma;
  b.P_perp = Mat::Identity(nP, nP) - chiT * (b.chi * chiT).inverse() * b.chi;

  b.GH = b.G - b.G * b.K_P.transpose() * b.gamma_inv * b.K_P * b.G;
  b.GH_tilde = b.G - b.G * b.K_P.transpose() * b.d_inv * b.K_P * b.G;
  b.GH_tilde_Pa = -b.G * b.K_P.transpose() * b.d_inv * b.K_V * s.V_metric;
  b.GH_tilde_ab = s.V_metric - s.V_metric * b.K_V.transpose() * b.d_inv * b.K_V * s.V_metric;

  b.h = b.Qs_x.transpose() * b.GH * b.Qs_x;
  b.h_tilde = b.Qs_x.transpose() * b.GH_tilde * b.Qs_x;
  if (nM > 0) {
    Eigen::LLT<Mat> lh(b.h);
    if (lh.info() != Eigen::Success) throw DegenerateMetricError("horizontal metric h not positive definite");
    b.h_inv = lh.solve(Mat::Identity(nM, nM));
  } else {
    b.h_inv = Mat(0, 0);
  }
  b.T = b.h_inv * b.Qs_x.transpose() * b.GH * b.P_perp;

  const int nR = nM + nV;
  b.reduced_metric.resize(nR, nR);
  b.reduced_metric.topLeftCorner(nM, nM) = b.h_tilde;
  b.reduced_metric.topRightCorner(nM, nV) = b.Qs_x.transpose() * b.GH_tilde_Pa;
  b.reduced_metric.bottomLeftCorner(nV, nM) = b.GH_tilde_Pa.transpose() * b.Qs_x;
  b.reduced_metric.bottomRightCorner(nV, nV) = b.GH_tilde_ab;
  b.H = b.reduced_metric.determinant();
  if (!(b.H > 0.0)) throw DegenerateMetricError("reduced metric determinant not positive");

  Mat Vinv = s.V_metric.inverse();
  b.reduced_inverse.resize(nR, nR);
  b.reduced_inverse.topLeftCorner(nM, nM) = b.h_inv;
  b.reduced_inverse.topRightCorner(nM, nV) = b.h_inv * b.A_gamma.transpose() * b.K_V;
  b.reduced_inverse.bottomLeftCorner(nV, nM) = b.K_V.transpose() * b.A_gamma * b.h_inv;
  b.reduced_inverse.bottomRightCorner(nV, nV) = b.N_V * b.G_inv * b.N_V.transpose() + Vinv;
  return b;
}

Mat assemble_metric(const ModelSpec& s, const GeometryBlocks& b, const Mat& u) {
  const int nM = s.nM, nV = s.nV, nG = s.nG, n = nM + nV + nG;
  Mat g = Mat::Zero(n, n);
  g.block(0, 0, nM, nM) = b.h_tilde + b.A_i.transpose() * b.d_orbit * b.A_i;
  g.block(0, nM + nV, nM, nG) = b.A_i.transpose() * b.d_orbit * u;
  g.block(nM, nM, nV, nV) = s.V_metric;
  g.block(nM, nM + nV, nV, nG) = b.A_p.transpose() * b.d_orbit * u;
  g.block(nM + nV, 0, nG, nM) = g.block(0, nM + nV, nM, nG).transpose();
  g.block(nM + nV, nM, nG, nV) = g.block(nM, nM + nV, nV, nG).transpose();
  g.block(nM + nV, nM + nV, nG, nG) = u.transpose() * b.d_orbit * u;
  return g;
}

Mat inverse_metric(const ModelSpec& s, const GeometryBlocks& b, const Mat& v) {
  const int nM = s.nM, nV = s.nV, nG = s.nG, n = nM + nV + nG;
  Mat LGL = b.Lambda * b.G_inv * b.Lambda.transpose();
  Mat gi = Mat::Zero(n, n);
  gi.block(0, 0, nM + nV, nM + nV) = b.reduced_inverse;
  gi.block(0, nM + nV, nM, nG) = -b.h_inv * b.A_gamma.transpose() * v.transpose();
  gi.block(nM, nM + nV, nV, nG) = -b.K_V.transpose() * LGL * v.transpose();
  gi.block(nM + nV, 0, nG, nM) = gi.block(0, nM + nV, nM, nG).transpose();
  gi.block(nM + nV, nM, nG, nV) = gi.block(nM, nM + nV, nV, nG).transpose();
  gi.block(nM + nV, nM + nV, nG, nG) = v * LGL * v.transpose();
  return gi;
}

KillingFields killing_fields(const ModelSpec& s, const AdaptedPoint& pt) {
  if (s.in_chart && !s.in_chart(pt.x)) throw ChartError("base point outside the chart range");
  KillingFields k;
  k.K_P = s.eval_killing_P(s.section(pt.x));
  k.K_V.resize(s.nG, s.nV);
  for (int al = 0; al < s.nG; ++al) k.K_V.row(al) = (s.Jbar[al] * pt.ft).transpose();
  return k;
}

OrbitMetrics orbit_metrics(const ModelSpec& s, const AdaptedPoint& pt) {
  GeometryBlocks b = geometry_blocks(s, pt.x, pt.ft);
  return {b.gamma, b.gamma_prime, b.d_orbit, b.d};
}

MechanicalConnection mechanical_connection(const ModelSpec& s, const AdaptedPoint& pt) {
  GeometryBlocks b = geometry_blocks(s, pt.x, pt.ft);
  return {b.A_i, b.A_p, b.A_gamma};
}

Mat assemble_metric(const ModelSpec& s, const AdaptedPoint& pt) {
  return assemble_metric(s, geometry_blocks(s, pt.x, pt.ft), group_u(pt.a));
}

Mat inverse_metric(const ModelSpec& s, const AdaptedPoint& pt) {
  return inverse_metric(s, geometry_blocks(s, pt.x, pt.ft), group_v(pt.a));
}

HorizontalMetrics horizontal_metrics(const ModelSpec& s, const AdaptedPoint& pt) {
  GeometryBlocks b = geometry_blocks(s, pt.x, pt.ft);
  return {b.h, b.h_inv, b.h_tilde, b.GH, b.GH_tilde, b.GH_tilde_Pa, b.GH_tilde_ab, b.H};
}

Projectors projectors(const ModelSpec& s, const AdaptedPoint& pt) {
  GeometryBlocks b = geometry_blocks(s, pt.x, pt.ft);
  return {b.Lambda, b.FP, b.N_P, b.N_V, b.P_perp, b.T};
}

GroupMatrices group_matrices(const ModelSpec& s, const GroupElement& a) {
  return {group_u(a), group_v(a), s.rep_bar(a)};
}

TotalPoint to_total(const ModelSpec& s, const AdaptedPoint& pt) {
  TotalPoint t;
  t.Q = s.action(s.section(pt.x), pt.a);
  t.f = s.rep_bar(pt.a) * pt.ft;
  return t;
}

Mat total_metric(const ModelSpec& s, const Vec& Q) {
  Mat g = Mat::Zero(s.nP + s.nV, s.nP + s.nV);
  g.topLeftCorner(s.nP, s.nP) = s.P_metric(Q);
  g.bottomRightCorner(s.nV, s.nV) = s.V_metric;
  return g;
}

}  // namespace bred

namespace bred {

double isometry_residual_P(const ModelSpec& s, const Vec& Q, const GroupElement& g, double h) {
  const int n = s.nP;
  Mat F(n, n);
  for (int A = 0; A < n; ++A) {
    Vec qp = Q, qm = Q;
    qp(A) += h;
    qm(A) -= h;
    F.col(A) = (s.action(qp, g) - s.action(qm, g)) / (2.0 * h);
  }
  Mat r = s.P_metric(Q) - F.transpose() * s.P_metric(s.action(Q, g)) * F;
  return r.cwiseAbs().maxCoeff();
}

double isometry_residual_V(const ModelSpec& s, const GroupElement& g) {
  Mat D = s.rep_bar(g);
  return (s.V_metric - D.transpose() * s.V_metric * D).cwiseAbs().maxCoeff();
}

double killing_residual(const ModelSpec& s, const Vec& Q, int alpha, double h) {
  const int n = s.nP;
  Vec K = s.eval_killing_P(Q).row(alpha).transpose();
  Mat G = s.P_metric(Q), dK(n, n), KdG = Mat::Zero(n, n);
  for (int C = 0; C < n; ++C) {
    Vec qp = Q, qm = Q;
    qp(C) += h;
    qm(C) -= h;
    dK.col(C) = (s.eval_killing_P(qp).row(alpha) - s.eval_killing_P(qm).row(alpha)).transpose() / (2.0 * h);
    KdG += K(C) * (s.P_metric(qp) - s.P_metric(qm)) / (2.0 * h);
  }
  Mat L = KdG + G * dK + dK.transpose() * G;
  return L.cwiseAbs().maxCoeff();
}

double pullback_residual(const ModelSpec& s, const AdaptedPoint& pt, double h) {
  const int nM = s.nM, nV = s.nV, nG = s.nG, n = nM + nV + nG;
  Vec ac = pt.a.coords();
  auto phi = [&](const Vec& z) {
    AdaptedPoint p;
    p.x = z.head(nM);
    p.ft = z.segment(nM, nV);
    p.a = GroupElement::from_coords(s.group, z.tail(nG));
    TotalPoint t = to_total(s, p);
    Vec o(s.nP + nV);
    o << t.Q, t.f;
    return o;
  };
  Vec z(n);
  z << pt.x, pt.ft, ac;
  Mat J(s.nP + nV, n);
  for (int k = 0; k < n; ++k) {
    Vec zp = z, zm = z;
    zp(k) += h;
    zm(k) -= h;
    J.col(k) = (phi(zp) - phi(zm)) / (2.0 * h);
  }
  Mat pb = J.transpose() * total_metric(s, phi(z).head(s.nP)) * J;
  Mat g = assemble_metric(s, pt);
  return (pb - g).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff());
}

}  // namespace bred
