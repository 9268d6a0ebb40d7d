#include <cmath>
#include <complex>

#include "bred/geometry.hpp"

namespace bred {

namespace {

Mat rot2(double t) {
  Mat r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

Mat jgen2(double charge) {
  Mat j(2, 2);
  j << 0.0, -charge, charge, 0.0;
  return j;
}

// Stereographic coordinates of S^3 from the point (-1, 0, 0, 0).
Eigen::Vector4d s3_point(const Vec& Q) {
  double s = Q.squaredNorm();
  Eigen::Vector4d p;
  p(0) = (1.0 - s) / (1.0 + s);
  for (int k = 0; k < 3; ++k) p(k + 1) = 2.0 * Q(k) / (1.0 + s);
  return p;
}

Eigen::Matrix<double, 4, 3> s3_point_jac(const Vec& Q) {
  double s = Q.squaredNorm(), w = 1.0 + s;
  Eigen::Matrix<double, 4, 3> J;
  for (int B = 0; B < 3; ++B) {
    J(0, B) = -4.0 * Q(B) / (w * w);
    for (int k = 0; k < 3; ++k) J(k + 1, B) = (k == B ? 2.0 / w : 0.0) - 4.0 * Q(k) * Q(B) / (w * w);
  }
  return J;
}

Vec s3_coords(const Eigen::Vector4d& p) {
  Vec Q(3);
  for (int k = 0; k < 3; ++k) Q(k) = p(k + 1) / (1.0 + p(0));
  return Q;
}

// dQ from dp (columns) at p.
Mat s3_coords_push(const Eigen::Vector4d& p, const Mat& dp) {
  Mat dQ(3, dp.cols());
  double w = 1.0 + p(0);
  for (int c = 0; c < dp.cols(); ++c)
    for (int k = 0; k < 3; ++k) dQ(k, c) = (dp(k + 1, c) * w - p(k + 1) * dp(0, c)) / (w * w);
  return dQ;
}

Eigen::Vector4d hopf_rotate(const Eigen::Vector4d& p, double t) {
  double c = std::cos(t), s = std::sin(t);
  return Eigen::Vector4d(c * p(0) - s * p(1), s * p(0) + c * p(1), c * p(2) - s * p(3), s * p(2) + c * p(3));
}

Eigen::Vector4d hopf_section_point(const Vec& x, Eigen::Matrix<double, 4, 2>* jac) {
  double s = 1.0 + x.squaredNorm();
  double z1 = 1.0 / std::sqrt(s);
  Eigen::Vector4d p(z1, 0.0, x(0) * z1, x(1) * z1);
  if (jac) {
    double s32 = std::pow(s, -1.5);
    for (int i = 0; i < 2; ++i) {
      double dz = -x(i) * s32;
      (*jac)(0, i) = dz;
      (*jac)(1, i) = 0.0;
      (*jac)(2, i) = (i == 0 ? z1 : 0.0) + x(0) * dz;
      (*jac)(3, i) = (i == 1 ? z1 : 0.0) + x(1) * dz;
    }
  }
  return p;
}

}  // namespace

ModelSpec model_A(const ModelParams& p) {
  ModelSpec s;
  s.id = 'A';
  s.name = "flat torus x plane, U(1) charge q";
  s.nP = 2;
  s.nV = 2;
  s.nG = 1;
  s.nM = 1;
  s.group = GroupKind::U1;
  s.params = p;
  s.V_metric = Mat::Identity(2, 2);
  s.Jbar = {jgen2(p.q)};
  s.structure = {Mat::Zero(1, 1)};
  const double R1 = p.R1, R2 = p.R2, q = p.q, v0 = p.v0;
  s.P_metric = [R1, R2](const Vec&) {
    Mat g = Mat::Zero(2, 2);
    g(0, 0) = R1 * R1;
    g(1, 1) = R2 * R2;
    return g;
  };
  s.action = [](const Vec& Q, const GroupElement& g) {
    Vec r = Q;
    r(1) += g.theta;
    return r;
  };
  s.killing_P = [](const Vec&) {
    Mat k(1, 2);
    k << 0.0, 1.0;
    return k;
  };
  s.gauge = [](const Vec& Q) {
    Vec c(1);
    c(0) = Q(1);
    return c;
  };
  s.gauge_jac = [](const Vec&) {
    Mat j(1, 2);
    j << 0.0, 1.0;
    return j;
  };
  s.section = [](const Vec& x) {
    Vec Q(2);
    Q << x(0), 0.0;
    return Q;
  };
  s.section_jac = [](const Vec&) {
    Mat j(2, 1);
    j << 1.0, 0.0;
    return j;
  };
  s.rep_bar = [q](const GroupElement& g) { return rot2(q * g.theta); };
  s.potential = [v0](const Vec& x, const Vec&) { return v0 * std::cos(x(0)); };
  s.in_chart = [](const Vec&) { return true; };
  s.to_adapted = [q](const Vec& Q, const Vec& f, Vec& x, Vec& ft, GroupElement& a) {
    x = Q.head(1);
    a = GroupElement::identity(GroupKind::U1);
    a.theta = Q(1);
    ft = rot2(-q * Q(1)) * f;
  };
  return s;
}

ModelSpec model_B(const ModelParams& p) {
  ModelSpec s;
  s.id = 'B';
  s.name = "Hopf bundle S3 -> S2, U(1) charge n on C";
  s.nP = 3;
  s.nV = 2;
  s.nG = 1;
  s.nM = 2;
  s.group = GroupKind::U1;
  s.params = p;
  s.V_metric = Mat::Identity(2, 2);
  const double n = p.n, v0 = p.v0;
  s.Jbar = {jgen2(n)};
  s.structure = {Mat::Zero(1, 1)};
  s.P_metric = [](const Vec& Q) {
    double w = 1.0 + Q.squaredNorm();
    return Mat(Mat::Identity(3, 3) * (4.0 / (w * w)));
  };
  s.action = [](const Vec& Q, const GroupElement& g) { return s3_coords(hopf_rotate(s3_point(Q), g.theta)); };
  s.killing_P = [](const Vec& Q) {
    Eigen::Vector4d pt = s3_point(Q);
    Mat dp(4, 1);
    dp << -pt(1), pt(0), -pt(3), pt(2);
    return Mat(s3_coords_push(pt, dp).transpose());
  };
  s.gauge = [](const Vec& Q) {
    Eigen::Vector4d pt = s3_point(Q);
    Vec c(1);
    c(0) = std::atan2(pt(1), pt(0));
    return c;
  };
  s.gauge_jac = [](const Vec& Q) {
    Eigen::Vector4d pt = s3_point(Q);
    Eigen::Matrix<double, 4, 3> J = s3_point_jac(Q);
    double r2 = pt(0) * pt(0) + pt(1) * pt(1);
    Mat j(1, 3);
    for (int B = 0; B < 3; ++B) j(0, B) = (pt(0) * J(1, B) - pt(1) * J(0, B)) / r2;
    return j;
  };
  s.section = [](const Vec& x) { return s3_coords(hopf_section_point(x, nullptr)); };
  s.section_jac = [](const Vec& x) {
    Eigen::Matrix<double, 4, 2> J;
    Eigen::Vector4d pt = hopf_section_point(x, &J);
    return s3_coords_push(pt, Mat(J));
  };
  s.rep_bar = [n](const GroupElement& g) { return rot2(n * g.theta); };
  s.potential = [v0](const Vec&, const Vec& ft) { return v0 * std::exp(-ft.squaredNorm()); };
  s.in_chart = [](const Vec& x) { return x.norm() < 10.0; };
  s.to_adapted = [n](const Vec& Q, const Vec& f, Vec& x, Vec& ft, GroupElement& a) {
    Eigen::Vector4d pt = s3_point(Q);
    std::complex<double> z1(pt(0), pt(1)), z2(pt(2), pt(3));
    std::complex<double> w = z2 / z1;
    x = Vec(2);
    x << w.real(), w.imag();
    a = GroupElement::identity(GroupKind::U1);
    a.theta = std::arg(z1);
    ft = rot2(-n * a.theta) * f;
  };
  return s;
}

ModelSpec model_C(const ModelParams& p) {
  ModelSpec s;
  s.id = 'C';
  s.name = "SU(2) right translations, adjoint representation on R3";
  s.nP = 3;
  s.nV = 3;
  s.nG = 3;
  s.nM = 0;
  s.group = GroupKind::SU2;
  s.params = p;
  s.V_metric = Mat::Identity(3, 3);
  for (int a = 0; a < 3; ++a) s.Jbar.push_back(-hat(Vec3::Unit(a)));
  s.structure.assign(3, Mat::Zero(3, 3));
  s.structure[2](0, 1) = 1.0;
  s.structure[2](1, 0) = -1.0;
  s.structure[0](1, 2) = 1.0;
  s.structure[0](2, 1) = -1.0;
  s.structure[1](2, 0) = 1.0;
  s.structure[1](0, 2) = -1.0;
  const double c = p.c, v0 = p.v0;
  s.P_metric = [c](const Vec& Q) {
    Mat3 Jr = right_jacobian(Vec3(Q(0), Q(1), Q(2)));
    return Mat(c * Jr.transpose() * Jr);
  };
  s.action = [](const Vec& Q, const GroupElement& g) {
    return Vec(su2_log(su2_exp(Vec3(Q(0), Q(1), Q(2))) * g.q));
  };
  s.killing_P = [](const Vec& Q) {
    Mat3 Jr = right_jacobian(Vec3(Q(0), Q(1), Q(2)));
    return Mat(Jr.inverse().transpose());
  };
  s.gauge = [](const Vec& Q) { return Q; };
  s.gauge_jac = [](const Vec&) { return Mat(Mat::Identity(3, 3)); };
  s.section = [](const Vec&) { return Vec(Vec::Zero(3)); };
  s.section_jac = [](const Vec&) { return Mat(3, 0); };
  s.rep_bar = [](const GroupElement& g) { return Mat(su2_adjoint(g.q).transpose()); };
  s.potential = [v0](const Vec&, const Vec& ft) { return v0 * std::exp(-ft.squaredNorm()); };
  s.in_chart = [](const Vec&) { return true; };
  s.to_adapted = [](const Vec& Q, const Vec& f, Vec& x, Vec& ft, GroupElement& a) {
    x = Vec(0);
    a = GroupElement::from_coords(GroupKind::SU2, Q);
    ft = su2_adjoint(a.q) * f;
  };
  return s;
}

ModelSpec make_model(char id, const ModelParams& p) {
  switch (id) {
    case 'A':
      return model_A(p);
    case 'B':
      return model_B(p);
    case 'C':
      return model_C(p);
    default:
      throw ConfigError(std::string("unknown model id: ") + id);
  }
}

}  // namespace bred
