#include <random>

#include "bred/geometry.hpp"
#include "doctest.h"

using namespace bred;

namespace {

AdaptedPoint pointA(double x, double f1, double f2, double a = 0.0) {
  AdaptedPoint p;
  p.x = Vec::Constant(1, x);
  p.ft = Vec(2);
  p.ft << f1, f2;
  p.a = GroupElement::identity(GroupKind::U1);
  p.a.theta = a;
  return p;
}

double maxabs(const Mat& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("model A killing field on the fiber") {
  ModelSpec s = model_A();
  auto k = killing_fields(s, pointA(0.3, 1.0, 0.0));
  // d/dtheta Rot(q theta) (1, 0) at 0
  CHECK(k.K_V(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(k.K_V(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  auto k0 = killing_fields(s, pointA(0.3, 0.0, 0.0));
  CHECK(maxabs(k0.K_V) == 0.0);
}

TEST_CASE("model C killing field against finite differences of the (right) adjoint action") {
  ModelSpec s = model_C();
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    AdaptedPoint p = random_point(s, rng);
    auto k = killing_fields(s, p);
    for (int al = 0; al < 3; ++al) {
      const double h = 1e-6;
      Eigen::Vector3d ax = Eigen::Vector3d::Unit(al);
      Eigen::Matrix3d Rp = Eigen::AngleAxisd(h, ax).toRotationMatrix();
      Eigen::Matrix3d Rm = Eigen::AngleAxisd(-h, ax).toRotationMatrix();
      Eigen::Vector3d fd = (Rp - Rm).transpose() * Eigen::Vector3d(p.ft) / (2 * h);
      CHECK(maxabs(Vec(k.K_V.row(al).transpose()) - Vec(fd)) < 1e-6);
    }
  }
}

TEST_CASE("model A orbit metrics") {
  ModelSpec s = model_A();
  auto o = orbit_metrics(s, pointA(0.0, 1.0, 0.0));
  CHECK(o.gamma(0, 0) == doctest::Approx(1.0));
  CHECK(o.gamma_prime(0, 0) == doctest::Approx(1.0));
  CHECK(o.d == doctest::Approx(2.0));
  CHECK(orbit_metrics(s, pointA(0.0, 0.0, 0.0)).d == doctest::Approx(1.0));
  ModelParams p;
  p.q = 0.0;
  p.R2 = 1.7;
  ModelSpec s0 = model_A(p);
  for (double f : {0.0, 0.5, 3.0}) CHECK(orbit_metrics(s0, pointA(1.0, f, -f)).d == doctest::Approx(1.7 * 1.7));
}

TEST_CASE("mechanical connection") {
  ModelSpec s = model_A();
  auto c0 = mechanical_connection(s, pointA(0.2, 0.0, 0.0));
  CHECK(maxabs(c0.A_p) < 1e-15);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    auto c = mechanical_connection(s, random_point(s, rng));
    CHECK(maxabs(c.A_i) < 1e-12);
    CHECK(maxabs(c.A_gamma) < 1e-12);
  }
}

TEST_CASE("model B connection is the Hopf connection on the section") {
  ModelSpec s = model_B();
  std::mt19937_64 rng(11);
  for (int t = 0; t < 30; ++t) {
    AdaptedPoint p = random_point(s, rng);
    auto c = mechanical_connection(s, p);
    // Im(conj(s) ds) for s = (1, w)/sqrt(1 + |w|^2), w = x1 + i x2
    double w = 1.0 + p.x.squaredNorm();
    Vec hopf(2);
    hopf << -p.x(1) / w, p.x(0) / w;
    CHECK(maxabs(Vec(c.A_gamma.row(0).transpose()) - hopf) < 1e-8);
    auto o = orbit_metrics(s, p);
    CHECK(maxabs(c.A_i - c.A_gamma * (o.gamma(0, 0) / o.d)) < 1e-12);
  }
}

TEST_CASE("assembled metric at a block-diagonal point") {
  ModelSpec s = model_A();
  AdaptedPoint p = pointA(0.4, 0.0, 0.0);
  Mat G = assemble_metric(s, p);
  GeometryBlocks b = geometry_blocks(s, p.x, p.ft);
  Mat D = Mat::Zero(4, 4);
  D(0, 0) = b.h_tilde(0, 0);
  D.block(1, 1, 2, 2) = s.V_metric;
  D(3, 3) = b.d;
  CHECK(maxabs(G - D) < 1e-14);
  Mat Gi = inverse_metric(s, p);
  Mat Di = Mat::Zero(4, 4);
  Di(0, 0) = b.h_inv(0, 0);
  Di.block(1, 1, 2, 2) = s.V_metric.inverse();
  Di(3, 3) = 1.0 / b.gamma(0, 0);
  CHECK(maxabs(Gi - Di) < 1e-14);
}

TEST_CASE("metric identities at random points of all models") {
  for (char id : {'A', 'B', 'C'}) {
    ModelSpec s = make_model(id);
    std::mt19937_64 rng(17);
    for (int t = 0; t < 100; ++t) {
      AdaptedPoint p = random_point(s, rng);
      GeometryBlocks b = geometry_blocks(s, p.x, p.ft);
      auto gm = group_matrices(s, p.a);
      Mat G = assemble_metric(s, b, gm.u), Gi = inverse_metric(s, b, gm.v);
      CHECK(maxabs(G * Gi - Mat::Identity(G.rows(), G.cols())) < 1e-10);
      double du = gm.u.determinant();
      CHECK(std::abs(G.determinant() / (b.d * du * du * b.H) - 1.0) < 1e-10);
      CHECK(pullback_residual(s, p) < 1e-6);
      int nR = s.nM + s.nV;
      CHECK(maxabs(Gi.topLeftCorner(nR, nR) - b.reduced_inverse) < 1e-12);
      CHECK(maxabs(b.N_P * b.N_P - b.N_P) < 1e-12);
      CHECK(maxabs(b.P_perp * b.P_perp - b.P_perp) < 1e-12);
      CHECK(maxabs(b.T * b.Qs_x - Mat::Identity(s.nM, s.nM)) < 1e-10);
      CHECK(maxabs(b.Qs_x * b.T - b.P_perp) < 1e-10);
      CHECK(maxabs(b.N_P * b.P_perp - b.P_perp) < 1e-10);
      CHECK(maxabs(b.P_perp * b.N_P - b.N_P) < 1e-10);
    }
  }
}

TEST_CASE("model A reduced determinant") {
  ModelSpec s = model_A();
  CHECK(horizontal_metrics(s, pointA(0.0, 1.0, 0.0)).H == doctest::Approx(0.5));
  ModelParams p;
  p.q = 0.0;
  ModelSpec s0 = model_A(p);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    AdaptedPoint q = random_point(s0, rng);
    CHECK(horizontal_metrics(s0, q).H == doctest::Approx(1.0).epsilon(1e-12));
    auto hm = horizontal_metrics(s, q);
    CHECK(maxabs(hm.h_tilde - hm.h) < 1e-12);
  }
}

TEST_CASE("projectors") {
  ModelSpec s = model_A();
  auto pr = projectors(s, pointA(0.3, 0.6, -0.2));
  CHECK(pr.FP(0, 0) == doctest::Approx(1.0));
  Eigen::JacobiSVD<Mat> svd(pr.N_P);
  int rank = 0;
  for (int k = 0; k < svd.singularValues().size(); ++k) rank += svd.singularValues()(k) > 1e-10;
  CHECK(rank == s.nP - 1);
  ModelSpec b = model_B();
  double worst = 1e300;
  for (double x1 = -1.5; x1 <= 1.5; x1 += 0.25)
    for (double x2 = -1.5; x2 <= 1.5; x2 += 0.25) {
      AdaptedPoint p;
      p.x = Vec(2);
      p.x << x1, x2;
      p.ft = Vec::Zero(2);
      p.a = GroupElement::identity(GroupKind::U1);
      worst = std::min(worst, std::abs(projectors(b, p).FP.determinant()));
    }
  CHECK(worst > 0.1);
}

TEST_CASE("group matrices") {
  ModelSpec a = model_A();
  GroupElement th = GroupElement::identity(GroupKind::U1);
  th.theta = 1.3;
  auto g = group_matrices(a, th);
  CHECK(g.u(0, 0) == 1.0);
  CHECK(g.v(0, 0) == 1.0);
  ModelSpec c = model_C();
  auto e = group_matrices(c, GroupElement::identity(GroupKind::SU2));
  CHECK(maxabs(e.u - Mat::Identity(3, 3)) < 1e-15);
  CHECK(maxabs(e.v - Mat::Identity(3, 3)) < 1e-15);
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    GroupElement x = GroupElement::from_coords(GroupKind::SU2, 0.5 * random_point(c, rng).a.coords());
    GroupElement y = GroupElement::from_coords(GroupKind::SU2, 0.5 * random_point(c, rng).a.coords());
    Mat Dx = group_matrices(c, x).Dbar, Dy = group_matrices(c, y).Dbar;
    CHECK(maxabs(Dx * Dx.transpose() - Mat::Identity(3, 3)) < 1e-12);
    // right action: f.(xy) = (f.x).y
    CHECK(maxabs(Dy * Dx - group_matrices(c, x * y).Dbar) < 1e-10);
  }
}

TEST_CASE("isometry and Killing residuals") {
  for (char id : {'A', 'B', 'C'}) {
    ModelSpec s = make_model(id);
    std::mt19937_64 rng(21);
    for (int t = 0; t < 30; ++t) {
      AdaptedPoint p = random_point(s, rng);
      Vec Q = to_total(s, p).Q;
      CHECK(isometry_residual_P(s, Q, random_point(s, rng).a) < 1e-5);
      CHECK(isometry_residual_V(s, random_point(s, rng).a) < 1e-12);
      for (int al = 0; al < s.nG; ++al) CHECK(killing_residual(s, Q, al) < 1e-5);
    }
  }
}

TEST_CASE("structural validation rejects a bad fiber metric") {
  ModelSpec s = model_A();
  s.V_metric(0, 1) = 0.5;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_NOTHROW(model_C().validate());
}
