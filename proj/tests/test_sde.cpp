#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <random>

#include "bred/cli.hpp"
#include "bred/sde.hpp"
#include "doctest.h"

using namespace bred;

namespace {

double maxabs(const Mat& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

AdaptedPoint pointA(double x, double f1, double f2) {
  AdaptedPoint p;
  p.x = Vec::Constant(1, x);
  p.ft = Vec(2);
  p.ft << f1, f2;
  p.a = GroupElement::identity(GroupKind::U1);
  return p;
}

double ks_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double D = 0.0;
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    D = std::max(D, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  double ne = double(a.size()) * b.size() / (a.size() + b.size());
  double l = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * D, p = 0.0;
  for (int k = 1; k < 100; ++k) p += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * l * l);
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

TEST_CASE("flat torus: zero drift, constant diffusion") {
  ModelParams p;
  p.R1 = 1.3;
  p.R2 = 0.7;
  ModelSpec s = model_A(p);
  Vec Q(2), f(2);
  Q << 0.4, 2.0;
  f << 0.3, -1.2;
  SdeCoefficients c = coefficients_original(s, Q, f);
  CHECK(maxabs(c.drift) < 1e-8);
  Vec diag(4);
  diag << 1 / (1.3 * 1.3), 1 / (0.7 * 0.7), 1.0, 1.0;
  CHECK(maxabs(c.diffusion * c.diffusion.transpose() - Mat(diag.asDiagonal())) < 1e-12);
}

TEST_CASE("round S3 in stereographic coordinates: Laplace-Beltrami drift") {
  ModelSpec s = model_B();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int t = 0; t < 20; ++t) {
    Vec Q(3), f(2);
    Q << u(rng), u(rng), u(rng);
    f << u(rng), u(rng);
    SdeCoefficients c = coefficients_original(s, Q, f);
    // (1/sqrt G) d_l (sqrt G G^{kl}) for G = 4/(1+|Q|^2)^2 I_3
    Vec b = -0.5 * (1.0 + Q.squaredNorm()) * Q;
    CHECK(maxabs(c.drift.head(3) - b) < 1e-8);
    CHECK(maxabs(c.drift.tail(2)) < 1e-12);
  }
}

TEST_CASE("original diffusion squares to the inverse metric") {
  for (char id : {'B', 'C'}) {
    ModelSpec s = make_model(id);
    std::mt19937_64 rng(4);
    for (int t = 0; t < 50; ++t) {
      AdaptedPoint pt = random_point(s, rng);
      pt.a = GroupElement::from_coords(s.group, 0.3 * pt.a.coords());
      TotalPoint tp = to_total(s, pt);
      SdeCoefficients c = coefficients_original(s, tp.Q, tp.f);
      CHECK(maxabs(c.diffusion * c.diffusion.transpose() - total_metric(s, tp.Q).inverse()) < 1e-12);
    }
  }
}

TEST_CASE("decoupled model A has zero base drift") {
  ModelParams p;
  p.q = 0.0;
  ModelSpec s = model_A(p);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    SdeCoefficients c = coefficients_adapted(s, random_point(s, rng));
    CHECK(std::abs(c.drift(0)) < 1e-8);
    CHECK(maxabs(c.drift.segment(1, 2)) < 1e-8);
  }
}

TEST_CASE("filtered diffusion at the fiber origin") {
  ModelParams p;
  p.R2 = 2.0;
  ModelSpec s = model_A(p);
  FilteredDiffusion F = solve_filtered_diffusion(s, pointA(0.5, 0.0, 0.0));
  CHECK(maxabs(F.Xa_m) < 1e-14);
  CHECK(maxabs(F.Xa_b - Mat::Identity(2, 2)) < 1e-14);
  CHECK(maxabs(F.Z) < 1e-14);
  CHECK(F.Xal_beta(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("six filtered equations and the full block product") {
  for (char id : {'A', 'B', 'C'}) {
    ModelSpec s = make_model(id);
    std::mt19937_64 rng(8);
    for (int t = 0; t < 300; ++t) {
      AdaptedPoint pt = random_point(s, rng);
      auto r = filtered_residuals(s, pt);
      for (double v : r) CHECK(v < 1e-10);
      FilteredDiffusion F = solve_filtered_diffusion(s, pt);
      CHECK(maxabs(F.full * F.full.transpose() - inverse_metric(s, pt)) < 1e-10);
    }
  }
}

TEST_CASE("Euler-Heun fixed point") {
  StratFn f = [](const Vec& y, Vec& a, Mat& B) {
    a = Vec::Zero(y.size());
    B = Mat::Identity(y.size(), y.size()) * (1.0 + y.squaredNorm());
  };
  Vec y(3);
  y << 0.1, -0.4, 2.0;
  Vec y0 = y;
  euler_heun_step(f, y, Vec::Zero(3), 0.01);
  CHECK(maxabs(y - y0) == 0.0);
}

TEST_CASE("path generator: normal increments and replay") {
  PathRng r(42, 0, 0);
  RVec dW(4);
  const int bins = 20;
  std::vector<int> cnt(bins, 0);
  boost::math::normal nd;
  const int n = 25000;
  for (int k = 0; k < n; ++k) {
    r.increments(dW, 2, 0.25);
    for (int c = 0; c < 4; ++c) {
      double p = boost::math::cdf(nd, dW(c) / 0.5);
      cnt[std::min(bins - 1, int(p * bins))]++;
    }
  }
  double chi = 0.0, e = 4.0 * n / bins;
  for (int c : cnt) chi += (c - e) * (c - e) / e;
  CHECK(chi < boost::math::quantile(boost::math::chi_squared(bins - 1), 0.999));

  ModelSpec s = model_C();
  auto dyn = make_reduced(s);
  RVec y0(3);
  y0 << 0.3, 0.1, -0.2;
  TimeGrid g{0.0, 0.05, 1e-3};
  PathSample a = simulate(*dyn, ProcessKind::Filtered, y0, g, 9, 2, 17);
  PathSample b = simulate(*dyn, ProcessKind::Filtered, y0, g, 9, 2, 17);
  PathSample c = simulate(*dyn, ProcessKind::Filtered, y0, g, 9, 2, 18);
  REQUIRE(a.states.size() == 51);
  for (std::size_t k = 0; k < a.states.size(); ++k) CHECK((a.states[k] - b.states[k]).norm() == 0.0);
  CHECK((a.states.back() - c.states.back()).norm() > 0.0);
}

TEST_CASE("decoupled circle marginal matches the wrapped Gaussian") {
  ModelParams p;
  p.q = 0.0;
  ModelSpec s = model_A(p);
  auto dyn = make_reduced(s);
  ReducedStepper st(*dyn, ProcessKind::Filtered);
  const long N = 100000;
  const double x0 = 0.7, t = 1.0, dt = 0.01;
  std::vector<double> c1(N), s1(N), c2(N);
  for (long i = 0; i < N; ++i) {
    PathRng r(5, 0, i);
    RVec y(3), dW(3);
    y << x0, 0.2, 0.1;
    for (int k = 0; k < 100; ++k) {
      r.increments(dW, 1, dt);
      st.step(y, dW, dt);
    }
    c1[i] = std::cos(y(0));
    s1[i] = std::sin(y(0));
    c2[i] = std::cos(2.0 * y(0));
  }
  auto check = [&](const std::vector<double>& v, double target) {
    double m = 0, q = 0;
    for (double z : v) m += z, q += z * z;
    m /= N;
    double se = std::sqrt((q / N - m * m) / N);
    CHECK(std::abs(m - target) < 3.0 * se);
  };
  check(c1, std::exp(-0.5 * t) * std::cos(x0));
  check(s1, std::exp(-0.5 * t) * std::sin(x0));
  check(c2, std::exp(-2.0 * t) * std::cos(2.0 * x0));
}

TEST_CASE("original and adapted processes push forward to the same base law") {
  ModelSpec s = model_B();
  auto dyn = make_reduced(s, false);
  AdaptedPoint st;
  st.x = Vec(2);
  st.x << 0.3, -0.2;
  st.ft = Vec(2);
  st.ft << 0.5, 0.1;
  st.a = GroupElement::identity(GroupKind::U1);
  TotalPoint tp = to_total(s, st);
  RVec z0(5);
  z0 << tp.Q, tp.f;
  RVec y0 = reduced_coords(st);
  TimeGrid g{0.0, 0.1, 5e-3};
  const long N = 10000;
  std::vector<double> xo, xa, yo, ya;
  for (long i = 0; i < N; ++i) {
    PathSample o = simulate(*dyn, ProcessKind::Original, z0, g, 3, 1, i);
    PathSample a = simulate(*dyn, ProcessKind::Adapted, y0, g, 3, 2, i);
    if (o.failed || a.failed) continue;
    Vec x, ft;
    GroupElement ga;
    const RVec& z = o.states.back();
    s.to_adapted(Vec(z.head(3)), Vec(z.tail(2)), x, ft, ga);
    xo.push_back(x(0));
    yo.push_back(x(1));
    xa.push_back(a.states.back()(0));
    ya.push_back(a.states.back()(1));
  }
  CHECK(xo.size() == N);
  CHECK(ks_pvalue(xo, xa) > 0.01);
  CHECK(ks_pvalue(yo, ya) > 0.01);
}

TEST_CASE("coordinate change of one step is consistent to second order") {
  for (char id : {'A', 'B', 'C'}) {
    RunConfig cfg;
    cfg.experiment = "sde-convergence";
    cfg.model = id;
    cfg.n_paths = 2000;
    for (const auto& r : run_experiment(cfg)) {
      CAPTURE(r.quantity);
      CHECK(r.pass);
      if (r.quantity == "ito_transform_weak_error_slope") CHECK(r.value >= 1.9);
    }
  }
}

TEST_CASE("total processes lift and project consistently") {
  for (char id : {'A', 'B', 'C'}) {
    ModelSpec s = make_model(id);
    auto tot = make_total(s);
    std::mt19937_64 rng(12);
    for (int t = 0; t < 20; ++t) {
      AdaptedPoint p = random_point(s, rng);
      RVec y;
      GroupElement a;
      tot->project(tot->lift(p), y, a);
      CHECK((y - reduced_coords(p)).norm() < 1e-12);
      CHECK((a.coords() - p.a.coords()).norm() < 1e-12);
    }
  }
}
