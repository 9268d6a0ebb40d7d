#include <random>

#include "bred/montecarlo.hpp"
#include "doctest.h"

using namespace bred;

namespace {

double cmax(const CMat& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

GroupElement u1(double t) {
  GroupElement g = GroupElement::identity(GroupKind::U1);
  g.theta = t;
  return g;
}

RVec vec3(double a, double b, double c) {
  RVec y(3);
  y << a, b, c;
  return y;
}

struct Moments {
  cplx m = 0.0;
  double vr = 0.0, vi = 0.0;
  long n = 0;
  void add(cplx z) {
    m += z;
    vr += z.real() * z.real();
    vi += z.imag() * z.imag();
    ++n;
  }
  cplx mean() const { return m / double(n); }
  double se_re() const { return std::sqrt((vr / n - std::pow(mean().real(), 2)) / n); }
  double se_im() const { return std::sqrt((vi / n - std::pow(mean().imag(), 2)) / n); }
};

}  // namespace

TEST_CASE("U(1) channels") {
  for (int n = -8; n <= 8; ++n) {
    RepChannel ch = channel(GroupKind::U1, n);
    CHECK(ch.dim == 1);
    CHECK(std::abs(ch.D(u1(0.7))(0, 0) - std::exp(cplx(0.0, 0.7 * n))) < 1e-15);
    CHECK(std::abs(ch.J[0](0, 0) - cplx(0.0, n)) == 0.0);
  }
  CHECK_THROWS_AS(channel(GroupKind::U1, 9), ConfigError);
  CHECK_THROWS_AS(channel(GroupKind::SU2, 3), ConfigError);
}

TEST_CASE("SU(2) spin 1/2 is the defining representation") {
  RepChannel ch = channel(GroupKind::SU2, 1);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    Eigen::Vector4d v(nd(rng), nd(rng), nd(rng), nd(rng));
    v.normalize();
    GroupElement g = GroupElement::identity(GroupKind::SU2);
    g.q = Quat(v(0), v(1), v(2), v(3));
    // w I - i (x sigma_x + y sigma_y + z sigma_z)
    CMat U(2, 2);
    U << cplx(v(0), -v(3)), cplx(-v(2), -v(1)), cplx(v(2), -v(1)), cplx(v(0), v(3));
    CHECK(cmax(ch.D(g) - U) < 1e-14);
  }
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Vec e = Vec::Zero(3);
    e(k) = h;
    CMat fd = (ch.D(GroupElement::from_coords(GroupKind::SU2, e)) - ch.D(GroupElement::from_coords(GroupKind::SU2, -e))) / (2 * h);
    CHECK(cmax(fd - ch.J[k]) < 1e-9);
  }
}

TEST_CASE("SU(2) spin 1 homomorphism") {
  RepChannel ch = channel(GroupKind::SU2, 2);
  ModelSpec s = model_C();
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    GroupElement a = random_point(s, rng).a, b = random_point(s, rng).a;
    CHECK(cmax(ch.D(a) * ch.D(b) - ch.D(a * b)) < 1e-10);
  }
}

TEST_CASE("channel coefficients in the decoupled model") {
  ModelParams p;
  p.q = 0.0;
  p.R2 = 1.5;
  p.mu = 0.8;
  p.kappa = 1.5;
  ModelSpec s = model_A(p);
  GenericReduced g(s);
  auto a = make_reduced(s);
  for (RVec y : {vec3(0.1, 0.0, 0.0), vec3(2.0, 1.0, -0.5)}) {
    auto c = gamma_coefficients(g, y);
    CHECK(std::abs(c.Gamma1(0)) < 1e-8);
    CHECK(c.Gamma2(0, 0) == doctest::Approx(0.5 * 0.64 * 1.5 / 2.25).epsilon(1e-12));
    auto ca = gamma_coefficients(*a, y);
    CHECK(ca.Gamma2(0, 0) == doctest::Approx(c.Gamma2(0, 0)).epsilon(1e-12));
  }
  ModelSpec s1 = model_A();
  GenericReduced g1(s1);
  CHECK(std::abs(gamma_coefficients(g1, vec3(0.3, 0.0, 0.0)).Gamma1(0)) < 1e-6);
  CHECK(std::abs(gamma_coefficients(*make_reduced(s1), vec3(0.3, 0.0, 0.0)).Gamma1(0)) < 1e-6);
}

TEST_CASE("trivial channel: zero exponent, unit product") {
  ModelSpec s = model_C();
  auto dyn = make_reduced(s);
  RepChannel ch = channel(s, 0);
  RVec y = vec3(0.3, -0.4, 0.1), dW = vec3(0.05, -0.02, 0.01);
  ChannelCoeffs c = dyn->channel_coeffs(y);
  CHECK(cmax(channel_step_exponent(ch, 1.0, c, c, dW, 1e-3)) == 0.0);
  std::vector<MultiplicativeIntegral> ints;
  for (int i = 0; i < 20; ++i) {
    PathSample ps = simulate(*dyn, ProcessKind::Filtered, y, TimeGrid{0.0, 0.05, 1e-3}, 1, 0, i);
    ints.push_back(multiplicative_integral(*dyn, ps, ch));
    CHECK(std::abs(ints.back().value(0, 0) - 1.0) == 0.0);
  }
  MatrixEstimate e = filtered_expectation(ints, ch, GroupElement::identity(GroupKind::SU2));
  CHECK(std::abs(e.value(0, 0) - 1.0) == 0.0);
  CHECK(std::abs(e.stderr_(0, 0)) == 0.0);
}

TEST_CASE("empty product returns the start representation") {
  ModelSpec s = model_C();
  auto dyn = make_reduced(s);
  RepChannel ch = channel(s, 1);
  GroupElement th = GroupElement::from_coords(GroupKind::SU2, Vec3(0.3, -0.2, 0.5));
  PathSample ps = simulate(*dyn, ProcessKind::Filtered, vec3(0.1, 0.2, 0.3), TimeGrid{0.0, 0.0, 1e-3}, 1, 0, 0);
  std::vector<MultiplicativeIntegral> ints = {multiplicative_integral(*dyn, ps, ch)};
  CHECK(cmax(filtered_expectation(ints, ch, th).value - ch.D(th)) == 0.0);
}

TEST_CASE("abelian channel: product equals the scalar exponential") {
  ModelSpec s = model_A();
  auto dyn = make_reduced(s);
  RepChannel ch = channel(s, 2);
  for (int i = 0; i < 10; ++i) {
    PathSample ps = simulate(*dyn, ProcessKind::Filtered, vec3(0.0, 0.5, 0.5), TimeGrid{0.0, 0.3, 1e-3}, 2, 0, i);
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < ps.increments.size(); ++k) {
      ChannelCoeffs c0 = dyn->channel_coeffs(ps.states[k]), c1 = dyn->channel_coeffs(ps.states[k + 1]);
      CMat A = channel_step_exponent(ch, dyn->eps(), c0, c1, ps.increments[k], 1e-3);
      re += A(0, 0).real();
      im += A(0, 0).imag();
    }
    cplx M = multiplicative_integral(*dyn, ps, ch).value(0, 0);
    CHECK(std::abs(std::abs(M) - std::exp(re)) < 1e-3 * std::exp(re));
    CHECK(std::abs(M - std::exp(cplx(re, im))) < 1e-12);
  }
}

TEST_CASE("ordered products compose on shared increments") {
  ModelSpec s = model_C();
  auto dyn = make_reduced(s);
  for (int lab : {1, 2}) {
    RepChannel ch = channel(s, lab);
    PathSample ps = simulate(*dyn, ProcessKind::Filtered, vec3(0.6, -0.2, 0.4), TimeGrid{0.0, 0.2, 1e-3}, 3, 0, lab);
    CMat full = multiplicative_integral(*dyn, ps, ch).value;
    CMat a = multiplicative_integral(*dyn, ps, ch, 0, 77).value, b = multiplicative_integral(*dyn, ps, ch, 77, 200).value;
    CHECK(cmax(full - b * a) < 1e-12);
    CHECK(cmax(full * full.adjoint() - CMat::Identity(ch.dim, ch.dim)) > 1e-3);
  }
}

TEST_CASE("spin 1/2 filtered expectation against the total process, binned on the fiber") {
  ModelSpec s = model_C();
  auto dyn = make_reduced(s);
  auto tot = make_total(s);
  RepChannel ch = channel(s, 1);
  const RVec y0 = vec3(0.4, -0.2, 0.3);
  const TimeGrid g{0.0, 0.1, 1e-3};
  const long N = 20000;
  const int n = g.steps();
  auto cell = [](const RVec& y) { return y(0) > 0.4 ? 1 : 0; };
  Moments tf[2][2], ff[2][2];
  RVec st = tot->lift(adapted_point(s, y0, GroupElement::identity(GroupKind::SU2)));
  for (long i = 0; i < N; ++i) {
    PathRng r(77, 1, i);
    RVec z = st, dW(tot->channels()), y;
    for (int k = 0; k < n; ++k) {
      r.increments(dW, tot->base_channels(), g.dt);
      tot->step(z, dW, g.dt);
    }
    GroupElement a;
    tot->project(z, y, a);
    CMat D = ch.D(a);
    int c = cell(y);
    tf[c][0].add(D(0, 0));
    tf[c][1].add(D(1, 0));
    tf[1 - c][0].add(0.0);
    tf[1 - c][1].add(0.0);

    PathSample ps = simulate(*dyn, ProcessKind::Filtered, y0, g, 77, 2, i);
    CMat M = multiplicative_integral(*dyn, ps, ch).value;
    int cf = cell(ps.states.back());
    ff[cf][0].add(M(0, 0));
    ff[cf][1].add(M(1, 0));
    ff[1 - cf][0].add(0.0);
    ff[1 - cf][1].add(0.0);
  }
  for (int c = 0; c < 2; ++c)
    for (int e = 0; e < 2; ++e) {
      CAPTURE(c);
      CAPTURE(e);
      cplx d = tf[c][e].mean() - ff[c][e].mean();
      CHECK(std::abs(d.real()) < 3.0 * std::hypot(tf[c][e].se_re(), ff[c][e].se_re()) + 1e-12);
      CHECK(std::abs(d.imag()) < 3.0 * std::hypot(tf[c][e].se_im(), ff[c][e].se_im()) + 1e-12);
    }
}

TEST_CASE("Haar quadratures") {
  HaarQuadrature q1 = haar_u1(256);
  CHECK(std::abs(group_average(q1, [](const GroupElement&) { return cplx(1.0); }) - 1.0) < 1e-14);
  CHECK(std::abs(group_average(q1, [](const GroupElement& g) { return std::exp(cplx(0.0, g.theta)); })) < 1e-14);
  RepChannel tr = channel(GroupKind::U1, 0);
  CMat c = peter_weyl_coefficients([](const GroupElement& g) { return std::cos(g.theta); }, tr, q1);
  CHECK(std::abs(c(0, 0)) < 1e-14);

  HaarQuadrature q2 = haar_su2(16);
  RepChannel h = channel(GroupKind::SU2, 1);
  CHECK(std::abs(group_average(q2, [](const GroupElement&) { return cplx(1.0); }) - 1.0) < 1e-12);
  for (int p = 0; p < 2; ++p)
    for (int r = 0; r < 2; ++r) {
      cplx v = group_average(q2, [&](const GroupElement& g) { return std::conj(h.D(g).trace()) * h.D(g)(p, r); });
      CHECK(std::abs(v - (p == r ? 0.5 : 0.0)) < 1e-10);
    }
}
