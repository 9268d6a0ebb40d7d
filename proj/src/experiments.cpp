#include <chrono>
#include <cmath>
#include <random>

#include "bred/cli.hpp"
#include "bred/montecarlo.hpp"
#include "bred/oracle.hpp"

namespace bred {

namespace {

using Vec2 = Eigen::Vector2d;

struct Rows {
  const RunConfig& cfg;
  std::string exp, model;
  long n_paths = 0;
  double dt = 0.0;
  std::vector<ResultRow> rows;

  ResultRow base(const std::string& q, const std::string& ch) const {
    ResultRow r;
    r.experiment = exp;
    r.model = model;
    r.channel = ch;
    r.quantity = q;
    r.n_paths = n_paths;
    r.dt = dt;
    r.seed = cfg.seed;
    return r;
  }
  // |value - target| <= tol
  void target(const std::string& q, double v, double se, double t, double tol, const std::string& ch = "") {
    ResultRow r = base(q, ch);
    r.value = v;
    r.stderr_ = se;
    r.target = t;
    r.tolerance = tol;
    r.has_target = true;
    r.pass = std::isfinite(v) && std::abs(v - t) <= tol;
    rows.push_back(r);
  }
  void bound(const std::string& q, double v, double tol, const std::string& ch = "") { target(q, v, 0.0, 0.0, tol, ch); }
  // value >= lo
  void at_least(const std::string& q, double v, double lo, const std::string& ch = "") {
    ResultRow r = base(q, ch);
    r.value = v;
    r.tolerance = lo;
    r.pass = std::isfinite(v) && v >= lo;
    rows.push_back(r);
  }
  void info(const std::string& q, double v, double se = 0.0, const std::string& ch = "") {
    ResultRow r = base(q, ch);
    r.value = v;
    r.stderr_ = se;
    rows.push_back(r);
  }
};

double mx(const Mat& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

ModelSpec model_from(const RunConfig& cfg, char id) {
  ModelSpec s = make_model(id, cfg.params);
  s.validate();
  return s;
}

long paths_or(const RunConfig& c, long d) { return c.n_paths > 0 ? c.n_paths : d; }
double t_or(const RunConfig& c, double d) { return c.t_b > 0.0 ? c.t_b : d; }

McConfig mc(const RunConfig& c, long n, std::uint64_t stream) {
  McConfig m;
  m.n_paths = n;
  m.seed = c.seed;
  m.stream = stream;
  m.workers = c.workers;
  return m;
}

// ---------------------------------------------------------------- geometry-audit

void geometry_audit(Rows& R, const ModelSpec& s) {
  std::mt19937_64 rng(R.cfg.seed);
  double det_rel = 0, inv = 0, pull = 0, isoP = 0, isoV = 0, kill = 0, proj = 0;
  const int npts = 300;
  for (int k = 0; k < npts; ++k) {
    AdaptedPoint pt = random_point(s, rng);
    GeometryBlocks b = geometry_blocks(s, pt.x, pt.ft);
    Mat u = group_u(pt.a), v = group_v(pt.a);
    Mat g = assemble_metric(s, b, u), gi = inverse_metric(s, b, v);
    double du = u.determinant();
    double ref = b.d * du * du * b.H;
    det_rel = std::max(det_rel, std::abs(g.determinant() - ref) / std::abs(ref));
    inv = std::max(inv, mx(gi * g - Mat::Identity(g.rows(), g.cols())));
    pull = std::max(pull, pullback_residual(s, pt));
    Vec Q = to_total(s, pt).Q;
    GroupElement h = random_point(s, rng).a;
    isoP = std::max(isoP, isometry_residual_P(s, Q, h));
    isoV = std::max(isoV, isometry_residual_V(s, h));
    for (int al = 0; al < s.nG; ++al) kill = std::max(kill, killing_residual(s, Q, al));
    proj = std::max({proj, mx(b.N_P * b.N_P - b.N_P), mx(b.P_perp * b.P_perp - b.P_perp),
                     mx(b.T * b.Qs_x - Mat::Identity(s.nM, s.nM)), mx(b.Qs_x * b.T - b.P_perp),
                     mx(b.N_P * b.P_perp - b.P_perp), mx(b.P_perp * b.N_P - b.N_P)});
  }
  R.n_paths = npts;
  R.bound("det_identity_max_rel", det_rel, R.cfg.tol_residual);
  R.bound("inverse_times_metric_max_abs", inv, R.cfg.tol_residual);
  R.bound("projector_identities_max_abs", proj, R.cfg.tol_residual);
  R.bound("pullback_metric_max_rel", pull, R.cfg.tol_fd);
  R.bound("isometry_P_max_abs", isoP, R.cfg.tol_fd);
  R.bound("isometry_V_max_abs", isoV, R.cfg.tol_fd);
  R.bound("killing_lie_derivative_max_abs", kill, R.cfg.tol_fd);
}

// ---------------------------------------------------------------- sde-convergence

// Probabilists' Gauss-Hermite rule by Golub-Welsch.
void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
  Mat J = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  x.resize(n);
  w.resize(n);
  for (int k = 0; k < n; ++k) {
    x[k] = es.eigenvalues()(k);
    w[k] = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
  }
}

// One Euler-Maruyama step of eta mapped to (x, f~) against one step of zeta: max error of mean and covariance.
double ito_transform_error(const ModelSpec& s, const AdaptedPoint& pt, double dt) {
  const int nP = s.nP, nV = s.nV, n = nP + nV, nR = s.nM + nV;
  const double eps = s.params.eps();
  TotalPoint tp = to_total(s, pt);
  SdeCoefficients co = coefficients_original(s, tp.Q, tp.f);
  SdeCoefficients ca = coefficients_adapted(s, pt);
  Vec y0(nR);
  y0 << pt.x, pt.ft;
  Vec mz = y0 + 0.5 * eps * ca.drift.head(nR) * dt;
  Mat Xa = ca.diffusion.topRows(nR);
  Mat cz = eps * Xa * Xa.transpose() * dt;

  std::vector<double> gx, gw;
  gauss_hermite(5, gx, gw);
  long total = 1;
  for (int k = 0; k < n; ++k) total *= 5;
  Vec m1 = Vec::Zero(nR);
  Mat m2 = Mat::Zero(nR, nR);
  Vec z0(n);
  z0 << tp.Q, tp.f;
  std::vector<int> idx(n);
  for (long c = 0; c < total; ++c) {
    long r = c;
    double w = 1.0;
    Vec xi(n);
    for (int k = 0; k < n; ++k) {
      idx[k] = r % 5;
      r /= 5;
      xi(k) = gx[idx[k]];
      w *= gw[idx[k]];
    }
    Vec z = z0 + 0.5 * eps * co.drift * dt + std::sqrt(eps * dt) * co.diffusion * xi;
    Vec x, ft;
    GroupElement a;
    s.to_adapted(z.head(nP), z.tail(nV), x, ft, a);
    Vec y(nR);
    y << x, ft;
    Vec d = y - y0;
    m1 += w * d;
    m2 += w * d * d.transpose();
  }
  return std::max(mx(m1 - (mz - y0)), mx(m2 - cz - (mz - y0) * (mz - y0).transpose()));
}

struct LawFns {
  std::vector<std::function<double(const RVec&)>> f;
  RVec y0;
};

LawFns law_functions(char id) {
  LawFns L;
  if (id == 'A') {
    L.y0 = RVec(3);
    L.y0 << 0.3, 0.8, -0.4;
    L.f = {[](const RVec& y) { return std::cos(y(0) + y(1)); },
           [](const RVec& y) { return std::exp(-0.5 * (y(1) * y(1) + y(2) * y(2))); },
           [](const RVec& y) { return std::sin(y(0)) * y(2) / (1.0 + y(1) * y(1) + y(2) * y(2)); },
           [](const RVec& y) { return std::cos(2.0 * y(0)) * std::exp(-(std::pow(y(1) - 0.5, 2) + y(2) * y(2))); },
           [](const RVec& y) { return y(1) * y(2) / (1.0 + y(1) * y(1) + y(2) * y(2)); }};
  } else {
    L.y0 = RVec(3);
    L.y0 << 0.5, -0.3, 0.7;
    L.f = {[](const RVec& y) { return std::cos(y(0) + y(1)); },
           [](const RVec& y) { return std::exp(-0.5 * y.squaredNorm()); },
           [](const RVec& y) { return y(0) * y(2) / (1.0 + y.squaredNorm()); },
           [](const RVec& y) { return std::sin(y(1)) * std::exp(-0.25 * y.squaredNorm()); },
           [](const RVec& y) { return y.squaredNorm() / (1.0 + y.squaredNorm()); }};
  }
  return L;
}

void law_equivalence(Rows& R, const ModelSpec& s) {
  auto dyn = make_reduced(s);
  LawFns L = law_functions(s.id);
  const long N = paths_or(R.cfg, 10000);
  TimeGrid g{0.0, t_or(R.cfg, 0.25), R.cfg.dt};
  const int n = g.steps();
  const int nf = static_cast<int>(L.f.size());
  std::vector<std::vector<double>> va(nf, std::vector<double>(N)), vf = va;
  std::vector<char> oka(N, 1), okf(N, 1);
  for (int side = 0; side < 2; ++side) {
    ReducedStepper st(*dyn, side == 0 ? ProcessKind::Adapted : ProcessKind::Filtered);
    auto& vals = side == 0 ? va : vf;
    auto& ok = side == 0 ? oka : okf;
    parallel_for(N, R.cfg.workers, [&](long i) {
      PathRng rng(R.cfg.seed, 10 + side, i);
      RVec y = L.y0, dW(st.channels());
      try {
        for (int k = 0; k < n; ++k) {
          rng.increments(dW, st.base_channels(), g.dt);
          st.step(y, dW, g.dt);
        }
        for (int j = 0; j < nf; ++j) vals[j][i] = L.f[j](y);
      } catch (const ModelError&) {
        ok[i] = 0;
      }
    });
  }
  R.n_paths = N;
  R.dt = g.dt;
  for (int j = 0; j < nf; ++j) {
    Estimate a = make_estimate(va[j], oka), f = make_estimate(vf[j], okf);
    double sig = std::hypot(a.stderr_, f.stderr_);
    R.target("law_phi" + std::to_string(j + 1) + "_filtered_minus_adapted", f.value - a.value, sig, 0.0,
             R.cfg.tol_sigma * sig);
  }
}

void sde_convergence(Rows& R, const ModelSpec& s) {
  std::mt19937_64 rng(R.cfg.seed + 1);
  std::array<double, 6> res{};
  double full = 0, adapted = 0;
  const int npts = 300;
  for (int k = 0; k < npts; ++k) {
    AdaptedPoint pt = random_point(s, rng);
    auto r = filtered_residuals(s, pt);
    for (int e = 0; e < 6; ++e) res[e] = std::max(res[e], r[e]);
    GeometryBlocks b = geometry_blocks(s, pt.x, pt.ft);
    Mat gi = inverse_metric(s, b, group_v(pt.a));
    FilteredDiffusion F = solve_filtered_diffusion(s, pt);
    full = std::max(full, mx(F.full * F.full.transpose() - gi));
    SdeCoefficients ca = coefficients_adapted(s, pt);
    adapted = std::max(adapted, mx(ca.diffusion * ca.diffusion.transpose() - gi));
  }
  R.n_paths = npts;
  for (int e = 0; e < 6; ++e) R.bound("filtered_equation_" + std::to_string(e + 1) + "_max_abs", res[e], R.cfg.tol_residual);
  R.bound("filtered_XXt_minus_inverse_metric", full, R.cfg.tol_residual);
  R.bound("adapted_XXt_minus_inverse_metric", adapted, R.cfg.tol_residual);

  // coordinate-change consistency of one step
  AdaptedPoint pt;
  if (s.id == 'B') {
    pt.x = Vec(2);
    pt.x << 0.4, -0.3;
    pt.ft = Vec(2);
    pt.ft << 0.7, 0.2;
    pt.a = GroupElement::identity(GroupKind::U1);
    pt.a.theta = 0.5;
  } else if (s.id == 'A') {
    pt.x = Vec::Constant(1, 0.3);
    pt.ft = Vec(2);
    pt.ft << 0.7, 0.2;
    pt.a = GroupElement::identity(GroupKind::U1);
    pt.a.theta = 0.5;
  } else {
    pt.x = Vec(0);
    pt.ft = Vec(3);
    pt.ft << 0.7, 0.2, -0.4;
    pt.a = GroupElement::from_coords(GroupKind::SU2, Vec3(0.3, -0.2, 0.4));
  }
  const double dts[3] = {1e-2, 5e-3, 2.5e-3};
  double e[3];
  for (int k = 0; k < 3; ++k) {
    e[k] = ito_transform_error(s, pt, dts[k]);
    R.info("ito_transform_error_dt" + std::to_string(k + 1), e[k]);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < 3; ++k) {
    double lx = std::log(dts[k]), ly = std::log(e[k]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
  R.at_least("ito_transform_weak_error_slope", slope, 1.9);

  if (s.id == 'A' || s.id == 'C') law_equivalence(R, s);
}

// ---------------------------------------------------------------- filtering-audit

void channel_properties(Rows& R, const ModelSpec& s) {
  std::mt19937_64 rng(R.cfg.seed + 2);
  std::vector<int> labels;
  if (s.group == GroupKind::U1)
    for (int n = -8; n <= 8; ++n) labels.push_back(n);
  else
    labels = {0, 1, 2};
  double hom = 0, uni = 0, gen = 0;
  for (int lab : labels) {
    RepChannel ch = channel(s, lab);
    for (int k = 0; k < 100; ++k) {
      GroupElement a = random_point(s, rng).a, b = random_point(s, rng).a;
      hom = std::max(hom, (ch.D(a) * ch.D(b) - ch.D(a * b)).cwiseAbs().maxCoeff());
      CMat D = ch.D(a);
      uni = std::max(uni, (D * D.adjoint() - CMat::Identity(ch.dim, ch.dim)).cwiseAbs().maxCoeff());
    }
    const double h = 1e-6;
    for (int mu = 0; mu < s.nG; ++mu) {
      Vec e = Vec::Zero(s.nG);
      e(mu) = h;
      CMat fd = (ch.D(GroupElement::from_coords(s.group, e)) - ch.D(GroupElement::from_coords(s.group, -e))) / (2 * h);
      gen = std::max(gen, (fd - ch.J[mu]).cwiseAbs().maxCoeff());
    }
  }
  R.bound("rep_homomorphism_max_abs", hom, R.cfg.tol_residual);
  R.bound("rep_unitarity_max_abs", uni, R.cfg.tol_residual);
  R.bound("rep_generator_fd_max_abs", gen, 1e-6);

  if (s.group == GroupKind::U1) {
    HaarQuadrature q = haar_u1(256);
    double orth = 0;
    for (int n = -8; n <= 8; ++n)
      for (int m = -8; m <= 8; ++m) {
        cplx v = group_average(q, [&](const GroupElement& g) { return std::exp(cplx(0, (n - m) * g.theta)); });
        orth = std::max(orth, std::abs(v - (n == m ? 1.0 : 0.0)));
      }
    R.bound("peter_weyl_orthogonality_u1", orth, 1e-12);
  } else {
    HaarQuadrature q = haar_su2(16);
    double orth = 0;
    for (int l1 = 0; l1 <= 2; ++l1)
      for (int l2 = 0; l2 <= 2; ++l2) {
        RepChannel c1 = channel(s, l1), c2 = channel(s, l2);
        for (int i = 0; i < c1.dim; ++i)
          for (int j = 0; j < c1.dim; ++j)
            for (int k = 0; k < c2.dim; ++k)
              for (int l = 0; l < c2.dim; ++l) {
                cplx v = group_average(q, [&](const GroupElement& g) { return c1.D(g)(i, j) * std::conj(c2.D(g)(k, l)); });
                double ref = (l1 == l2 && i == k && j == l) ? 1.0 / c1.dim : 0.0;
                orth = std::max(orth, std::abs(v - ref));
              }
      }
    R.bound("peter_weyl_orthogonality_su2", orth, R.cfg.tol_residual);
  }
}

// Model A, U(1): ordered product against the scalar closed form on the same increments.
void abelian_collapse(Rows& R, const RunConfig& cfg) {
  ModelSpec s = model_from(cfg, 'A');
  auto dyn = make_reduced(s);
  const double R2 = s.params.R2, q = s.params.q, eps = s.params.eps();
  TimeGrid g{0.0, 0.5, cfg.dt};
  RVec y0(3);
  y0 << 0.2, 0.9, -0.5;
  double worst = 0, worst_mod = 0;
  for (int n : {1, 3}) {
    RepChannel ch = channel(s, n);
    for (int p = 0; p < 50; ++p) {
      PathSample ps = simulate(*dyn, ProcessKind::Filtered, y0, g, cfg.seed, 30, p);
      cplx M = multiplicative_integral(*dyn, ps, ch).value(0, 0);
      double idu = 0, iw = 0;
      auto dd = [&](const RVec& y) { return R2 * R2 + q * q * (y(1) * y(1) + y(2) * y(2)); };
      for (std::size_t k = 0; k < ps.increments.size(); ++k) {
        const RVec &a = ps.states[k], &b = ps.states[k + 1];
        idu += 0.5 * (1.0 / dd(a) + 1.0 / dd(b)) * g.dt;
        double wa1 = -q * a(2) / (R2 * std::sqrt(dd(a))), wa2 = q * a(1) / (R2 * std::sqrt(dd(a)));
        double wb1 = -q * b(2) / (R2 * std::sqrt(dd(b))), wb2 = q * b(1) / (R2 * std::sqrt(dd(b)));
        iw += 0.5 * ((wa1 + wb1) * ps.increments[k](1) + (wa2 + wb2) * ps.increments[k](2));
      }
      cplx closed = std::exp(cplx(-0.5 * eps * n * n * idu, -n * std::sqrt(eps) * iw));
      worst = std::max(worst, std::abs(M - closed) / std::abs(closed));
      double mod = std::exp(-0.5 * eps * n * n * idu);
      worst_mod = std::max(worst_mod, std::abs(std::abs(M) - mod) / mod);
    }
  }
  R.bound("abelian_collapse_max_rel", worst, 1e-3, "n=1,3");
  R.bound("abelian_modulus_max_rel", worst_mod, 1e-3, "n=1,3");
}

// Model C: M[t_a, t_b] = M[t_m, t_b] M[t_a, t_m] on shared increments.
void composition(Rows& R, const RunConfig& cfg) {
  ModelSpec s = model_from(cfg, 'C');
  auto dyn = make_reduced(s);
  TimeGrid g{0.0, 0.2, cfg.dt};
  RVec y0(3);
  y0 << 0.6, -0.2, 0.4;
  for (int lab : {1, 2}) {
    RepChannel ch = channel(s, lab);
    double worst = 0, nonab = 0;
    for (int p = 0; p < 20; ++p) {
      PathSample ps = simulate(*dyn, ProcessKind::Filtered, y0, g, cfg.seed, 31, p);
      int n = static_cast<int>(ps.increments.size()), m = n / 2;
      CMat full = multiplicative_integral(*dyn, ps, ch).value;
      CMat a = multiplicative_integral(*dyn, ps, ch, 0, m).value, b = multiplicative_integral(*dyn, ps, ch, m, n).value;
      worst = std::max(worst, (full - b * a).cwiseAbs().maxCoeff());
      nonab = std::max(nonab, (a * b - b * a).cwiseAbs().maxCoeff());
    }
    R.bound("composition_max_abs", worst, 1e-12, ch.name());
    R.info("half_path_commutator_max_abs", nonab, 0.0, ch.name());
  }
}

void gamma_checks(Rows& R, const RunConfig& cfg) {
  ModelParams p0 = cfg.params;
  p0.q = 0.0;
  ModelSpec s0 = make_model('A', p0);
  GenericReduced g0(s0);
  RVec y(3);
  y << 0.4, 0.7, -1.1;
  ChannelCoeffs c = g0.channel_coeffs(y);
  R.target("gamma2_q0", c.Gamma2(0, 0), 0.0, 0.5 * p0.eps() / (p0.R2 * p0.R2), 1e-10);
  R.bound("gamma1_q0", std::abs(c.Gamma1(0)), 1e-8);
  double dev = 0;
  std::mt19937_64 rng(cfg.seed + 3);
  for (char id : {'A', 'C'}) {
    ModelSpec s = model_from(cfg, id);
    GenericReduced gen(s);
    auto an = make_reduced(s);
    for (int k = 0; k < 20; ++k) {
      RVec z = reduced_coords(random_point(s, rng));
      ChannelCoeffs a = an->channel_coeffs(z), b = gen.channel_coeffs(z);
      dev = std::max({dev, (a.Gamma1 - b.Gamma1).cwiseAbs().maxCoeff(), (a.Gamma2 - b.Gamma2).cwiseAbs().maxCoeff(),
                      (a.W - b.W).cwiseAbs().maxCoeff()});
    }
  }
  R.bound("channel_coefficients_analytic_vs_generic", dev, 1e-6);
}

void filtering_audit(Rows& R, const ModelSpec& s) {
  channel_properties(R, s);
  gamma_checks(R, R.cfg);
  abelian_collapse(R, R.cfg);
  composition(R, R.cfg);
}

// ---------------------------------------------------------------- girsanov-audit

void girsanov_audit(Rows& R, const ModelSpec& s) {
  auto dyn = make_reduced(s);
  const long N = paths_or(R.cfg, 100000);
  TimeGrid g{0.0, t_or(R.cfg, 0.5), R.cfg.dt};
  std::vector<double> cps = {0.1, 0.25, g.t_b};
  if (g.t_b <= 0.25) cps = {g.t_b};
  std::vector<int> ks;
  for (double t : cps) ks.push_back(static_cast<int>(std::llround(t / g.dt)));
  const int n = g.steps();
  RVec y0 = reduced_coords(s.id == 'C' ? AdaptedPoint{Vec(0), Vec3(0.5, -0.3, 0.7), GroupElement::identity(s.group), 0}
                                       : AdaptedPoint{Vec::Constant(s.nM, 0.0), Vec2(1.0, 0.0), GroupElement::identity(s.group), 0});
  ReducedStepper st(*dyn, ProcessKind::Reduced);
  std::vector<std::vector<double>> w(ks.size(), std::vector<double>(N));
  std::vector<double> relpath(N);
  std::vector<char> ok(N, 1);
  parallel_for(N, R.cfg.workers, [&](long i) {
    PathRng rng(R.cfg.seed, 40, i);
    RVec y = y0, yp, dW(st.channels());
    GirsanovAccumulator acc(*dyn, y);
    try {
      for (int k = 1; k <= n; ++k) {
        rng.increments(dW, st.base_channels(), g.dt);
        yp = y;
        st.step(y, dW, g.dt);
        acc.step(yp, y, dW, g.dt);
        for (std::size_t j = 0; j < ks.size(); ++j)
          if (ks[j] == k) w[j][i] = std::exp(acc.log_weight());
      }
      double w1 = std::exp(acc.log_weight()), w2 = std::exp(acc.log_jacobian(y));
      relpath[i] = std::abs(w1 - w2) / w2;
    } catch (const ModelError&) {
      ok[i] = 0;
    }
  });
  R.n_paths = N;
  R.dt = g.dt;
  for (std::size_t j = 0; j < ks.size(); ++j) {
    Estimate e = make_estimate(w[j], ok);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", cps[j]);
    R.target(std::string("martingale_mean_weight_t") + buf, e.value, e.stderr_, 1.0, R.cfg.tol_sigma * e.stderr_);
  }
  Estimate pr = make_estimate(relpath, ok);
  R.bound("pathwise_identity_mean_rel_dev", pr.value, 0.02);

  ModelParams p0 = s.params;
  p0.q = 0.0;
  if (s.id == 'A') {
    ModelSpec s0 = make_model('A', p0);
    auto d0 = make_reduced(s0);
    double worst = 0;
    for (int p = 0; p < 50; ++p) {
      PathSample ps = simulate(*d0, ProcessKind::Reduced, y0, TimeGrid{0.0, 0.1, g.dt}, R.cfg.seed, 41, p);
      worst = std::max(worst, std::abs(girsanov_log_weight(*d0, ps).path_log_weight));
    }
    R.bound("log_weight_q0_max_abs", worst, 1e-14);
  }
}

// ---------------------------------------------------------------- reduction-identity

void identity_rows(Rows& R, const std::vector<IdentityReport>& rep, const std::string& tag) {
  for (const auto& r : rep) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_t%.2f", r.t);
    R.info(tag + "lhs" + buf, r.lhs.value, r.lhs.stderr_);
    R.info(tag + "rhs" + buf, r.rhs.value, r.rhs.stderr_);
    R.target(tag + "diff" + buf, r.diff, r.sigma, 0.0, R.cfg.tol_sigma * r.sigma);
    R.bound(tag + "rel_diff" + buf, r.rel, R.cfg.tol_rel);
  }
}

void reduction_identity(Rows& R, const ModelSpec& s) {
  auto dyn = make_reduced(s);
  RVec y0;
  ReducedFn phi;
  std::vector<double> cps;
  long N;
  if (s.id == 'A') {
    y0 = RVec(3);
    y0 << 0.0, 1.0, 0.0;
    phi = [](const RVec& y) { return std::cos(y(0)) * std::exp(-(y(1) * y(1) + y(2) * y(2))); };
    cps = {0.1, 0.25, 0.5};
    N = paths_or(R.cfg, 100000);
  } else if (s.id == 'C') {
    y0 = RVec(3);
    y0 << 0.5, 0.2, -0.3;
    phi = [](const RVec& y) { return std::exp(-0.5 * y.squaredNorm()) * (1.0 + 0.5 * y(0)); };
    cps = {0.25};
    N = paths_or(R.cfg, 200000);
  } else {
    throw ConfigError("reduction-identity runs on models A and C");
  }
  if (R.cfg.t_b > 0.0) cps = {R.cfg.t_b};
  TimeGrid g{0.0, cps.back(), R.cfg.dt};
  R.n_paths = N;
  R.dt = g.dt;
  identity_rows(R, reduction_identity_experiment(*dyn, phi, y0, g, mc(R.cfg, N, 50), cps, R.cfg.tol_rel), "");
  if (s.id == 'A') {
    ModelParams p0 = s.params;
    p0.q = 0.0;
    ModelSpec s0 = make_model('A', p0);
    auto d0 = make_reduced(s0);
    long n0 = std::max(1000L, N / 10);
    auto rep = reduction_identity_experiment(*d0, phi, y0, TimeGrid{0.0, 0.25, R.cfg.dt}, mc(R.cfg, n0, 60), {0.25},
                                             R.cfg.tol_rel);
    R.n_paths = n0;
    identity_rows(R, rep, "q0_");
    R.n_paths = N;
  }
}

// ---------------------------------------------------------------- channel-consistency

void channel_consistency(Rows& R, const ModelSpec& s) {
  if (s.id != 'A') throw ConfigError("channel-consistency runs on model A");
  auto dyn = make_reduced(s);
  const double q = s.params.q;
  std::vector<int> labels = R.cfg.channels;
  if (labels.empty())
    for (int n = -4; n <= 4; ++n) labels.push_back(n);
  // phi0 on the total space (x, alpha, f)
  auto phi0 = [](double x, double al, double f1, double f2) {
    double e = std::exp(-0.5 * (f1 * f1 + f2 * f2));
    return std::cos(x) * e * (1.0 + 0.6 * std::cos(al) + 0.4 * std::sin(2.0 * al)) + 0.5 * f1 * std::cos(al) * e +
           0.3 * std::cos(3.0 * al - x) * e;
  };
  auto phit = [&](const RVec& y, double a) {
    double c = std::cos(q * a), sn = std::sin(q * a);
    return phi0(y(0), a, c * y(1) - sn * y(2), sn * y(1) + c * y(2));
  };
  HaarQuadrature quad = haar_u1(256);
  std::vector<RepChannel> chs;
  std::vector<CoeffFn> cf;
  for (int n : labels) {
    RepChannel ch = channel(s, n);
    chs.push_back(ch);
    cf.push_back([&, ch](const RVec& y) {
      return peter_weyl_coefficients([&](const GroupElement& g) { return phit(y, g.theta); }, ch, quad);
    });
  }
  const long N = paths_or(R.cfg, 100000);
  TimeGrid g{0.0, t_or(R.cfg, 0.5), R.cfg.dt};
  RVec y0(3);
  y0 << 0.4, 0.6, -0.3;
  GroupElement th0 = GroupElement::identity(GroupKind::U1);
  th0.theta = 0.7;
  ChannelSum cs = semigroup_channel(*dyn, cf, chs, y0, th0, g, mc(R.cfg, N, 70));
  AdaptedPoint start = adapted_point(s, y0, th0);
  TotalFn tf = [&](const RVec& y, const GroupElement& a) { return phit(y, a.theta); };
  Estimate tot = semigroup_total(s, tf, start, g, mc(R.cfg, N, 71))[0];
  R.n_paths = N;
  R.dt = g.dt;
  for (const auto& ce : cs.channels) R.info("channel_value_re", ce.value.real(), ce.stderr_re, ce.ch.name());
  R.info("channel_sum", cs.total.value, cs.total.stderr_);
  R.info("total_semigroup", tot.value, tot.stderr_);
  double sig = std::hypot(cs.total.stderr_, tot.stderr_);
  R.target("channel_sum_minus_total", cs.total.value - tot.value, sig, 0.0, R.cfg.tol_sigma * sig);
  abelian_collapse(R, R.cfg);
  composition(R, R.cfg);
}

// ---------------------------------------------------------------- pde-cross-check

void pde_cross_check(Rows& R, const ModelSpec& sIn) {
  if (sIn.id != 'A' && sIn.id != 'B') throw ConfigError("pde-cross-check runs on model A (and B for the S3 decay)");
  ModelSpec s = model_from(R.cfg, 'A');
  const double eps = s.params.eps(), t = t_or(R.cfg, 0.5);
  const long N = paths_or(R.cfg, 100000);
  R.dt = R.cfg.dt;

  // heat-kernel references
  {
    double norm = 0;
    const int m = 4000;
    for (int k = 0; k < m; ++k) norm += heat_kernel_circle(s.params.R1, t, 2 * M_PI * k / m, eps) * 2 * M_PI / m;
    R.bound("circle_kernel_normalisation", std::abs(norm - 1.0), 1e-12);
    double n3 = 0;
    const int m3 = 20000;
    for (int k = 0; k < m3; ++k) {
      double psi = M_PI * (k + 0.5) / m3;
      n3 += heat_kernel_s3(t, psi, eps) * 4 * M_PI * std::sin(psi) * std::sin(psi) * M_PI / m3;
    }
    R.bound("s3_kernel_normalisation", std::abs(n3 - 1.0), 1e-8);
    double a = heat_kernel_s3(1e-3, 0.2, eps), b = heat_kernel_s3_principal(1e-3, 0.2, eps);
    R.bound("s3_kernel_short_time_rel", std::abs(a - b) / b, 1e-6);
  }

  // grid convergence of the reduced backward solver: hf halved twice, dt ~ hf^2, max norm on the coarse nodes
  auto phi1 = [](double x, double f1, double f2) { return std::cos(x) * std::exp(-(f1 * f1 + f2 * f2)); };
  std::vector<GridSolution> conv;
  {
    GridSpec gs;
    gs.nx = 16;
    gs.nf = 96;
    gs.workers = R.cfg.workers;
    double bound = pde_backward_solve(s, phi1, 0.0, gs).dt_max;
    long nc = static_cast<long>(std::ceil(t / (16.0 * 0.9 * bound)));
    for (int k = 0; k < 3; ++k) {
      gs.nf = 24 << k;
      gs.dt = t / (nc << (2 * k));
      conv.push_back(pde_backward_solve(s, phi1, t, gs));
      R.info("pde_grid_value_nf" + std::to_string(gs.nf), conv.back().value_at(0.0, 1.0, 0.0));
    }
  }
  double d1 = 0, d2 = 0;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j <= 24; ++j)
      for (int k = 0; k <= 24; ++k) {
        double a = conv[0].at_node(i, j, k), b = conv[1].at_node(i, 2 * j, 2 * k), c = conv[2].at_node(i, 4 * j, 4 * k);
        d1 = std::max(d1, std::abs(a - b));
        d2 = std::max(d2, std::abs(b - c));
      }
  double order = std::log2(d1 / d2);
  R.info("pde_grid_max_change_coarse", d1);
  R.info("pde_grid_max_change_fine", d2);
  R.target("pde_grid_convergence_order", order, 0.0, 2.0, 0.2);

  {
    ModelParams p0 = s.params;
    p0.q = 0.0;
    ModelSpec s0 = make_model('A', p0);
    GridSpec gs;
    gs.nx = 64;
    gs.nf = 48;
    gs.workers = R.cfg.workers;
    auto sol = pde_backward_solve(s0, [](double x, double, double) { return std::cos(x); }, t, gs);
    double err = 0;
    for (int i = 0; i < gs.nx; ++i) {
      double x = i * sol.hx;
      err = std::max(err, std::abs(sol.value_at(x, 0.5, -0.5) - std::exp(-0.5 * eps * t / (p0.R1 * p0.R1)) * std::cos(x)));
    }
    R.bound("pde_q0_cos_spectral_max_abs", err, 1e-3);
    auto one = pde_backward_solve(s0, [](double, double, double) { return 1.0; }, t, gs);
    R.bound("pde_constant_preserved", std::abs(one.value_at(0.0, 0.0, 0.0) - 1.0), 1e-6);
  }

  // Monte Carlo vs PDE for two test functions
  struct Case {
    const char* name;
    std::function<double(double, double, double)> f;
    double x, f1, f2, v0;
  };
  std::vector<Case> cases = {
      {"phi1", phi1, 0.0, 1.0, 0.0, 0.0},
      {"phi2",
       [](double x, double f1, double f2) {
         return (1.0 + 0.5 * std::sin(x)) * std::exp(-0.5 * ((f1 - 0.5) * (f1 - 0.5) + f2 * f2));
       },
       M_PI / 4, 0.5, 0.5, 0.5}};
  for (const Case& c : cases) {
    ModelParams pc = s.params;
    pc.v0 = c.v0;
    ModelSpec sc = make_model('A', pc);
    auto dyn = make_reduced(sc);
    GridSpec gs;
    gs.nx = 64;
    gs.nf = 96;
    gs.workers = R.cfg.workers;
    double pv = pde_backward_solve(sc, c.f, t, gs).value_at(c.x, c.f1, c.f2);
    RVec y0(3);
    y0 << c.x, c.f1, c.f2;
    Estimate e = semigroup_reduced_zero(*dyn, [&](const RVec& y) { return c.f(y(0), y(1), y(2)); }, y0,
                                        TimeGrid{0.0, t, R.cfg.dt}, mc(R.cfg, N, 80))[0];
    R.n_paths = N;
    R.info(std::string("pde_") + c.name, pv);
    R.info(std::string("mc_") + c.name, e.value, e.stderr_);
    R.target(std::string("mc_minus_pde_") + c.name, e.value - pv, e.stderr_, 0.0,
             std::max(R.cfg.tol_sigma * e.stderr_, 0.02 * std::abs(pv)));
  }

  // spectral decay: circle (model A total space) and S3 (model B total space)
  {
    AdaptedPoint st{Vec::Constant(1, 0.4), Vec2(0.3, -0.2), GroupElement::identity(GroupKind::U1), 0};
    Estimate e = semigroup_total(s, [](const RVec& y, const GroupElement&) { return std::cos(y(0)); }, st,
                                 TimeGrid{0.0, t, R.cfg.dt}, mc(R.cfg, N, 90))[0];
    double target = std::exp(-0.5 * eps * t / (s.params.R1 * s.params.R1)) * std::cos(0.4);
    R.n_paths = N;
    R.target("circle_eigenfunction_decay", e.value, e.stderr_, target, R.cfg.tol_sigma * e.stderr_);
    R.info("circle_decay_rate", -std::log(e.value / std::cos(0.4)) / t, e.stderr_ / (e.value * t));
  }
  {
    ModelSpec sb = model_from(R.cfg, 'B');
    AdaptedPoint st{Vec2(0.3, -0.2), Vec2(0.1, 0.4), GroupElement::identity(GroupKind::U1), 0};
    st.a.theta = 0.4;
    auto p0 = [](const RVec& y, const GroupElement& a) { return std::cos(a.theta) / std::sqrt(1.0 + y(0) * y(0) + y(1) * y(1)); };
    double start = p0(reduced_coords(st), st.a);
    Estimate e = semigroup_total(sb, p0, st, TimeGrid{0.0, t, R.cfg.dt}, mc(R.cfg, N, 91))[0];
    double target = std::exp(-1.5 * sb.params.eps() * t) * start;
    R.target("s3_eigenfunction_decay", e.value, e.stderr_, target, R.cfg.tol_sigma * e.stderr_, "B");
    R.info("s3_decay_rate", -std::log(e.value / start) / t, e.stderr_ / (e.value * t), "B");
  }
}

}  // namespace

const std::vector<ExperimentInfo>& experiments() {
  static const std::vector<ExperimentInfo> e = {
      {"geometry-audit", "metric determinant and inverse identities, projectors, isometry and Killing residuals"},
      {"sde-convergence", "six filtered-coefficient equations, one-step coordinate-change consistency, law equivalence"},
      {"filtering-audit", "representation channels, Haar orthogonality, channel coefficients, ordered products"},
      {"girsanov-audit", "martingale property of the reduction weight and its pathwise closed form"},
      {"reduction-identity", "reduced semigroup with reduction Jacobian against the group-averaged total semigroup"},
      {"channel-consistency", "sum of U(1) channel semigroups against the total-space semigroup"},
      {"pde-cross-check", "Monte Carlo against the backward PDE solver, grid order, heat-kernel decay rates"}};
  return e;
}

std::vector<ResultRow> run_experiment(const RunConfig& cfg) {
  cfg.validate();
  Rows R{cfg, cfg.experiment, std::string(1, cfg.model), 0, 0.0, {}};
  R.dt = cfg.dt;
  ModelSpec s = model_from(cfg, cfg.model);
  auto t0 = std::chrono::steady_clock::now();
  if (cfg.experiment == "geometry-audit")
    geometry_audit(R, s);
  else if (cfg.experiment == "sde-convergence")
    sde_convergence(R, s);
  else if (cfg.experiment == "filtering-audit")
    filtering_audit(R, s);
  else if (cfg.experiment == "girsanov-audit")
    girsanov_audit(R, s);
  else if (cfg.experiment == "reduction-identity")
    reduction_identity(R, s);
  else if (cfg.experiment == "channel-consistency")
    channel_consistency(R, s);
  else if (cfg.experiment == "pde-cross-check")
    pde_cross_check(R, s);
  else
    throw ConfigError("unknown experiment: " + cfg.experiment);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (auto& r : R.rows) r.wall_time = wall;
  return R.rows;
}

}  // namespace bred
