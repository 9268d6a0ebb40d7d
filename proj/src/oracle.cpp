#include "bred/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "bred/montecarlo.hpp"

namespace bred {

double heat_kernel_circle(double R, double t, double theta, double eps, int nmax) {
  const double s2 = eps * t / (R * R);
  double p = 0.0;
  for (int k = -nmax; k <= nmax; ++k) {
    double u = theta + 2.0 * M_PI * k;
    p += std::exp(-u * u / (2.0 * s2));
  }
  return p / std::sqrt(2.0 * M_PI * s2);
}

double heat_kernel_s3(double t, double psi, double eps) {
  const double s = 0.5 * eps * t;
  const double sp = std::sin(psi);
  double sum = 0.0;
  for (int n = 1; n < 200000; ++n) {
    double ratio = std::abs(sp) < 1e-12 ? double(n) * (std::cos(psi) > 0 || n % 2 ? 1.0 : -1.0) : std::sin(n * psi) / sp;
    double e = std::exp(-(double(n) * n - 1.0) * s);
    double term = n * ratio * e;
    sum += term;
    if (double(n) * n * e < 1e-18 * std::max(1.0, std::abs(sum)) && n > 2) break;
  }
  return sum / (2.0 * M_PI * M_PI);
}

double heat_kernel_s3_principal(double t, double psi, double eps) {
  const double s = 0.5 * eps * t;
  double r = psi < 1e-12 ? 1.0 : psi / std::sin(psi);
  return std::exp(s) * std::pow(4.0 * M_PI * s, -1.5) * r * std::exp(-psi * psi / (4.0 * s));
}

namespace {

struct PointGeom {
  GeometryBlocks b;
  double sqd, sqdH, sqH;
};

PointGeom point_geom(const ModelSpec& s, const RVec& y) {
  PointGeom g;
  g.b = geometry_blocks(s, Vec(y.head(s.nM)), Vec(y.tail(s.nV)));
  g.sqd = std::sqrt(g.b.d);
  g.sqH = std::sqrt(g.b.H);
  g.sqdH = g.sqd * g.sqH;
  return g;
}

}  // namespace

CMat generator_apply(const ModelSpec& s, const std::function<CMat(const RVec&)>& phi, const RVec& y,
                     const RepChannel& ch, double h) {
  const int nM = s.nM, nV = s.nV, nG = s.nG, n = nM + nV;
  const double eps = s.params.eps();
  const double hg = s.fd_step;
  PointGeom g0 = point_geom(s, y);
  const GeometryBlocks& b = g0.b;
  Mat ginv = b.reduced_inverse;

  // derivatives of sqrt(d), sqrt(H) g, and the divergence terms
  Vec dsqd(n), bt = Vec::Zero(n), divA = Vec::Zero(nG), divK = Vec::Zero(nG);
  for (int k = 0; k < n; ++k) {
    RVec yp = y, ym = y;
    yp(k) += hg;
    ym(k) -= hg;
    PointGeom gp = point_geom(s, yp), gm = point_geom(s, ym);
    dsqd(k) = (gp.sqd - gm.sqd) / (2.0 * hg);
    bt += (gp.sqH * gp.b.reduced_inverse.col(k) - gm.sqH * gm.b.reduced_inverse.col(k)) / (2.0 * hg);
    if (k < nM) {
      Mat Fp = gp.sqdH * gp.b.h_inv * gp.b.A_gamma.transpose(), Fm = gm.sqdH * gm.b.h_inv * gm.b.A_gamma.transpose();
      divA += ((Fp.row(k) - Fm.row(k)) / (2.0 * hg)).transpose();
    } else {
      divK += (gp.sqdH * gp.b.K_V.col(k - nM) - gm.sqdH * gm.b.K_V.col(k - nM)) / (2.0 * hg);
    }
  }
  bt /= g0.sqH;
  divA /= g0.sqdH;
  divK /= g0.sqdH;
  Vec lnd = dsqd / g0.sqd;

  // derivatives of phi
  CMat f0 = phi(y);
  std::vector<CMat> d1(n);
  std::vector<std::vector<CMat>> d2(n, std::vector<CMat>(n));
  for (int k = 0; k < n; ++k) {
    RVec yp = y, ym = y;
    yp(k) += h;
    ym(k) -= h;
    CMat fp = phi(yp), fm = phi(ym);
    d1[k] = (fp - fm) / (2.0 * h);
    d2[k][k] = (fp - 2.0 * f0 + fm) / (h * h);
    for (int l = 0; l < k; ++l) {
      RVec a = y, c = y, e = y, f = y;
      a(k) += h, a(l) += h;
      c(k) += h, c(l) -= h;
      e(k) -= h, e(l) += h;
      f(k) -= h, f(l) -= h;
      d2[k][l] = d2[l][k] = (phi(a) - phi(c) - phi(e) + phi(f)) / (4.0 * h * h);
    }
  }

  Vec T(n);
  Mat hA = b.h_inv * b.A_gamma.transpose();  // nM x nG
  T.head(nM) = b.h_inv * lnd.head(nM) + hA * (b.K_V * lnd.tail(nV));
  Mat NGN = b.N_V * b.G_inv * b.N_V.transpose() + s.V_metric.inverse();
  T.tail(nV) = b.K_V.transpose() * (hA.transpose() * lnd.head(nM)) + NGN * lnd.tail(nV);

  CMat out = CMat::Zero(f0.rows(), f0.cols());
  for (int k = 0; k < n; ++k) {
    out += (bt(k) + T(k)) * d1[k];
    for (int l = 0; l < n; ++l) out += ginv(k, l) * d2[k][l];
  }
  Mat AhA = b.A_gamma * b.h_inv * b.A_gamma.transpose();
  Mat R = b.K_V.transpose() * b.gamma_inv * b.K_V + s.V_metric.inverse();
  Mat AR = b.A_p * R;  // nG x nV
  Mat AhAK = AhA * b.K_V;
  Mat LGL = b.Lambda * b.G_inv * b.Lambda.transpose();
  Vec zero_order = divA + LGL * divK;
  Mat Mq = b.gamma_inv + AhA;
  for (int be = 0; be < nG; ++be) {
    CMat first = CMat::Zero(f0.rows(), f0.cols());
    for (int i = 0; i < nM; ++i) first += hA(i, be) * d1[i];
    for (int a = 0; a < nV; ++a) first += (AhAK(be, a) + AR(be, a)) * d1[nM + a];
    out -= 2.0 * ch.J[be] * first;
    out -= zero_order(be) * ch.J[be] * f0;
    for (int al = 0; al < nG; ++al) out += Mq(al, be) * ch.J[al] * ch.J[be] * f0;
  }
  return 0.5 * eps * out;
}

double GridSolution::at_node(int i, int j, int k) const {
  const int m = grid.nf + 1;
  i = ((i % grid.nx) + grid.nx) % grid.nx;
  return values[(static_cast<std::size_t>(i) * m + j) * m + k];
}

double GridSolution::value_at(double x, double f1, double f2) const {
  double u = x / hx;
  u -= std::floor(u / grid.nx) * grid.nx;
  int i0 = static_cast<int>(std::floor(u));
  double tx = u - i0;
  double v1 = (f1 + grid.L) / hf, v2 = (f2 + grid.L) / hf;
  if (v1 < 0 || v2 < 0 || v1 > grid.nf || v2 > grid.nf) throw ConfigError("point outside the PDE grid");
  int j0 = std::min(static_cast<int>(std::floor(v1)), grid.nf - 1);
  int k0 = std::min(static_cast<int>(std::floor(v2)), grid.nf - 1);
  double t1 = v1 - j0, t2 = v2 - k0;
  double r = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int bb = 0; bb < 2; ++bb)
      for (int c = 0; c < 2; ++c) {
        double w = (a ? tx : 1 - tx) * (bb ? t1 : 1 - t1) * (c ? t2 : 1 - t2);
        if (w != 0.0) r += w * at_node(i0 + a, j0 + bb, k0 + c);
      }
  return r;
}

namespace {

// Model A reduced-space data from its own closed forms for d and the metric.
struct OracleA {
  double R1, R2, q, eps, m, v0;
  double d(double f1, double f2) const { return R2 * R2 + q * q * (f1 * f1 + f2 * f2); }
  double sqrtH(double f1, double f2) const { return R1 * R2 / std::sqrt(d(f1, f2)); }
  // f-block of the inverse metric: I + K K^T / R2^2, K = q (-f2, f1)
  void gf(double f1, double f2, double& g11, double& g12, double& g22) const {
    double K1 = -q * f2, K2 = q * f1;
    g11 = 1.0 + K1 * K1 / (R2 * R2);
    g12 = K1 * K2 / (R2 * R2);
    g22 = 1.0 + K2 * K2 / (R2 * R2);
  }
  // (1/sqrtH) d_b (sqrtH g^{ab}) by central differences
  void drift(double f1, double f2, double& b1, double& b2) const {
    const double h = 1e-5;
    auto col = [&](double a1, double a2, int c, double& o1, double& o2) {
      double g11, g12, g22, w = sqrtH(a1, a2);
      gf(a1, a2, g11, g12, g22);
      o1 = w * (c == 0 ? g11 : g12);
      o2 = w * (c == 0 ? g12 : g22);
    };
    double p1, p2, m1, m2, q1, q2, n1, n2;
    col(f1 + h, f2, 0, p1, p2);
    col(f1 - h, f2, 0, m1, m2);
    col(f1, f2 + h, 1, q1, q2);
    col(f1, f2 - h, 1, n1, n2);
    double w = sqrtH(f1, f2);
    b1 = ((p1 - m1) + (q1 - n1)) / (2.0 * h * w);
    b2 = ((p2 - m2) + (q2 - n2)) / (2.0 * h * w);
  }
  // Lap sigma + 1/4 |d sigma|^2, sigma = ln d, from stencils on sigma
  double jac(double f1, double f2) const {
    const double h = 1e-3;
    auto sg = [&](double a, double b) { return std::log(d(a, b)); };
    double s0 = sg(f1, f2);
    double s1 = (sg(f1 + h, f2) - sg(f1 - h, f2)) / (2 * h), s2 = (sg(f1, f2 + h) - sg(f1, f2 - h)) / (2 * h);
    double s11 = (sg(f1 + h, f2) - 2 * s0 + sg(f1 - h, f2)) / (h * h);
    double s22 = (sg(f1, f2 + h) - 2 * s0 + sg(f1, f2 - h)) / (h * h);
    double s12 = (sg(f1 + h, f2 + h) - sg(f1 + h, f2 - h) - sg(f1 - h, f2 + h) + sg(f1 - h, f2 - h)) / (4 * h * h);
    double g11, g12, g22, b1, b2;
    gf(f1, f2, g11, g12, g22);
    drift(f1, f2, b1, b2);
    double lap = g11 * s11 + 2 * g12 * s12 + g22 * s22 + b1 * s1 + b2 * s2;
    double qf = g11 * s1 * s1 + 2 * g12 * s1 * s2 + g22 * s2 * s2;
    return lap + 0.25 * qf;
  }
};

}  // namespace

GridSolution pde_backward_solve(const ModelSpec& spec, const std::function<double(double, double, double)>& phi,
                                double t_span, const GridSpec& grid, bool jacobian) {
  if (spec.id != 'A') throw ConfigError("the PDE oracle supports Model A only");
  if (grid.nx < 4 || grid.nf < 4 || grid.L <= 0.0 || t_span < 0.0) throw ConfigError("invalid PDE grid");
  const ModelParams& p = spec.params;
  OracleA o{p.R1, p.R2, p.q, p.eps(), p.m, p.v0};
  const int nx = grid.nx, nf = grid.nf, m = nf + 1;
  GridSolution sol;
  sol.grid = grid;
  sol.t_span = t_span;
  sol.hx = 2.0 * M_PI / nx;
  sol.hf = 2.0 * grid.L / nf;
  const double hx = sol.hx, hf = sol.hf, e = o.eps;
  const std::size_t N = static_cast<std::size_t>(nx) * m * m;

  // 15-point stencil weights per node: centre, x-/x+, j-/j+, k-/k+, four corners
  struct W {
    double c, xm, xp, jm, jp, km, kp, mm, mp, pm, pp;
  };
  std::vector<W> w(N);
  double rho = 0.0;
  const double cxx = 0.5 * e / (p.R1 * p.R1 * hx * hx);
  for (int i = 0; i < nx; ++i) {
    double x = i * hx;
    double vx = p.v0 * std::cos(x) / (e * p.m);
    for (int j = 1; j < nf; ++j)
      for (int k = 1; k < nf; ++k) {
        double f1 = -grid.L + j * hf, f2 = -grid.L + k * hf;
        double g11, g12, g22, b1, b2;
        o.gf(f1, f2, g11, g12, g22);
        o.drift(f1, f2, b1, b2);
        double a11 = 0.5 * e * g11, a12 = 0.5 * e * g12, a22 = 0.5 * e * g22;
        double c0 = vx + (jacobian ? -0.125 * e * o.jac(f1, f2) : 0.0);
        W& s = w[(static_cast<std::size_t>(i) * m + j) * m + k];
        s.xm = s.xp = cxx;
        s.jm = a11 / (hf * hf) - 0.25 * e * b1 / hf;
        s.jp = a11 / (hf * hf) + 0.25 * e * b1 / hf;
        s.km = a22 / (hf * hf) - 0.25 * e * b2 / hf;
        s.kp = a22 / (hf * hf) + 0.25 * e * b2 / hf;
        s.pp = s.mm = a12 / (2.0 * hf * hf);
        s.pm = s.mp = -a12 / (2.0 * hf * hf);
        s.c = -2.0 * cxx - 2.0 * (a11 + a22) / (hf * hf) + c0;
        double r = std::abs(s.c) + std::abs(s.xm) + std::abs(s.xp) + std::abs(s.jm) + std::abs(s.jp) + std::abs(s.km) +
                   std::abs(s.kp) + 4.0 * std::abs(s.pp);
        rho = std::max(rho, r);
      }
  }
  const double dt_max = 1.0 / rho;
  sol.dt_max = dt_max;
  if (grid.dt > 0.0 && grid.dt > dt_max)
    throw ConfigError("PDE time step exceeds the explicit stability bound " + std::to_string(dt_max));
  double dt = grid.dt > 0.0 ? grid.dt : dt_max;
  sol.steps = t_span > 0.0 ? static_cast<int>(std::ceil(t_span / dt)) : 0;
  sol.dt = sol.steps ? t_span / sol.steps : 0.0;

  std::vector<double> u(N), un(N);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        double f1 = -grid.L + j * hf, f2 = -grid.L + k * hf;
        double wgt = jacobian ? std::pow(o.d(f1, f2), 0.25) : 1.0;
        u[(static_cast<std::size_t>(i) * m + j) * m + k] = wgt * phi(i * hx, f1, f2);
      }
  un = u;
  const double tau = sol.dt;
  for (int st = 0; st < sol.steps; ++st) {
    parallel_for(nx, grid.workers, [&](long il) {
      const int i = static_cast<int>(il);
      const std::size_t im = static_cast<std::size_t>((i + nx - 1) % nx), ip = static_cast<std::size_t>((i + 1) % nx);
      for (int j = 1; j < nf; ++j)
        for (int k = 1; k < nf; ++k) {
          const std::size_t id = (static_cast<std::size_t>(i) * m + j) * m + k;
          const W& s = w[id];
          const std::size_t jk = static_cast<std::size_t>(j) * m + k;
          double lu = s.c * u[id] + s.xm * u[im * m * m + jk] + s.xp * u[ip * m * m + jk] + s.jm * u[id - m] +
                      s.jp * u[id + m] + s.km * u[id - 1] + s.kp * u[id + 1] + s.mm * u[id - m - 1] +
                      s.mp * u[id - m + 1] + s.pm * u[id + m - 1] + s.pp * u[id + m + 1];
          un[id] = u[id] + tau * lu;
        }
    });
    std::swap(u, un);
  }
  if (jacobian)
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
          double f1 = -grid.L + j * hf, f2 = -grid.L + k * hf;
          u[(static_cast<std::size_t>(i) * m + j) * m + k] /= std::pow(o.d(f1, f2), 0.25);
        }
  sol.values = std::move(u);
  return sol;
}

}  // namespace bred
