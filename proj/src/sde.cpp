#include "bred/sde.hpp"

#include <cmath>
#include <limits>

namespace bred {

namespace {

void check_original_chart(const ModelSpec& s, const Vec& Q) {
  if (s.group == GroupKind::SU2 && s.nM == 0 && Q.norm() > kSu2ChartRadius)
    throw ChartError("Q outside the canonical SU(2) chart");
  if (s.id == 'B' && Q.norm() > 10.0) throw ChartError("Q outside the stereographic chart");
}

std::vector<std::string> labels(const char* p, int n) {
  std::vector<std::string> v;
  for (int i = 0; i < n; ++i) v.push_back(std::string(p) + std::to_string(i));
  return v;
}

void append(std::vector<std::string>& a, const std::vector<std::string>& b) { a.insert(a.end(), b.begin(), b.end()); }

}  // namespace

SdeCoefficients coefficients_original(const ModelSpec& s, const Vec& Q, const Vec& f) {
  (void)f;
  check_original_chart(s, Q);
  const int nP = s.nP, nV = s.nV;
  const double h = s.fd_step;
  auto wG = [&](const Vec& q, double& w) {
    Mat G = s.P_metric(q);
    w = std::sqrt(G.determinant());
    return Mat(w * G.inverse());
  };
  double w0;
  Mat Ginv = wG(Q, w0) / w0;
  SdeCoefficients c;
  c.drift = Vec::Zero(nP + nV);
  for (int B = 0; B < nP; ++B) {
    Vec qp = Q, qm = Q;
    qp(B) += h;
    qm(B) -= h;
    double w;
    Mat Fp = wG(qp, w), Fm = wG(qm, w);
    c.drift.head(nP) += (Fp.col(B) - Fm.col(B)) / (2.0 * h);
  }
  c.drift.head(nP) /= w0;
  c.diffusion = Mat::Zero(nP + nV, nP + nV);
  c.diffusion.topLeftCorner(nP, nP) = sym_sqrt(Ginv);
  c.diffusion.bottomRightCorner(nV, nV) = sym_sqrt(s.V_metric.inverse());
  c.row_labels = labels("Q", nP);
  append(c.row_labels, labels("f", nV));
  c.channel_labels = labels("wM", nP);
  append(c.channel_labels, labels("wb", nV));
  return c;
}

SdeCoefficients coefficients_adapted(const ModelSpec& s, const AdaptedPoint& pt) {
  GenericReduced g(s);
  RVec y = reduced_coords(pt), b;
  RMat X;
  g.drift(y, false, b);
  g.diffusion_adapted(y, X);
  GeometryBlocks bl = geometry_blocks(s, pt.x, pt.ft);
  const int nM = s.nM, nV = s.nV, nG = s.nG, nP = s.nP;
  SdeCoefficients c;
  c.drift = Vec::Constant(nM + nV + nG, std::numeric_limits<double>::quiet_NaN());
  c.drift.head(nM + nV) = b;
  c.diffusion = Mat::Zero(nM + nV + nG, nP + nV);
  c.diffusion.topRows(nM + nV) = X;
  c.diffusion.block(nM + nV, 0, nG, nP) = group_v(pt.a) * bl.Lambda * sym_sqrt(bl.G_inv);
  c.row_labels = labels("x", nM);
  append(c.row_labels, labels("ft", nV));
  append(c.row_labels, labels("a", nG));
  c.channel_labels = labels("wM", nP);
  append(c.channel_labels, labels("wb", nV));
  return c;
}

FilteredDiffusion solve_filtered_diffusion(const ModelSpec& s, const AdaptedPoint& pt) {
  GeometryBlocks bl = geometry_blocks(s, pt.x, pt.ft);
  const int nM = s.nM, nV = s.nV, nG = s.nG;
  Mat v = group_v(pt.a);
  FilteredDiffusion F;
  F.Xx = sym_sqrt(bl.h_inv);
  F.Xa_m = bl.K_V.transpose() * bl.A_gamma * F.Xx;
  Mat R = bl.K_V.transpose() * bl.gamma_inv * bl.K_V + s.V_metric.inverse();
  F.Xa_b = sym_sqrt(R);
  Mat Rinv = R.inverse();
  F.Z = -Rinv * bl.K_V.transpose() * bl.gamma_inv * v.transpose();
  F.Xal_b = F.Z.transpose() * F.Xa_b;
  F.Xal_m = -v * bl.A_gamma * F.Xx;
  Mat Yarg = bl.gamma_inv - bl.gamma_inv * bl.K_V * Rinv * bl.K_V.transpose() * bl.gamma_inv;
  F.Xal_beta = v * sym_sqrt(Yarg);
  const int n = nM + nV + nG;
  F.full = Mat::Zero(n, n);
  F.full.block(0, 0, nM, nM) = F.Xx;
  F.full.block(nM, 0, nV, nM) = F.Xa_m;
  F.full.block(nM, nM, nV, nV) = F.Xa_b;
  F.full.block(nM + nV, 0, nG, nM) = F.Xal_m;
  F.full.block(nM + nV, nM, nG, nV) = F.Xal_b;
  F.full.block(nM + nV, nM + nV, nG, nG) = F.Xal_beta;
  return F;
}

std::array<double, 6> filtered_residuals(const ModelSpec& s, const AdaptedPoint& pt) {
  GeometryBlocks bl = geometry_blocks(s, pt.x, pt.ft);
  FilteredDiffusion F = solve_filtered_diffusion(s, pt);
  Mat v = group_v(pt.a);
  Mat M = bl.gamma_inv + bl.A_gamma * bl.h_inv * bl.A_gamma.transpose();
  auto mx = [](const Mat& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; };
  std::array<double, 6> r;
  r[0] = mx(F.Xx * F.Xx.transpose() - bl.h_inv);
  r[1] = mx(F.Xx * F.Xa_m.transpose() - bl.h_inv * bl.A_gamma.transpose() * bl.K_V);
  r[2] = mx(F.Xa_m * F.Xa_m.transpose() + F.Xa_b * F.Xa_b.transpose() -
            (bl.N_V * bl.G_inv * bl.N_V.transpose() + s.V_metric.inverse()));
  r[3] = mx(F.Xx * F.Xal_m.transpose() + bl.h_inv * bl.A_gamma.transpose() * v.transpose());
  r[4] = mx(F.Xa_m * F.Xal_m.transpose() + F.Xa_b * F.Xal_b.transpose() + bl.K_V.transpose() * M * v.transpose());
  r[5] = mx(F.Xal_m * F.Xal_m.transpose() + F.Xal_b * F.Xal_b.transpose() + F.Xal_beta * F.Xal_beta.transpose() -
            v * M * v.transpose());
  return r;
}

SdeCoefficients coefficients_filtered(const ModelSpec& s, const AdaptedPoint& pt) {
  GenericReduced g(s);
  RVec y = reduced_coords(pt), b;
  g.drift(y, false, b);
  const int nM = s.nM, nV = s.nV, nG = s.nG;
  SdeCoefficients c;
  c.drift = Vec::Constant(nM + nV + nG, std::numeric_limits<double>::quiet_NaN());
  c.drift.head(nM + nV) = b;
  c.diffusion = solve_filtered_diffusion(s, pt).full;
  c.row_labels = labels("x", nM);
  append(c.row_labels, labels("ft", nV));
  append(c.row_labels, labels("a", nG));
  c.channel_labels = labels("wm", nM);
  append(c.channel_labels, labels("wb", nV));
  append(c.channel_labels, labels("wbeta", nG));
  return c;
}

int TimeGrid::steps() const {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (t_b < t_a) throw ConfigError("t_b precedes t_a");
  return static_cast<int>(std::llround((t_b - t_a) / dt));
}

PathRng::PathRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t path) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq sb{lo(seed), hi(seed), lo(stream), hi(stream), lo(path), hi(path), 0u};
  std::seed_seq sf{lo(seed), hi(seed), lo(stream), hi(stream), lo(path), hi(path), 1u};
  base_.seed(sb);
  fiber_.seed(sf);
}

void PathRng::increments(RVec& dW, int n_base, double dt) {
  const double s = std::sqrt(dt);
  for (int k = 0; k < dW.size(); ++k) dW(k) = s * nd_(k < n_base ? base_ : fiber_);
}

const char* process_name(ProcessKind k) {
  switch (k) {
    case ProcessKind::Original:
      return "original";
    case ProcessKind::Adapted:
      return "adapted";
    case ProcessKind::Filtered:
      return "filtered";
    case ProcessKind::Reduced:
      return "reduced";
  }
  return "?";
}

void euler_heun_step(const StratFn& f, Vec& y, const Vec& dW, double dt) {
  Vec a0, a1;
  Mat B0, B1;
  f(y, a0, B0);
  Vec yb = y + a0 * dt + B0 * dW;
  f(yb, a1, B1);
  y += 0.5 * (a0 + a1) * dt + 0.5 * (B0 + B1) * dW;
}

ReducedStepper::ReducedStepper(const ReducedDynamics& dyn, ProcessKind kind) : dyn_(dyn), kind_(kind) {
  if (kind == ProcessKind::Original) throw ConfigError("reduced stepper cannot run the original process");
  const ModelSpec& s = dyn.spec();
  channels_ = kind == ProcessKind::Adapted ? dyn.adapted_channels() : dyn.channels();
  base_ = kind == ProcessKind::Adapted ? s.nP : s.nM;
  wrap_x_ = s.id == 'A';
}

void ReducedStepper::coefficients(const RVec& y, RVec& a, RMat& B) const {
  const bool adapted = kind_ == ProcessKind::Adapted;
  const double eps = dyn_.eps();
  RVec c;
  dyn_.drift(y, kind_ == ProcessKind::Reduced, a);
  dyn_.strat_correction(y, adapted, c);
  a = 0.5 * eps * (a - c);
  if (adapted)
    dyn_.diffusion_adapted(y, B);
  else
    dyn_.diffusion(y, B);
  B *= std::sqrt(eps);
}

void ReducedStepper::step(RVec& y, const RVec& dW, double dt) const {
  RVec a0, a1;
  RMat B0, B1;
  coefficients(y, a0, B0);
  RVec yb = y + a0 * dt + B0 * dW;
  coefficients(yb, a1, B1);
  y += 0.5 * (a0 + a1) * dt + 0.5 * (B0 + B1) * dW;
  if (wrap_x_) y(0) = wrap_angle(y(0));
}

namespace {

class TotalA : public TotalProcess {
 public:
  using TotalProcess::TotalProcess;
  int state_dim() const override { return 4; }
  int channels() const override { return 4; }
  int base_channels() const override { return 2; }
  RVec lift(const AdaptedPoint& pt) const override {
    TotalPoint t = to_total(spec_, pt);
    RVec s(4);
    s << t.Q, t.f;
    return s;
  }
  void step(RVec& s, const RVec& dW, double) const override {
    const double r = std::sqrt(eps_);
    s(0) = wrap_angle(s(0) + r * dW(0) / spec_.params.R1);
    s(1) = wrap_angle(s(1) + r * dW(1) / spec_.params.R2);
    s(2) += r * dW(2);
    s(3) += r * dW(3);
  }
  void project(const RVec& s, RVec& y, GroupElement& a) const override {
    Vec x, ft;
    spec_.to_adapted(Vec(s.head(2)), Vec(s.tail(2)), x, ft, a);
    y.resize(3);
    y << x, ft;
  }
};

Quat quat_exp(const Vec3& v) {
  double t = v.norm();
  if (t < 1e-300) return Quat::Identity();
  Vec3 u = std::sin(t) / t * v;
  return Quat(std::cos(t), u(0), u(1), u(2));
}

// S3 as unit quaternions p = p0 + p1 i + p2 j + p3 k; the Hopf U(1) multiplies
// (z1, z2) = (p0 + i p1, p2 + i p3) by a common phase.
class TotalB : public TotalProcess {
 public:
  using TotalProcess::TotalProcess;
  int state_dim() const override { return 6; }
  int channels() const override { return 5; }
  int base_channels() const override { return 3; }
  RVec lift(const AdaptedPoint& pt) const override {
    double w = 1.0 / std::sqrt(1.0 + pt.x.squaredNorm());
    double c = std::cos(pt.a.theta), sn = std::sin(pt.a.theta);
    RVec s(6);
    s(0) = c * w;
    s(1) = sn * w;
    s(2) = w * (c * pt.x(0) - sn * pt.x(1));
    s(3) = w * (sn * pt.x(0) + c * pt.x(1));
    s.tail(2) = spec_.rep_bar(pt.a) * pt.ft;
    return s;
  }
  void step(RVec& s, const RVec& dW, double) const override {
    const double r = std::sqrt(eps_);
    Quat p(s(0), s(1), s(2), s(3));
    p = p * quat_exp(r * Vec3(dW(0), dW(1), dW(2)));
    p.normalize();
    s(0) = p.w();
    s(1) = p.x();
    s(2) = p.y();
    s(3) = p.z();
    s(4) += r * dW(3);
    s(5) += r * dW(4);
  }
  void project(const RVec& s, RVec& y, GroupElement& a) const override {
    double n2 = s(0) * s(0) + s(1) * s(1);
    if (n2 < 1e-4) throw ChartError("S3 point near the excluded Hopf fibre");
    double xr = (s(2) * s(0) + s(3) * s(1)) / n2, xi = (s(3) * s(0) - s(2) * s(1)) / n2;
    a = GroupElement::identity(GroupKind::U1);
    a.theta = std::atan2(s(1), s(0));
    y.resize(4);
    y(0) = xr;
    y(1) = xi;
    y.tail(2) = spec_.rep_bar(a.inverse()) * Vec(s.tail(2));
  }
};

class TotalC : public TotalProcess {
 public:
  using TotalProcess::TotalProcess;
  int state_dim() const override { return 7; }
  int channels() const override { return 6; }
  int base_channels() const override { return 3; }
  RVec lift(const AdaptedPoint& pt) const override {
    RVec s(7);
    s << pt.a.q.w(), pt.a.q.x(), pt.a.q.y(), pt.a.q.z(), Vec(spec_.rep_bar(pt.a) * pt.ft);
    return s;
  }
  void step(RVec& s, const RVec& dW, double) const override {
    const double r = std::sqrt(eps_);
    Quat p(s(0), s(1), s(2), s(3));
    p = p * su2_exp(r / std::sqrt(spec_.params.c) * Vec3(dW(0), dW(1), dW(2)));
    p.normalize();
    s(0) = p.w();
    s(1) = p.x();
    s(2) = p.y();
    s(3) = p.z();
    for (int k = 0; k < 3; ++k) s(4 + k) += r * dW(3 + k);
  }
  void project(const RVec& s, RVec& y, GroupElement& a) const override {
    a = GroupElement::identity(GroupKind::SU2);
    a.q = Quat(s(0), s(1), s(2), s(3));
    y = su2_adjoint(a.q) * Vec3(s(4), s(5), s(6));
  }
};

}  // namespace

std::unique_ptr<TotalProcess> make_total(const ModelSpec& spec) {
  switch (spec.id) {
    case 'A':
      return std::make_unique<TotalA>(spec);
    case 'B':
      return std::make_unique<TotalB>(spec);
    case 'C':
      return std::make_unique<TotalC>(spec);
    default:
      throw ConfigError("no total-space process for this model");
  }
}

PathSample simulate(const ReducedDynamics& dyn, ProcessKind kind, const RVec& y0, const TimeGrid& grid,
                    std::uint64_t seed, std::uint64_t stream, std::uint64_t path) {
  PathSample ps;
  ps.grid = grid;
  ps.seed = seed;
  ps.stream = stream;
  ps.path = path;
  const int n = grid.steps();
  PathRng rng(seed, stream, path);
  RVec y = y0;
  ps.states.reserve(n + 1);
  ps.increments.reserve(n);
  ps.states.push_back(y);
  const ModelSpec& s = dyn.spec();
  try {
    if (kind == ProcessKind::Original) {
      StratFn f = [&](const Vec& z, Vec& a, Mat& B) {
        SdeCoefficients c = coefficients_original(s, Vec(z.head(s.nP)), Vec(z.tail(s.nV)));
        B = c.diffusion;
        Vec corr = Vec::Zero(z.size());
        const double h = s.fd_step;
        for (int j = 0; j < B.cols(); ++j) {
          Vec zp = z + h * B.col(j), zm = z - h * B.col(j);
          Mat Bp = coefficients_original(s, Vec(zp.head(s.nP)), Vec(zp.tail(s.nV))).diffusion;
          Mat Bm = coefficients_original(s, Vec(zm.head(s.nP)), Vec(zm.tail(s.nV))).diffusion;
          corr += (Bp.col(j) - Bm.col(j)) / (2.0 * h);
        }
        a = 0.5 * dyn.eps() * (c.drift - corr);
        B *= std::sqrt(dyn.eps());
      };
      RVec dW(s.nP + s.nV);
      Vec z = y;
      for (int k = 0; k < n; ++k) {
        rng.increments(dW, s.nP, grid.dt);
        euler_heun_step(f, z, Vec(dW), grid.dt);
        ps.increments.push_back(dW);
        ps.states.push_back(RVec(z));
      }
    } else {
      ReducedStepper st(dyn, kind);
      RVec dW(st.channels());
      for (int k = 0; k < n; ++k) {
        rng.increments(dW, st.base_channels(), grid.dt);
        double v0 = dyn.potential(y);
        st.step(y, dW, grid.dt);
        ps.potential_integral += 0.5 * (v0 + dyn.potential(y)) * grid.dt;
        ps.increments.push_back(dW);
        ps.states.push_back(y);
      }
    }
  } catch (const ModelError& e) {
    ps.failed = true;
    ps.failure = e.what();
  }
  return ps;
}

}  // namespace bred
