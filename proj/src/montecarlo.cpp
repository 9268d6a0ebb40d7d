#include "bred/montecarlo.hpp"

#include <cmath>
#include <sstream>

namespace bred {

namespace {

std::vector<int> checkpoint_steps(const TimeGrid& grid, std::vector<double>& cps) {
  if (cps.empty()) cps.push_back(grid.t_b);
  const int n = grid.steps();
  std::vector<int> ks;
  for (double t : cps) {
    double r = (t - grid.t_a) / grid.dt;
    long k = std::llround(r);
    if (std::abs(r - k) > 1e-6 || k < 0 || k > n) throw ConfigError("checkpoint time not on the time grid");
    ks.push_back(static_cast<int>(k));
  }
  return ks;
}

void guard(double v, long path) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "non-finite path functional on path " << path;
    throw NumericalDegeneracyError(os.str());
  }
}

Estimate tagged(Estimate e, const TimeGrid& g, double t_b, const McConfig& cfg, const ModelSpec& s) {
  e.dt = g.dt;
  e.t_a = g.t_a;
  e.t_b = t_b;
  e.seed = cfg.seed;
  e.model = std::string(1, s.id);
  return e;
}

}  // namespace

Estimate make_estimate(const std::vector<double>& v, const std::vector<char>& ok) {
  Estimate e;
  double s = 0.0;
  long n = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (ok[i]) {
      s += v[i];
      ++n;
    }
  e.n_paths = n;
  e.n_failed = static_cast<long>(v.size()) - n;
  if (n == 0) throw ConfigError("empty ensemble");
  e.value = s / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (ok[i]) ss += (v[i] - e.value) * (v[i] - e.value);
  e.stderr_ = n > 1 ? std::sqrt(ss / (double(n) * (n - 1))) : 0.0;
  return e;
}

std::vector<Estimate> semigroup_total(const ModelSpec& spec, const TotalFn& phi0, const AdaptedPoint& start,
                                      const TimeGrid& grid, const McConfig& cfg, std::vector<double> cps) {
  std::vector<int> ks = checkpoint_steps(grid, cps);
  const int n = grid.steps();
  auto proc = make_total(spec);
  const bool with_v = spec.params.v0 != 0.0;
  const double vscale = 1.0 / (spec.params.eps() * spec.params.m);
  const long N = cfg.n_paths;
  std::vector<std::vector<double>> vals(ks.size(), std::vector<double>(N));
  std::vector<char> ok(N, 1);
  parallel_for(N, cfg.workers, [&](long i) {
    PathRng rng(cfg.seed, cfg.stream, i);
    RVec s = proc->lift(start), dW(proc->channels()), y;
    GroupElement a;
    double vint = 0.0, vprev = 0.0;
    try {
      if (with_v) {
        proc->project(s, y, a);
        vprev = spec.eval_potential(Vec(y.head(spec.nM)), Vec(y.tail(spec.nV)));
      }
      std::size_t c = 0;
      for (int k = 0; k <= n; ++k) {
        if (k > 0) {
          rng.increments(dW, proc->base_channels(), grid.dt);
          proc->step(s, dW, grid.dt);
          if (with_v) {
            proc->project(s, y, a);
            double v = spec.eval_potential(Vec(y.head(spec.nM)), Vec(y.tail(spec.nV)));
            vint += 0.5 * (vprev + v) * grid.dt;
            vprev = v;
          }
        }
        for (std::size_t j = 0; j < ks.size(); ++j)
          if (ks[j] == k) {
            proc->project(s, y, a);
            double v = phi0(y, a) * std::exp(vscale * vint);
            guard(v, i);
            vals[j][i] = v;
            ++c;
          }
      }
    } catch (const ModelError&) {
      ok[i] = 0;
    }
  });
  std::vector<Estimate> out;
  for (std::size_t j = 0; j < ks.size(); ++j) out.push_back(tagged(make_estimate(vals[j], ok), grid, cps[j], cfg, spec));
  return out;
}

std::vector<Estimate> semigroup_reduced_zero(const ReducedDynamics& dyn, const ReducedFn& phi, const RVec& y0,
                                             const TimeGrid& grid, const McConfig& cfg, std::vector<double> cps,
                                             bool jacobian) {
  std::vector<int> ks = checkpoint_steps(grid, cps);
  const int n = grid.steps();
  const ModelSpec& spec = dyn.spec();
  const bool with_v = spec.params.v0 != 0.0;
  const double vscale = 1.0 / (spec.params.eps() * spec.params.m);
  ReducedStepper st(dyn, jacobian ? ProcessKind::Reduced : ProcessKind::Filtered);
  const long N = cfg.n_paths;
  std::vector<std::vector<double>> vals(ks.size(), std::vector<double>(N));
  std::vector<char> ok(N, 1);
  const double sig_a = dyn.log_d(y0);
  parallel_for(N, cfg.workers, [&](long i) {
    PathRng rng(cfg.seed, cfg.stream, i);
    RVec y = y0, dW(st.channels());
    double vint = 0.0, jint = 0.0;
    double vprev = with_v ? dyn.potential(y) : 0.0;
    double jprev = jacobian ? dyn.jacobian_integrand(y) : 0.0;
    try {
      for (int k = 0; k <= n; ++k) {
        if (k > 0) {
          rng.increments(dW, st.base_channels(), grid.dt);
          st.step(y, dW, grid.dt);
          if (with_v) {
            double v = dyn.potential(y);
            vint += 0.5 * (vprev + v) * grid.dt;
            vprev = v;
          }
          if (jacobian) {
            double jj = dyn.jacobian_integrand(y);
            jint += 0.5 * (jprev + jj) * grid.dt;
            jprev = jj;
          }
        }
        for (std::size_t j = 0; j < ks.size(); ++j)
          if (ks[j] == k) {
            double lw = vscale * vint;
            if (jacobian) lw += 0.25 * (dyn.log_d(y) - sig_a) - 0.125 * dyn.eps() * jint;
            double v = phi(y) * std::exp(lw);
            guard(v, i);
            vals[j][i] = v;
          }
      }
    } catch (const ModelError&) {
      ok[i] = 0;
    }
  });
  std::vector<Estimate> out;
  for (std::size_t j = 0; j < ks.size(); ++j) out.push_back(tagged(make_estimate(vals[j], ok), grid, cps[j], cfg, spec));
  return out;
}

ChannelSum semigroup_channel(const ReducedDynamics& dyn, const std::vector<CoeffFn>& c, const std::vector<RepChannel>& chs,
                             const RVec& y0, const GroupElement& theta0, const TimeGrid& grid, const McConfig& cfg) {
  if (c.size() != chs.size()) throw ConfigError("one coefficient function per channel is required");
  for (const auto& ch : chs)
    if (ch.group != dyn.spec().group) throw ConfigError("channel does not match the model's group");
  const int n = grid.steps();
  const ModelSpec& spec = dyn.spec();
  const bool with_v = spec.params.v0 != 0.0;
  const double vscale = 1.0 / (spec.params.eps() * spec.params.m);
  ReducedStepper st(dyn, ProcessKind::Filtered);
  const long N = cfg.n_paths;
  const std::size_t nc = chs.size();
  std::vector<std::vector<CMat>> Y(nc, std::vector<CMat>(N));
  std::vector<double> tot(N);
  std::vector<char> ok(N, 1);
  std::vector<CMat> D0;
  for (const auto& ch : chs) D0.push_back(ch.D(theta0));
  parallel_for(N, cfg.workers, [&](long i) {
    PathRng rng(cfg.seed, cfg.stream, i);
    RVec y = y0, dW(st.channels());
    std::vector<CMat> M;
    for (const auto& ch : chs) M.push_back(CMat::Identity(ch.dim, ch.dim));
    double vint = 0.0, vprev = with_v ? dyn.potential(y) : 0.0;
    try {
      ChannelCoeffs c0 = dyn.channel_coeffs(y);
      for (int k = 0; k < n; ++k) {
        rng.increments(dW, st.base_channels(), grid.dt);
        st.step(y, dW, grid.dt);
        ChannelCoeffs c1 = dyn.channel_coeffs(y);
        for (std::size_t j = 0; j < nc; ++j) M[j] = channel_step_factor(chs[j], dyn.eps(), c0, c1, dW, grid.dt) * M[j];
        c0 = std::move(c1);
        if (with_v) {
          double v = dyn.potential(y);
          vint += 0.5 * (vprev + v) * grid.dt;
          vprev = v;
        }
      }
      double fk = std::exp(vscale * vint);
      double s = 0.0;
      for (std::size_t j = 0; j < nc; ++j) {
        Y[j][i] = fk * c[j](y).transpose() * M[j];
        s += (Y[j][i] * D0[j]).trace().real();
      }
      guard(s, i);
      tot[i] = s;
    } catch (const ModelError&) {
      ok[i] = 0;
      for (std::size_t j = 0; j < nc; ++j) Y[j][i] = CMat::Zero(chs[j].dim, chs[j].dim);
    }
  });
  ChannelSum out;
  out.total = tagged(make_estimate(tot, ok), grid, grid.t_b, cfg, spec);
  out.n_failed = out.total.n_failed;
  for (std::size_t j = 0; j < nc; ++j) {
    ChannelEstimate ce;
    ce.ch = chs[j];
    std::vector<MultiplicativeIntegral> mi;
    std::vector<double> re, im;
    std::vector<char> okj;
    for (long i = 0; i < N; ++i) {
      if (!ok[i]) continue;
      MultiplicativeIntegral m;
      m.value = Y[j][i];
      m.label = chs[j].label;
      m.path = i;
      mi.push_back(m);
      cplx v = (Y[j][i] * D0[j]).trace();
      re.push_back(v.real());
      im.push_back(v.imag());
      okj.push_back(1);
    }
    ce.Y = filtered_expectation(mi, RepChannel{GroupKind::U1, 0, chs[j].dim, {}}, GroupElement::identity(GroupKind::U1));
    Estimate er = make_estimate(re, okj), ei = make_estimate(im, okj);
    ce.value = cplx(er.value, ei.value);
    ce.stderr_re = er.stderr_;
    ce.stderr_im = ei.stderr_;
    out.channels.push_back(ce);
  }
  return out;
}

cplx group_average(const HaarQuadrature& quad, const std::function<cplx(const GroupElement&)>& f) {
  cplx s = 0.0;
  for (std::size_t k = 0; k < quad.nodes.size(); ++k) s += quad.weights[k] * f(quad.nodes[k]);
  return s;
}

cplx group_average(const HaarQuadrature& quad, const std::vector<cplx>& samples) {
  if (samples.size() != quad.nodes.size()) throw ConfigError("sample count differs from quadrature node count");
  cplx s = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) s += quad.weights[k] * samples[k];
  return s;
}

std::vector<IdentityReport> reduction_identity_experiment(const ReducedDynamics& dyn, const ReducedFn& phi,
                                                          const RVec& y0, const TimeGrid& grid, const McConfig& cfg,
                                                          std::vector<double> cps, double rel_tol) {
  if (cps.empty()) cps.push_back(grid.t_b);
  const ModelSpec& spec = dyn.spec();
  McConfig cl = cfg, cr = cfg;
  cl.stream = 2 * cfg.stream + 1;
  cr.stream = 2 * cfg.stream + 2;
  auto lhs = semigroup_reduced_zero(dyn, phi, y0, grid, cl, cps, true);
  AdaptedPoint start = adapted_point(spec, y0, GroupElement::identity(spec.group));
  TotalFn phi0 = [&phi](const RVec& y, const GroupElement&) { return phi(y); };
  auto rhs = semigroup_total(spec, phi0, start, grid, cr, cps);
  std::vector<IdentityReport> out;
  for (std::size_t j = 0; j < cps.size(); ++j) {
    IdentityReport r;
    r.t = cps[j];
    r.lhs = lhs[j];
    r.rhs = rhs[j];
    r.diff = lhs[j].value - rhs[j].value;
    r.sigma = std::hypot(lhs[j].stderr_, rhs[j].stderr_);
    r.rel = std::abs(r.diff) / std::max(std::abs(rhs[j].value), 1e-300);
    r.pass = std::abs(r.diff) < 3.0 * r.sigma && r.rel < rel_tol;
    out.push_back(r);
  }
  return out;
}

}  // namespace bred
