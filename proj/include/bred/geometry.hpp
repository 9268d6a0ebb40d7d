#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bred/errors.hpp"
#include "bred/group.hpp"

namespace bred {

struct ModelParams {
  double R1 = 1.0;
  double R2 = 1.0;
  double q = 1.0;   // Model A charge
  int n = 1;        // Model B charge
  double c = 1.0;   // Model C orbit scale: gamma = c I
  double mu = 1.0;
  double kappa = 1.0;
  double m = 1.0;
  double v0 = 0.0;  // potential coefficient, V = v0 cos(x) (A) or v0 exp(-|f|^2) (B, C)
  double eps() const { return mu * mu * kappa; }
};

// A concrete bundle P x V with a right action of G.  Derivative evaluators
// are optional; missing ones fall back to central differences with fd_step.
struct ModelSpec {
  char id = 'X';
  std::string name;
  int nP = 0, nV = 0, nG = 0, nM = 0;
  GroupKind group = GroupKind::U1;
  ModelParams params;

  Mat V_metric;
  std::vector<Mat> Jbar;       // nG generators, nV x nV
  std::vector<Mat> structure;  // structure[g](a, b) = c^g_{ab}

  std::function<Mat(const Vec& Q)> P_metric;
  std::function<Vec(const Vec& Q, const GroupElement& g)> action;
  std::function<Mat(const Vec& Q)> killing_P;  // nG x nP, row alpha = K_alpha^A
  std::function<Vec(const Vec& Q)> gauge;
  std::function<Mat(const Vec& Q)> gauge_jac;  // nG x nP
  std::function<Vec(const Vec& x)> section;
  std::function<Mat(const Vec& x)> section_jac;  // nP x nM
  std::function<Mat(const GroupElement& g)> rep_bar;
  std::function<double(const Vec& x, const Vec& ft)> potential;
  std::function<bool(const Vec& x)> in_chart;
  // Inverse of (x, f~, a) -> (F(Q*(x), a), Dbar(a) f~).
  std::function<void(const Vec& Q, const Vec& f, Vec& x, Vec& ft, GroupElement& a)> to_adapted;

  double fd_step = 1e-5;

  Mat eval_killing_P(const Vec& Q) const;
  Mat eval_gauge_jac(const Vec& Q) const;
  Mat eval_section_jac(const Vec& x) const;
  double eval_potential(const Vec& x, const Vec& ft) const;
  // Throws ConfigError on violated structural invariants.
  void validate(double tol = 1e-10) const;
};

ModelSpec model_A(const ModelParams& p = {});
ModelSpec model_B(const ModelParams& p = {});
ModelSpec model_C(const ModelParams& p = {});
ModelSpec make_model(char id, const ModelParams& p = {});

struct AdaptedPoint {
  Vec x;
  Vec ft;
  GroupElement a;
  int chart_id = 0;
};

struct GeometryBlocks {
  Vec Qs;
  Mat Qs_x;
  Mat G, G_inv;
  Mat K_P, K_V;
  Mat gamma, gamma_prime, d_orbit, gamma_inv, d_inv;
  double d = 0.0;
  Mat A_i, A_p, A_gamma;
  Mat chi, FP, Lambda;
  Mat N_P, N_V, P_perp, T;
  Mat GH, GH_tilde, GH_tilde_Pa, GH_tilde_ab;
  Mat h, h_inv, h_tilde;
  Mat reduced_metric, reduced_inverse;
  double H = 0.0;
};

GeometryBlocks geometry_blocks(const ModelSpec& spec, const Vec& x, const Vec& ft);

struct KillingFields {
  Mat K_P, K_V;
};
struct OrbitMetrics {
  Mat gamma, gamma_prime, d_orbit;
  double d;
};
struct MechanicalConnection {
  Mat A_i, A_p, A_gamma;
};
struct HorizontalMetrics {
  Mat h, h_inv, h_tilde, GH, GH_tilde, GH_tilde_Pa, GH_tilde_ab;
  double H;
};
struct Projectors {
  Mat Lambda, FP, N_P, N_V, P_perp, T;
};
struct GroupMatrices {
  Mat u, v, Dbar;
};

KillingFields killing_fields(const ModelSpec& spec, const AdaptedPoint& pt);
OrbitMetrics orbit_metrics(const ModelSpec& spec, const AdaptedPoint& pt);
MechanicalConnection mechanical_connection(const ModelSpec& spec, const AdaptedPoint& pt);
Mat assemble_metric(const ModelSpec& spec, const AdaptedPoint& pt);
Mat inverse_metric(const ModelSpec& spec, const AdaptedPoint& pt);
HorizontalMetrics horizontal_metrics(const ModelSpec& spec, const AdaptedPoint& pt);
Projectors projectors(const ModelSpec& spec, const AdaptedPoint& pt);
GroupMatrices group_matrices(const ModelSpec& spec, const GroupElement& a);

// Block assembly from precomputed blocks and group matrices.
Mat assemble_metric(const ModelSpec& spec, const GeometryBlocks& b, const Mat& u);
Mat inverse_metric(const ModelSpec& spec, const GeometryBlocks& b, const Mat& v);

// Total-space coordinates (Q, f) of an adapted point.
struct TotalPoint {
  Vec Q, f;
};
TotalPoint to_total(const ModelSpec& spec, const AdaptedPoint& pt);
// Full original metric diag(G_AB(Q), G_ab).
Mat total_metric(const ModelSpec& spec, const Vec& Q);

// Random sampling of points on the declared charts.
template <class Rng>
AdaptedPoint random_point(const ModelSpec& spec, Rng& rng);

// Audit residuals (max-abs), derivatives by central differences with step h.
// G(Q) - F'(Q,g)^T G(F(Q,g)) F'(Q,g)
double isometry_residual_P(const ModelSpec& spec, const Vec& Q, const GroupElement& g, double h = 1e-4);
// G_V - Dbar(g)^T G_V Dbar(g)
double isometry_residual_V(const ModelSpec& spec, const GroupElement& g);
// Lie derivative of G_P along the Killing field K_alpha
double killing_residual(const ModelSpec& spec, const Vec& Q, int alpha, double h = 1e-4);
// Relative deviation of the adapted metric from the pullback of diag(G_P, G_V)
double pullback_residual(const ModelSpec& spec, const AdaptedPoint& pt, double h = 1e-4);

Mat sym_sqrt(const Mat& A, double floor = -1e-9);
Mat sym_inv_sqrt(const Mat& A);

}  // namespace bred

#include "bred/geometry_sampling.hpp"
