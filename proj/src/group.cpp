#include "bred/group.hpp"

#include <cmath>

#include "bred/errors.hpp"

namespace bred {

double wrap_angle(double t) {
  double r = std::remainder(t, 2.0 * M_PI);
  if (r <= -M_PI) r += 2.0 * M_PI;
  return r;
}

GroupElement GroupElement::identity(GroupKind k) {
  GroupElement g;
  g.kind = k;
  return g;
}

GroupElement GroupElement::from_coords(GroupKind k, const Vec& a) {
  GroupElement g;
  g.kind = k;
  if (k == GroupKind::U1) {
    g.theta = wrap_angle(a(0));
  } else {
    g.q = su2_exp(Vec3(a(0), a(1), a(2)));
  }
  return g;
}

Vec GroupElement::coords() const {
  if (kind == GroupKind::U1) {
    Vec a(1);
    a(0) = theta;
    return a;
  }
  Vec3 v = su2_log(q);
  return Vec(v);
}

GroupElement GroupElement::operator*(const GroupElement& o) const {
  GroupElement g;
  g.kind = kind;
  if (kind == GroupKind::U1) {
    g.theta = wrap_angle(theta + o.theta);
  } else {
    g.q = (q * o.q).normalized();
  }
  return g;
}

GroupElement GroupElement::inverse() const {
  GroupElement g;
  g.kind = kind;
  if (kind == GroupKind::U1) {
    g.theta = wrap_angle(-theta);
  } else {
    g.q = q.conjugate();
  }
  return g;
}

void GroupElement::normalize() {
  if (kind == GroupKind::U1) {
    theta = wrap_angle(theta);
  } else {
    q.normalize();
  }
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0, -v(2), v(1), v(2), 0, -v(0), -v(1), v(0), 0;
  return m;
}

Quat su2_exp(const Vec3& a) {
  double th = a.norm();
  if (th < 1e-300) return Quat::Identity();
  double s = std::sin(0.5 * th) / th;
  return Quat(std::cos(0.5 * th), s * a(0), s * a(1), s * a(2));
}

Vec3 su2_log(const Quat& q) {
  Vec3 v(q.x(), q.y(), q.z());
  double sv = v.norm();
  double th = 2.0 * std::atan2(sv, q.w());
  if (sv < 1e-300) return Vec3::Zero();
  return v * (th / sv);
}

Mat3 su2_adjoint(const Quat& q) { return q.normalized().toRotationMatrix(); }

Mat3 left_jacobian(const Vec3& a) {
  double th = a.norm();
  Mat3 K = hat(a);
  if (th < 1e-6) return Mat3::Identity() + 0.5 * K + (1.0 / 6.0) * K * K;
  double th2 = th * th;
  return Mat3::Identity() + (1.0 - std::cos(th)) / th2 * K + (th - std::sin(th)) / (th2 * th) * K * K;
}

Mat3 right_jacobian(const Vec3& a) { return left_jacobian(-a); }

namespace {
Vec3 su2_coords_checked(const GroupElement& a) {
  Vec3 c = su2_log(a.q);
  if (c.norm() > kSu2ChartRadius + 1e-12) throw ChartError("group element outside the canonical SU(2) chart");
  return c;
}
}  // namespace

Mat group_u(const GroupElement& a) {
  if (a.kind == GroupKind::U1) return Mat::Identity(1, 1);
  return left_jacobian(su2_coords_checked(a));
}

Mat group_v(const GroupElement& a) {
  if (a.kind == GroupKind::U1) return Mat::Identity(1, 1);
  return left_jacobian(su2_coords_checked(a)).inverse();
}

Mat right_action_generators(const GroupElement& a) {
  if (a.kind == GroupKind::U1) return Mat::Identity(1, 1);
  return right_jacobian(su2_coords_checked(a)).inverse();
}

}  // namespace bred
