#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace bred {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

enum class GroupKind { U1, SU2 };

// A group element: an angle for U(1), a unit quaternion for SU(2).
// SU(2) canonical coordinates a use the basis e_k = (i, j, k)/2, so that
// exp(a.e) has rotation angle |a| and [e_1, e_2] = e_3.
struct GroupElement {
  GroupKind kind = GroupKind::U1;
  double theta = 0.0;
  Quat q = Quat::Identity();

  static GroupElement identity(GroupKind k);
  static GroupElement from_coords(GroupKind k, const Vec& a);
  Vec coords() const;
  int dim() const { return kind == GroupKind::U1 ? 1 : 3; }
  GroupElement operator*(const GroupElement& o) const;
  GroupElement inverse() const;
  void normalize();
};

double wrap_angle(double t);

Mat3 hat(const Vec3& v);
Quat su2_exp(const Vec3& a);
Vec3 su2_log(const Quat& q);
// Rotation R(q) v = q v q*.
Mat3 su2_adjoint(const Quat& q);
// exp(a + delta) = exp(J_l(a) delta) exp(a) to first order.
Mat3 left_jacobian(const Vec3& a);
Mat3 right_jacobian(const Vec3& a);

// u(a) and v(a) = u(a)^{-1}; v = d(b a)/db at b = e in canonical coordinates.
Mat group_u(const GroupElement& a);
Mat group_v(const GroupElement& a);
// Velocity of t -> a exp(t e_beta) in canonical coordinates, columns beta.
Mat right_action_generators(const GroupElement& a);

// Chart radius for SU(2) canonical coordinates.
inline constexpr double kSu2ChartRadius = 1.5;

}  // namespace bred
