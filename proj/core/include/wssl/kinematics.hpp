#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wssl {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using JointConfig = Eigen::VectorXd;

/**
 * One standard (distal) Denavit-Hartenberg row of an all-revolute joint.
 * The joint variable q is added to theta_offset when the transform is built:
 *   T = Rz(theta_offset + q) * Transz(d) * Transx(a) * Rotx(alpha)
 */
struct DHRow {
  double theta_offset = 0.0;
  double d = 0.0;
  double a = 0.0;
  double alpha = 0.0;
};

/// Serial-link all-revolute manipulator as an ordered list of DH rows.
class Manipulator {
 public:
  Manipulator() = default;
  explicit Manipulator(std::vector<DHRow> rows);

  int dof() const { return static_cast<int>(rows_.size()); }
  const std::vector<DHRow>& rows() const { return rows_; }
  const DHRow& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }

  /// Sum of |a_i| + |d_i|; no position farther from the base is attainable.
  double reach_bound() const;

  /// Plain-text table, one row per line: theta_offset d a alpha.
  static Manipulator parse_dh_table(std::istream& in);
  static Manipulator parse_dh_table(const std::string& text);
  std::string format_dh_table() const;

 private:
  std::vector<DHRow> rows_;
};

/// Rigid-body pose: position plus orthonormal rotation.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  /// R'R = I and det(R) = +1, both within tol.
  bool is_valid(double tol = 1e-9) const;
};

/// Settings for the damped-least-squares inverse kinematics loop.
struct IKSettings {
  double tolerance = 1e-4;
  double lambda0 = 0.1;
  int max_rejections = 50;
  int max_iterations = 500;
  /// Starting configuration; empty means all zeros.
  JointConfig q0;
  /// Per-axis weights on the differential motion (x y z rx ry rz).
  /// All ones solves the full pose; zeroing the rotational entries solves
  /// position only, which is required for arms with fewer than 6 DOF.
  std::array<double, 6> mask = {1, 1, 1, 1, 1, 1};

  void validate() const;  // throws ValidationError
};

/// Homogeneous transform of one DH row at joint angle q_i.
Eigen::Matrix4d dh_transform(const DHRow& row, double q_i);

/// Pose of the end effector; throws std::invalid_argument on a dof mismatch.
Pose forward_kinematics(const Manipulator& m, const JointConfig& q);

/// Rotation from roll-pitch-yaw angles: R = Rx(r) * Ry(p) * Rz(y).
Eigen::Matrix3d rpy_to_rotation(const Eigen::Vector3d& rpy);

/// Geometric Jacobian in the base frame, 6 x dof.
/// Column i is [z_{i-1} x (p_e - p_{i-1}); z_{i-1}].
Eigen::MatrixXd jacobian(const Manipulator& m, const JointConfig& q);

/// First-order pose error: translation difference stacked on the
/// vex of the skew-symmetric part of R_target * R_current'.
Vector6d differential_motion(const Pose& current, const Pose& target);

/// Per-accept diagnostics of one inverse_kinematics call.
struct IKTrace {
  std::vector<double> accepted_error_norms;
  int iterations = 0;
};

/**
 * Damped-least-squares inverse kinematics.
 *
 * Iterates dq = (J'J + lambda^2 I)^{-1} J' e from settings.q0, halving
 * lambda on improvement and doubling it otherwise; gives up after
 * max_rejections consecutive non-improving steps or max_iterations
 * iterations. Returns a configuration whose masked differential-motion
 * norm is within tolerance, or nullopt. A nullopt is a value (the target
 * is taken to be unreachable by this procedure), not an error.
 */
std::optional<JointConfig> inverse_kinematics(const Manipulator& m,
                                              const Pose& target,
                                              const IKSettings& settings,
                                              IKTrace* trace = nullptr);

}  // namespace wssl
