#include "wssl/kinematics.hpp"

#include <cassert>
#include <cmath>
#include <sstream>

#include "wssl/errors.hpp"

namespace wssl {

namespace {

void require_dof(const Manipulator& m, const JointConfig& q) {
  if (q.size() != m.dof()) {
    throw std::invalid_argument("joint vector has " + std::to_string(q.size()) +
                                " entries, manipulator has " +
                                std::to_string(m.dof()) + " joints");
  }
}

/// Base-frame origins and z axes of every joint frame plus the end effector.
struct FrameChain {
  std::vector<Eigen::Vector3d> origin;  // origin[i] = p_{i-1}, origin[n] = p_e
  std::vector<Eigen::Vector3d> z_axis;  // z_axis[i] = z_{i-1}
  Eigen::Matrix3d end_rotation;
};

FrameChain frame_chain(const Manipulator& m, const JointConfig& q) {
  FrameChain c;
  const int n = m.dof();
  c.origin.reserve(static_cast<std::size_t>(n) + 1);
  c.z_axis.reserve(static_cast<std::size_t>(n));
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (int i = 0; i < n; ++i) {
    c.origin.push_back(t.block<3, 1>(0, 3));
    c.z_axis.push_back(t.block<3, 1>(0, 2));
    t = t * dh_transform(m.row(i), q[i]);
  }
  c.origin.push_back(t.block<3, 1>(0, 3));
  c.end_rotation = t.block<3, 3>(0, 0);
  return c;
}

}  // namespace

Manipulator::Manipulator(std::vector<DHRow> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw ValidationError("manipulator needs at least one DH row");
  for (const DHRow& r : rows_) {
    if (!std::isfinite(r.theta_offset) || !std::isfinite(r.d) ||
        !std::isfinite(r.a) || !std::isfinite(r.alpha)) {
      throw ValidationError("DH row has a non-finite entry");
    }
  }
}

double Manipulator::reach_bound() const {
  double reach = 0.0;
  for (const DHRow& r : rows_) reach += std::abs(r.a) + std::abs(r.d);
  return reach;
}

Manipulator Manipulator::parse_dh_table(std::istream& in) {
  std::vector<DHRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    DHRow r;
    if (ls >> r.theta_offset) {
      if (!(ls >> r.d >> r.a >> r.alpha)) {
        throw ValidationError("DH table row needs 4 values: " + line);
      }
      rows.push_back(r);
    }
  }
  return Manipulator(std::move(rows));
}

Manipulator Manipulator::parse_dh_table(const std::string& text) {
  std::istringstream in(text);
  return parse_dh_table(in);
}

std::string Manipulator::format_dh_table() const {
  std::ostringstream out;
  out.precision(17);
  for (const DHRow& r : rows_) {
    out << r.theta_offset << ' ' << r.d << ' ' << r.a << ' ' << r.alpha << '\n';
  }
  return out.str();
}

bool Pose::is_valid(double tol) const {
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol &&
         position.allFinite();
}

void IKSettings::validate() const {
  if (!(tolerance > 0)) throw ValidationError("ik.tolerance must be > 0");
  if (!(lambda0 > 0)) throw ValidationError("ik.lambda0 must be > 0");
  if (max_rejections < 1) throw ValidationError("ik.max_rejections must be >= 1");
  if (max_iterations < 1) throw ValidationError("ik.max_iterations must be >= 1");
  for (double w : mask) {
    if (!std::isfinite(w) || w < 0) throw ValidationError("ik.mask entries must be finite and >= 0");
  }
}

Eigen::Matrix4d dh_transform(const DHRow& row, double q_i) {
  const double ct = std::cos(row.theta_offset + q_i);
  const double st = std::sin(row.theta_offset + q_i);
  const double ca = std::cos(row.alpha);
  const double sa = std::sin(row.alpha);
  Eigen::Matrix4d t;
  t << ct, -st * ca,  st * sa, row.a * ct,
       st,  ct * ca, -ct * sa, row.a * st,
        0,       sa,       ca,      row.d,
        0,        0,        0,          1;
  return t;
}

Pose forward_kinematics(const Manipulator& m, const JointConfig& q) {
  require_dof(m, q);
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (int i = 0; i < m.dof(); ++i) t = t * dh_transform(m.row(i), q[i]);
  Pose pose;
  pose.position = t.block<3, 1>(0, 3);
  pose.rotation = t.block<3, 3>(0, 0);
  return pose;
}

Eigen::Matrix3d rpy_to_rotation(const Eigen::Vector3d& rpy) {
  return (Eigen::AngleAxisd(rpy[0], Eigen::Vector3d::UnitX()) *
          Eigen::AngleAxisd(rpy[1], Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(rpy[2], Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

Eigen::MatrixXd jacobian(const Manipulator& m, const JointConfig& q) {
  require_dof(m, q);
  const FrameChain chain = frame_chain(m, q);
  const Eigen::Vector3d& p_e = chain.origin.back();
  Eigen::MatrixXd j(6, m.dof());
  for (int i = 0; i < m.dof(); ++i) {
    const Eigen::Vector3d& z = chain.z_axis[static_cast<std::size_t>(i)];
    const Eigen::Vector3d& p = chain.origin[static_cast<std::size_t>(i)];
    j.block<3, 1>(0, i) = z.cross(p_e - p);
    j.block<3, 1>(3, i) = z;
  }
  return j;
}

Vector6d differential_motion(const Pose& current, const Pose& target) {
  Vector6d e;
  e.head<3>() = target.position - current.position;
  // Rotation error as the so(3) log of R_target * R_current'. Its norm is the
  // rotation angle, monotone on (0, pi), and it reduces to the first-order
  // skew extraction for small angles. The first-order form alone is not
  // usable inside the solver: its norm peaks at pi/2, so improving steps on
  // far targets read as regressions and the solve stalls.
  const Eigen::Matrix3d rel = target.rotation * current.rotation.transpose();
  Eigen::Vector3d vex(0.5 * (rel(2, 1) - rel(1, 2)),
                      0.5 * (rel(0, 2) - rel(2, 0)),
                      0.5 * (rel(1, 0) - rel(0, 1)));
  const double cos_theta =
      std::clamp(0.5 * (rel.trace() - 1.0), -1.0, 1.0);
  const double sin_theta = vex.norm();
  const double theta = std::atan2(sin_theta, cos_theta);
  if (sin_theta > 1e-9) {
    e.tail<3>() = (theta / sin_theta) * vex;
  } else if (cos_theta > 0) {
    e.tail<3>() = vex;  // theta ~ 0, vex is already theta * axis
  } else {
    // theta ~ pi: recover the axis from the symmetric part.
    Eigen::Vector3d axis;
    for (int i = 0; i < 3; ++i) {
      axis[i] = std::sqrt(std::max(0.0, 0.5 * (rel(i, i) + 1.0)));
    }
    if (axis[0] >= axis[1] && axis[0] >= axis[2]) {
      axis[1] = std::copysign(axis[1], rel(0, 1));
      axis[2] = std::copysign(axis[2], rel(0, 2));
    } else if (axis[1] >= axis[2]) {
      axis[0] = std::copysign(axis[0], rel(0, 1));
      axis[2] = std::copysign(axis[2], rel(1, 2));
    } else {
      axis[0] = std::copysign(axis[0], rel(0, 2));
      axis[1] = std::copysign(axis[1], rel(1, 2));
    }
    e.tail<3>() = theta * axis;
  }
  return e;
}

std::optional<JointConfig> inverse_kinematics(const Manipulator& m,
                                              const Pose& target,
                                              const IKSettings& settings,
                                              IKTrace* trace) {
  settings.validate();
  const int n = m.dof();
  JointConfig q;
  if (settings.q0.size() == 0) {
    q = JointConfig::Zero(n);
  } else {
    require_dof(m, settings.q0);
    q = settings.q0;
  }

  const Vector6d mask(settings.mask.data());
  const auto masked_error = [&](const JointConfig& joints) -> Vector6d {
    return mask.cwiseProduct(
        differential_motion(forward_kinematics(m, joints), target));
  };

  double lambda = settings.lambda0;
  Vector6d e = masked_error(q);
  double e_norm = e.norm();
  int rejections = 0;
  Eigen::MatrixXd j;
  bool j_stale = true;

  for (int iter = 0; iter <= settings.max_iterations; ++iter) {
    if (trace) trace->iterations = iter;
    if (e_norm <= settings.tolerance) {
      assert(masked_error(q).norm() <= settings.tolerance);
      return q;
    }
    if (j_stale) {
      j = mask.asDiagonal() * jacobian(m, q);
      j_stale = false;
    }
    Eigen::MatrixXd normal = j.transpose() * j;
    normal.diagonal().array() += lambda * lambda;
    const Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success) {
      throw std::logic_error("J'J + lambda^2 I not positive definite");
    }
    const JointConfig dq = llt.solve(j.transpose() * e);
    const JointConfig q_next = q + dq;
    const Vector6d e_next = masked_error(q_next);
    const double e_next_norm = e_next.norm();
    if (e_next_norm < e_norm) {
      q = q_next;
      e = e_next;
      e_norm = e_next_norm;
      lambda *= 0.5;
      rejections = 0;
      j_stale = true;
      if (trace) trace->accepted_error_norms.push_back(e_norm);
    } else {
      lambda *= 2.0;
      if (++rejections > settings.max_rejections) return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace wssl
