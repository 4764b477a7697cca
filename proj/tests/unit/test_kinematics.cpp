#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "wssl/errors.hpp"
#include "wssl/kinematics.hpp"
#include "wssl/rng.hpp"

using namespace wssl;
using std::numbers::pi;

namespace {

Manipulator planar_2r(double a1 = 1.0, double a2 = 1.0) {
  return Manipulator({{0, 0, a1, 0}, {0, 0, a2, 0}});
}

Manipulator spherical_wrist(double d1, double d2, double a1, double a2) {
  return Manipulator({{0, 0, 0, pi / 2},
                      {0, 0, a1, 0},
                      {0, d1, a2, -pi / 2},
                      {0, d2, 0, pi / 2},
                      {0, 0, 0, -pi / 2},
                      {0, 0, 0, 0}});
}

Manipulator random_wrist(Rng& rng) {
  return spherical_wrist(rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5),
                         rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5));
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("dh_transform identity case") {
  const Eigen::Matrix4d t = dh_transform({0, 0, 0, 0}, 0);
  CHECK(max_abs_diff(t, Eigen::Matrix4d::Identity()) == doctest::Approx(0));
}

TEST_CASE("dh_transform pure link length translates along x") {
  const Eigen::Matrix4d t = dh_transform({0, 0, 1, 0}, 0);
  CHECK(t(0, 3) == doctest::Approx(1));
  CHECK(t(1, 3) == doctest::Approx(0));
  CHECK(t(2, 3) == doctest::Approx(0));
  CHECK(max_abs_diff(t.block<3, 3>(0, 0), Eigen::Matrix3d::Identity()) ==
        doctest::Approx(0));
}

TEST_CASE("dh_transform matches the elementary-transform product") {
  // Frozen from the symbolic product Rz(pi/2) Tz(0.5) Tx(0) Rx(pi/2).
  Eigen::Matrix4d expected;
  expected << 0, 0, 1, 0,
              1, 0, 0, 0,
              0, 1, 0, 0.5,
              0, 0, 0, 1;
  const DHRow row{0, 0.5, 0, pi / 2};
  const Eigen::Matrix4d t = dh_transform(row, pi / 2);
  CHECK(max_abs_diff(t, expected) < 1e-15);
  CHECK(max_abs_diff(t, oracles::dh_product(pi / 2, 0.5, 0, pi / 2)) < 1e-15);

  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const DHRow r{rng.uniform(-pi, pi), rng.uniform(-1, 1), rng.uniform(-1, 1),
                  rng.uniform(-pi, pi)};
    const double q = rng.uniform(-pi, pi);
    CHECK(max_abs_diff(dh_transform(r, q),
                       oracles::dh_product(r.theta_offset + q, r.d, r.a,
                                           r.alpha)) < 1e-14);
  }
}

TEST_CASE("forward_kinematics trivial cases") {
  const Manipulator zero({{0, 0, 0, 0}, {0, 0, 0, 0}});
  const Pose identity = forward_kinematics(zero, Eigen::Vector2d::Zero());
  CHECK(identity.position.norm() == doctest::Approx(0));
  CHECK(max_abs_diff(identity.rotation, Eigen::Matrix3d::Identity()) ==
        doctest::Approx(0));

  const Pose stretched = forward_kinematics(planar_2r(), Eigen::Vector2d::Zero());
  CHECK(stretched.position.x() == doctest::Approx(2));
  CHECK(stretched.position.y() == doctest::Approx(0));
  CHECK(stretched.position.z() == doctest::Approx(0));
}

TEST_CASE("forward_kinematics spherical wrist matches the chain oracle") {
  const Manipulator m = spherical_wrist(0.3, 0.3, 0.3, 0.3);
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(6);
  const Pose pose = forward_kinematics(m, q);
  // Frozen from the independent matrix-product oracle.
  CHECK(pose.position.x() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(pose.position.y() == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(pose.position.z() == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(max_abs_diff(pose.rotation, Eigen::Matrix3d::Identity()) < 1e-15);

  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Manipulator arm = random_wrist(rng);
    Eigen::VectorXd joints(6);
    for (int i = 0; i < 6; ++i) joints[i] = rng.uniform(-pi, pi);
    const Pose got = forward_kinematics(arm, joints);
    const Eigen::Matrix4d want = oracles::fk_chain(arm, joints);
    CHECK(max_abs_diff(got.rotation, want.block<3, 3>(0, 0)) < 1e-12);
    CHECK((got.position - want.block<3, 1>(0, 3)).norm() < 1e-12);
  }
}

TEST_CASE("forward_kinematics rejects a dof mismatch") {
  CHECK_THROWS_AS(forward_kinematics(planar_2r(), Eigen::Vector3d::Zero()),
                  std::invalid_argument);
}

TEST_CASE("FK rotation block stays orthonormal") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const Manipulator arm = random_wrist(rng);
    Eigen::VectorXd q(6);
    for (int i = 0; i < 6; ++i) q[i] = rng.uniform(-2 * pi, 2 * pi);
    const Pose pose = forward_kinematics(arm, q);
    CHECK(pose.is_valid(1e-9));
  }
}

TEST_CASE("rpy_to_rotation") {
  CHECK(max_abs_diff(rpy_to_rotation({0, 0, 0}), Eigen::Matrix3d::Identity()) ==
        doctest::Approx(0));

  const Eigen::Matrix3d half_turn = rpy_to_rotation({pi, 0, 0});
  Eigen::Matrix3d expected = Eigen::Vector3d(1, -1, -1).asDiagonal();
  CHECK(max_abs_diff(half_turn, expected) < 1e-15);

  const Eigen::Vector3d rpy(0.3, -1.1, 2.0);
  const Eigen::Matrix3d r = rpy_to_rotation(rpy);
  CHECK(max_abs_diff(r.transpose() * r, Eigen::Matrix3d::Identity()) < 1e-12);
  CHECK(r.determinant() == doctest::Approx(1).epsilon(1e-12));
  const Eigen::Matrix3d want = (oracles::rot_x(rpy[0]) * oracles::rot_y(rpy[1]) *
                                oracles::rot_z(rpy[2]))
                                   .block<3, 3>(0, 0);
  CHECK(max_abs_diff(r, want) < 1e-15);
}

TEST_CASE("jacobian of a single link about z") {
  const Manipulator one_r({{0, 0, 1, 0}});
  const Eigen::MatrixXd j = jacobian(one_r, Eigen::VectorXd::Zero(1));
  Eigen::VectorXd expected(6);
  expected << 0, 1, 0, 0, 0, 1;
  CHECK(max_abs_diff(j, expected) < 1e-15);
}

TEST_CASE("jacobian linear block matches central finite differences") {
  const Manipulator flat = planar_2r();
  const Eigen::MatrixXd j0 = jacobian(flat, Eigen::Vector2d::Zero());
  CHECK(max_abs_diff(j0.topRows(3),
                     oracles::position_jacobian_fd(flat, Eigen::Vector2d::Zero())) <
        1e-6);

  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Manipulator arm = random_wrist(rng);
    Eigen::VectorXd q(6);
    for (int i = 0; i < 6; ++i) q[i] = rng.uniform(-pi, pi);
    const Eigen::MatrixXd j = jacobian(arm, q);
    const Eigen::MatrixXd fd = oracles::position_jacobian_fd(arm, q);
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    CHECK(max_abs_diff(j.topRows(3), fd) / scale < 1e-5);
  }
}

TEST_CASE("differential_motion") {
  Pose a, b;
  CHECK(differential_motion(a, a).norm() == doctest::Approx(0));

  b.position << 0.1, 0, 0;
  Vector6d e = differential_motion(a, b);
  CHECK((e - (Vector6d() << 0.1, 0, 0, 0, 0, 0).finished()).norm() ==
        doctest::Approx(0));

  const double eps = 1e-4;
  Pose c;
  c.rotation = rpy_to_rotation({0, 0, eps});
  e = differential_motion(a, c);
  CHECK(e.head<3>().norm() == doctest::Approx(0));
  CHECK(std::abs(e[5] - eps) < 1e-8);
  CHECK(std::abs(e[3]) < 1e-8);
  CHECK(std::abs(e[4]) < 1e-8);
}

TEST_CASE("inverse_kinematics returns the start when already at the target") {
  const Manipulator arm = spherical_wrist(0.3, 0.3, 0.3, 0.3);
  Eigen::VectorXd q0(6);
  q0 << 0.3, -0.2, 0.5, 0.1, 0.4, -0.6;
  IKSettings settings;
  settings.q0 = q0;
  const Pose target = forward_kinematics(arm, q0);
  const auto result = inverse_kinematics(arm, target, settings);
  REQUIRE(result.has_value());
  CHECK((*result - q0).norm() == doctest::Approx(0));
}

TEST_CASE("inverse_kinematics reports no solution outside the reach bound") {
  const Manipulator flat = planar_2r();
  Pose target;
  target.position << 3, 0, 0;
  CHECK_FALSE(inverse_kinematics(flat, target, IKSettings{}).has_value());

  // Reach-bound property: targets past reach + tolerance always fail.
  Rng rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const Manipulator arm = random_wrist(rng);
    Pose far;
    const double radius = arm.reach_bound() + 1e-4 + rng.uniform(0.01, 1.0);
    Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
    far.position = radius * dir.normalized();
    CHECK_FALSE(inverse_kinematics(arm, far, IKSettings{}).has_value());
  }
}

TEST_CASE("inverse_kinematics round-trips random reachable poses") {
  Rng rng(5);
  int solved = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    const Manipulator arm = random_wrist(rng);
    Eigen::VectorXd q_star(6);
    for (int i = 0; i < 6; ++i) q_star[i] = rng.uniform(-pi, pi);
    const Pose target = forward_kinematics(arm, q_star);
    IKSettings settings;
    const auto q = inverse_kinematics(arm, target, settings);
    if (!q.has_value()) continue;
    ++solved;
    const double err =
        differential_motion(forward_kinematics(arm, *q), target).norm();
    CHECK(err <= settings.tolerance);  // IK soundness
  }
  CHECK(solved >= 99 * trials / 100);
}

TEST_CASE("inverse_kinematics accepted errors decrease strictly") {
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    const Manipulator arm = random_wrist(rng);
    Eigen::VectorXd q_star(6);
    for (int i = 0; i < 6; ++i) q_star[i] = rng.uniform(-pi, pi);
    IKTrace trace;
    inverse_kinematics(arm, forward_kinematics(arm, q_star), IKSettings{},
                       &trace);
    for (std::size_t i = 1; i < trace.accepted_error_norms.size(); ++i) {
      CHECK(trace.accepted_error_norms[i] < trace.accepted_error_norms[i - 1]);
    }
  }
}

TEST_CASE("ik settings are validated") {
  IKSettings bad;
  bad.tolerance = 0;
  CHECK_THROWS_AS(inverse_kinematics(planar_2r(), Pose{}, bad), ValidationError);
  bad = IKSettings{};
  bad.lambda0 = -1;
  CHECK_THROWS_AS(inverse_kinematics(planar_2r(), Pose{}, bad), ValidationError);
}

TEST_CASE("manipulator DH table round-trips through text") {
  const Manipulator arm = spherical_wrist(0.25, 0.17, 0.31, 0.09);
  const Manipulator back = Manipulator::parse_dh_table(arm.format_dh_table());
  REQUIRE(back.dof() == arm.dof());
  for (int i = 0; i < arm.dof(); ++i) {
    CHECK(back.row(i).theta_offset == arm.row(i).theta_offset);
    CHECK(back.row(i).d == arm.row(i).d);
    CHECK(back.row(i).a == arm.row(i).a);
    CHECK(back.row(i).alpha == arm.row(i).alpha);
  }
  CHECK_THROWS_AS(Manipulator::parse_dh_table(std::string("0 0 1")),
                  ValidationError);
}

TEST_CASE("reach bound sums link offsets and lengths") {
  const Manipulator arm = spherical_wrist(0.3, 0.3, 0.3, 0.3);
  CHECK(arm.reach_bound() == doctest::Approx(1.2));
  CHECK(planar_2r(1, 0.5).reach_bound() == doctest::Approx(1.5));
}
