#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "wssl/errors.hpp"
#include "wssl/rng.hpp"
#include "wssl/workspace.hpp"

using namespace wssl;
using std::numbers::pi;

namespace {

Scope cow_cube(double half, double delta,
               const Eigen::Vector3d& n_i = Eigen::Vector3d::Zero()) {
  return build_scope({-half, -half, -half}, {half, half, half},
                     {delta, delta, delta}, n_i,
                     WorkspaceMode::ConstantOrientation);
}

}  // namespace

TEST_CASE("build_scope node counts match the coordinate-mapping table") {
  CHECK(cow_cube(1, 1).node_count() == 27);      // 3 per axis
  CHECK(cow_cube(1, 0.5).node_count() == 125);   // 5 per axis
  CHECK(cow_cube(1, 0.1).node_count() == 9261);  // 21 per axis
  const Scope single = build_scope({0, 0, 0}, {0, 0, 0}, {1, 1, 1},
                                   {0, 0, 0}, WorkspaceMode::ConstantOrientation);
  CHECK(single.node_count() == 1);
}

TEST_CASE("build_scope spacing is exact and the grid is increasing") {
  const Scope s = cow_cube(1, 0.1);
  REQUIRE(s.lx() == 21);
  for (int i = 0; i + 1 < s.lx(); ++i) {
    CHECK(s.nx[i + 1] - s.nx[i] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(s.nx[i + 1] > s.nx[i]);
  }
  CHECK(s.nx[0] == -1.0);
  CHECK(s.nx[20] == doctest::Approx(1.0));
}

TEST_CASE("build_scope rejects bad inputs") {
  CHECK_THROWS_AS(build_scope({-1, -1, -1}, {1, 1, 1}, {0, 1, 1}, {0, 0, 0},
                              WorkspaceMode::ConstantOrientation),
                  ValidationError);
  CHECK_THROWS_AS(build_scope({1, 0, 0}, {-1, 1, 1}, {1, 1, 1}, {0, 0, 0},
                              WorkspaceMode::ConstantOrientation),
                  ValidationError);
}

TEST_CASE("node_pose constant-orientation corner and identity rotation") {
  const Scope s = cow_cube(1, 1);
  const Pose corner = node_pose(s, 1, 1, 1);
  CHECK(corner.position.x() == doctest::Approx(-1));
  CHECK(corner.position.y() == doctest::Approx(-1));
  CHECK(corner.position.z() == doctest::Approx(-1));
  CHECK((corner.rotation - Eigen::Matrix3d::Identity()).norm() ==
        doctest::Approx(0));

  const Scope tilted = cow_cube(1, 1, {0.3, -0.2, 0.9});
  const Pose node = node_pose(tilted, 2, 3, 1);
  CHECK((node.rotation - rpy_to_rotation({0.3, -0.2, 0.9})).norm() ==
        doctest::Approx(0));
  CHECK_THROWS_AS(node_pose(s, 4, 1, 1), std::out_of_range);
  CHECK_THROWS_AS(node_pose(s, 1, 0, 1), std::out_of_range);
}

TEST_CASE("node_pose orientation-workspace center node") {
  const Scope s = build_scope({-pi, -pi, -pi}, {pi, pi, pi},
                              {pi / 3, pi / 3, pi / 3}, {0.4, 0.1, 0.2},
                              WorkspaceMode::Orientation);
  REQUIRE(s.lx() == 7);
  const Pose center = node_pose(s, 4, 4, 4);
  CHECK((center.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-15);
  CHECK(center.position.x() == doctest::Approx(0.4));
  CHECK(center.position.y() == doctest::Approx(0.1));
  CHECK(center.position.z() == doctest::Approx(0.2));
}

TEST_CASE("discretize_workspace on a stubby arm keeps at most the origin") {
  const Manipulator stub({{0, 0, 0.1, 0}});
  const BitTensor bits = discretize_workspace(stub, cow_cube(1, 0.5), IKSettings{});
  for (int i = 1; i <= 5; ++i) {
    for (int j = 1; j <= 5; ++j) {
      for (int k = 1; k <= 5; ++k) {
        const Eigen::Vector3d p(-1 + 0.5 * (i - 1), -1 + 0.5 * (j - 1),
                                -1 + 0.5 * (k - 1));
        if (p.norm() > 0.1 + 1e-4) CHECK(bits.at(i, j, k) == 0);
      }
    }
  }
}

TEST_CASE("discretize_workspace single unreachable node is all zero") {
  const Manipulator stub({{0, 0, 0.1, 0}});
  const Scope s = build_scope({2, 2, 2}, {2, 2, 2}, {1, 1, 1}, {0, 0, 0},
                              WorkspaceMode::ConstantOrientation);
  const BitTensor bits = discretize_workspace(stub, s, IKSettings{});
  CHECK(bits.size() == 1);
  CHECK(bits.at(1, 1, 1) == 0);
}

TEST_CASE("discretize_workspace planar 2R matches the annulus indicator") {
  const Manipulator flat({{0, 0, 1, 0}, {0, 0, 1, 0}});
  const Scope s = build_scope({-2.2, -2.2, 0}, {2.2, 2.2, 0}, {0.2, 0.2, 0.2},
                              {0, 0, 0}, WorkspaceMode::ConstantOrientation);
  IKSettings ik;
  ik.mask = {1, 1, 1, 0, 0, 0};  // underactuated arm: solve position only
  const BitTensor bits = discretize_workspace(flat, s, ik);

  int agree = 0, total = 0;
  for (int i = 1; i <= s.lx(); ++i) {
    for (int j = 1; j <= s.ly(); ++j) {
      const Pose node = node_pose(s, i, j, 1);
      const bool inside = oracles::annulus_contains(1, 1, node.position);
      agree += (bits.at(i, j, 1) != 0) == inside;
      ++total;
    }
  }
  CHECK(total == 23 * 23);
  CHECK(static_cast<double>(agree) / total >= 0.98);
}

TEST_CASE("discretize_workspace is independent of the thread count") {
  Rng rng(3);
  const Manipulator arm({{0, 0.1, 0.3, pi / 2}, {0, 0, 0.4, 0}, {0, 0.2, 0.2, -pi / 2}});
  const Scope s = cow_cube(0.8, 0.4);
  const BitTensor serial = discretize_workspace(arm, s, IKSettings{}, 1);
  const BitTensor parallel = discretize_workspace(arm, s, IKSettings{}, 8);
  CHECK(serial == parallel);
}

TEST_CASE("reach-bound pre-filter never changes the output") {
  Rng rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<DHRow> rows;
    const int joints = 2 + static_cast<int>(rng.below(3));
    for (int i = 0; i < joints; ++i) {
      rows.push_back({0, rng.uniform(0, 0.3), rng.uniform(0, 0.3),
                      rng.uniform(-pi / 2, pi / 2)});
    }
    const Manipulator arm{rows};
    const Scope s = cow_cube(0.9, 0.45);
    const BitTensor with = discretize_workspace(arm, s, IKSettings{}, 1, true);
    const BitTensor without = discretize_workspace(arm, s, IKSettings{}, 1, false);
    CHECK(with == without);
  }
}

TEST_CASE("scaling the manipulator and scope scales the workspace") {
  // Exact on the position-only lane when lambda0 and the tolerance scale too.
  Rng rng(29);
  for (int trial = 0; trial < 4; ++trial) {
    const double scale = rng.uniform(0.3, 3.0);
    std::vector<DHRow> rows, scaled_rows;
    const int joints = 3;
    for (int i = 0; i < joints; ++i) {
      DHRow r{0, rng.uniform(0, 0.4), rng.uniform(0.05, 0.4),
              rng.uniform(-pi / 2, pi / 2)};
      rows.push_back(r);
      scaled_rows.push_back({r.theta_offset, scale * r.d, scale * r.a, r.alpha});
    }
    IKSettings ik;
    ik.mask = {1, 1, 1, 0, 0, 0};
    IKSettings scaled_ik = ik;
    scaled_ik.tolerance = ik.tolerance * scale;
    scaled_ik.lambda0 = ik.lambda0 * scale;

    const Scope s = cow_cube(0.8, 0.4);
    const Scope scaled_scope =
        build_scope(scale * s.range_min, scale * s.range_max, scale * s.delta,
                    s.fixed, s.mode);
    const BitTensor base = discretize_workspace(Manipulator{rows}, s, ik);
    const BitTensor scaled =
        discretize_workspace(Manipulator{scaled_rows}, scaled_scope, scaled_ik);
    CHECK(base == scaled);
  }
}

TEST_CASE("flatten order puts k innermost") {
  BitTensor t(2, 2, 2);
  t.set(1, 1, 1, true);
  std::vector<std::uint8_t> y = flatten(t);
  CHECK(y == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 0, 0, 0});

  BitTensor t2(2, 2, 2);
  t2.set(1, 1, 2, true);
  y = flatten(t2);
  CHECK(y[1] == 1);
  CHECK(std::count(y.begin(), y.end(), 1) == 1);
}

TEST_CASE("flatten and unflatten are inverse for every small shape") {
  Rng rng(41);
  for (int lx = 1; lx <= 8; ++lx) {
    for (int ly = 1; ly <= 8; ++ly) {
      for (int lz = 1; lz <= 8; ++lz) {
        BitTensor t(lx, ly, lz);
        for (auto& b : t.raw()) b = rng.below(2) ? 1 : 0;
        CHECK(unflatten(flatten(t), lx, ly, lz) == t);
      }
    }
  }
  CHECK_THROWS_AS(unflatten(std::vector<std::uint8_t>(7), 2, 2, 2),
                  ValidationError);
}

TEST_CASE("slice_output uses 1-based inclusive bounds") {
  std::vector<std::uint8_t> y(9261);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (i * 7) % 2;
  const auto middle = slice_output(y, 5293, 6615);
  CHECK(middle.size() == 1323);
  CHECK(middle.front() == y[5292]);
  CHECK(middle.back() == y[6614]);

  CHECK(slice_output(y, 1, 1) == std::vector<std::uint8_t>{y[0]});
  CHECK(slice_output(y, 1, y.size()) == y);
  CHECK_THROWS_AS(slice_output(y, 0, 5), std::out_of_range);
  CHECK_THROWS_AS(slice_output(y, 5, 4), std::out_of_range);
  CHECK_THROWS_AS(slice_output(y, 1, y.size() + 1), std::out_of_range);
}

TEST_CASE("bit tensor text and csv exports") {
  BitTensor t(1, 2, 2);
  t.set(1, 1, 2, true);
  std::ostringstream bits;
  write_bits_text(t, bits);
  CHECK(bits.str() == "0100\n");

  const Scope s = build_scope({0, 0, 0}, {0, 1, 1}, {1, 1, 1}, {0, 0, 0},
                              WorkspaceMode::ConstantOrientation);
  std::ostringstream csv;
  write_point_cloud_csv(t, s, csv);
  CHECK(csv.str() ==
        "x,y,z,bit\n0,0,0,0\n0,0,1,1\n0,1,0,0\n0,1,1,0\n");

  const Scope ow = build_scope({0, 0, 0}, {0, 1, 1}, {1, 1, 1}, {0, 0, 0},
                               WorkspaceMode::Orientation);
  std::ostringstream ow_csv;
  write_point_cloud_csv(t, ow, ow_csv);
  CHECK(ow_csv.str().substr(0, 19) == "roll,pitch,yaw,bit\n");
}
