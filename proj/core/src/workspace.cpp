#include "wssl/workspace.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "parallel.hpp"
#include "wssl/errors.hpp"

namespace wssl {

namespace {

Eigen::VectorXd axis_coordinates(double lo, double hi, double step) {
  const int len = static_cast<int>(std::floor((hi - lo) / step + 0.5)) + 1;
  Eigen::VectorXd v(len);
  for (int i = 0; i < len; ++i) v[i] = lo + i * step;
  return v;
}

void node_coordinates(const Scope& scope, std::size_t flat,
                      Eigen::Vector3d& out) {
  const auto lz = static_cast<std::size_t>(scope.lz());
  const auto ly = static_cast<std::size_t>(scope.ly());
  const std::size_t k = flat % lz;
  const std::size_t j = (flat / lz) % ly;
  const std::size_t i = flat / (lz * ly);
  out << scope.nx[static_cast<Eigen::Index>(i)],
      scope.ny[static_cast<Eigen::Index>(j)],
      scope.nz[static_cast<Eigen::Index>(k)];
}

}  // namespace

BitTensor::BitTensor(int lx, int ly, int lz)
    : lx_(lx), ly_(ly), lz_(lz),
      bits_(static_cast<std::size_t>(lx) * static_cast<std::size_t>(ly) *
                static_cast<std::size_t>(lz),
            0) {
  if (lx < 1 || ly < 1 || lz < 1) {
    throw ValidationError("BitTensor dims must be >= 1");
  }
}

std::size_t BitTensor::index(int i, int j, int k) const {
  if (i < 1 || i > lx_ || j < 1 || j > ly_ || k < 1 || k > lz_) {
    throw std::out_of_range("BitTensor index (" + std::to_string(i) + "," +
                            std::to_string(j) + "," + std::to_string(k) +
                            ") outside " + std::to_string(lx_) + "x" +
                            std::to_string(ly_) + "x" + std::to_string(lz_));
  }
  return (static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(ly_) +
          static_cast<std::size_t>(j - 1)) *
             static_cast<std::size_t>(lz_) +
         static_cast<std::size_t>(k - 1);
}

Scope build_scope(const Eigen::Vector3d& range_min,
                  const Eigen::Vector3d& range_max,
                  const Eigen::Vector3d& delta,
                  const Eigen::Vector3d& fixed,
                  WorkspaceMode mode) {
  for (int axis = 0; axis < 3; ++axis) {
    if (!(delta[axis] > 0)) throw ValidationError("scope.delta must be > 0");
    if (range_max[axis] < range_min[axis]) {
      throw ValidationError("scope.max must be >= scope.min");
    }
  }
  if (!fixed.allFinite()) throw ValidationError("scope.fixed must be finite");
  Scope s;
  s.nx = axis_coordinates(range_min[0], range_max[0], delta[0]);
  s.ny = axis_coordinates(range_min[1], range_max[1], delta[1]);
  s.nz = axis_coordinates(range_min[2], range_max[2], delta[2]);
  s.fixed = fixed;
  s.mode = mode;
  s.range_min = range_min;
  s.range_max = range_max;
  s.delta = delta;
  return s;
}

Pose node_pose(const Scope& scope, int i, int j, int k) {
  if (i < 1 || i > scope.lx() || j < 1 || j > scope.ly() || k < 1 ||
      k > scope.lz()) {
    throw std::out_of_range("scope node index out of range");
  }
  const Eigen::Vector3d node(scope.nx[i - 1], scope.ny[j - 1], scope.nz[k - 1]);
  Pose pose;
  if (scope.mode == WorkspaceMode::ConstantOrientation) {
    pose.position = node;
    pose.rotation = rpy_to_rotation(scope.fixed);
  } else {
    pose.position = scope.fixed;
    pose.rotation = rpy_to_rotation(node);
  }
  return pose;
}

BitTensor discretize_workspace(const Manipulator& m, const Scope& scope,
                               const IKSettings& ik, int threads,
                               bool use_reach_prefilter) {
  ik.validate();
  BitTensor tensor(scope.lx(), scope.ly(), scope.lz());
  const double reach_cutoff = m.reach_bound() + ik.tolerance;
  const Eigen::Matrix3d fixed_rotation = rpy_to_rotation(scope.fixed);
  const bool constant_orientation =
      scope.mode == WorkspaceMode::ConstantOrientation;

  detail::parallel_for(scope.node_count(), threads, [&](std::size_t flat) {
    Pose target;
    if (constant_orientation) {
      node_coordinates(scope, flat, target.position);
      target.rotation = fixed_rotation;
    } else {
      target.position = scope.fixed;
      Eigen::Vector3d rpy;
      node_coordinates(scope, flat, rpy);
      target.rotation = rpy_to_rotation(rpy);
    }
    if (use_reach_prefilter && target.position.norm() > reach_cutoff) {
      return;  // provably unreachable, bit stays 0
    }
    tensor.raw()[flat] = inverse_kinematics(m, target, ik).has_value() ? 1 : 0;
  });
  return tensor;
}

std::vector<std::uint8_t> flatten(const BitTensor& tensor) {
  return tensor.raw();
}

BitTensor unflatten(const std::vector<std::uint8_t>& bits, int lx, int ly,
                    int lz) {
  BitTensor tensor(lx, ly, lz);
  if (bits.size() != tensor.size()) {
    throw ValidationError("bit vector length " + std::to_string(bits.size()) +
                          " does not match dims");
  }
  tensor.raw() = bits;
  return tensor;
}

std::vector<std::uint8_t> slice_output(const std::vector<std::uint8_t>& y,
                                       std::size_t lo, std::size_t hi) {
  if (lo < 1 || hi < lo || hi > y.size()) {
    throw std::out_of_range("slice [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "] invalid for length " +
                            std::to_string(y.size()));
  }
  return {y.begin() + static_cast<std::ptrdiff_t>(lo - 1),
          y.begin() + static_cast<std::ptrdiff_t>(hi)};
}

void write_bits_text(const BitTensor& tensor, std::ostream& out) {
  for (std::uint8_t b : tensor.raw()) out.put(b ? '1' : '0');
  out.put('\n');
}

void write_point_cloud_csv(const BitTensor& tensor, const Scope& scope,
                           std::ostream& out) {
  if (tensor.lx() != scope.lx() || tensor.ly() != scope.ly() ||
      tensor.lz() != scope.lz()) {
    throw ValidationError("tensor dims do not match scope");
  }
  out << (scope.mode == WorkspaceMode::ConstantOrientation
              ? "x,y,z,bit\n"
              : "roll,pitch,yaw,bit\n");
  char buf[96];
  std::size_t flat = 0;
  Eigen::Vector3d node;
  for (int i = 1; i <= scope.lx(); ++i) {
    for (int j = 1; j <= scope.ly(); ++j) {
      for (int k = 1; k <= scope.lz(); ++k, ++flat) {
        node_coordinates(scope, flat, node);
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%d\n", node[0],
                      node[1], node[2], tensor.raw()[flat] ? 1 : 0);
        out << buf;
      }
    }
  }
}

}  // namespace wssl
