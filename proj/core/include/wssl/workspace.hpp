#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "wssl/kinematics.hpp"

namespace wssl {

enum class WorkspaceMode {
  /// Grid nodes are positions, orientation fixed at rpy(fixed).
  ConstantOrientation,
  /// Grid nodes are roll-pitch-yaw triples, position fixed at `fixed`.
  Orientation,
};

/**
 * Voxel grid defined by coordinate mapping: three equi-spaced coordinate
 * vectors whose permutations enumerate every node, plus the fixed
 * orientation (constant-orientation mode) or position (orientation mode).
 */
struct Scope {
  Eigen::VectorXd nx, ny, nz;
  Eigen::Vector3d fixed = Eigen::Vector3d::Zero();
  WorkspaceMode mode = WorkspaceMode::ConstantOrientation;

  // Construction parameters, kept so a scope serializes compactly and
  // rebuilds bit-exactly.
  Eigen::Vector3d range_min = Eigen::Vector3d::Zero();
  Eigen::Vector3d range_max = Eigen::Vector3d::Zero();
  Eigen::Vector3d delta = Eigen::Vector3d::Ones();

  int lx() const { return static_cast<int>(nx.size()); }
  int ly() const { return static_cast<int>(ny.size()); }
  int lz() const { return static_cast<int>(nz.size()); }
  std::size_t node_count() const {
    return static_cast<std::size_t>(lx()) * static_cast<std::size_t>(ly()) *
           static_cast<std::size_t>(lz());
  }
};

/// 3-D boolean occupancy tensor with 1-based indexing on the interface.
class BitTensor {
 public:
  BitTensor() = default;
  BitTensor(int lx, int ly, int lz);

  int lx() const { return lx_; }
  int ly() const { return ly_; }
  int lz() const { return lz_; }
  std::size_t size() const { return bits_.size(); }

  /// 1-based element access; throws std::out_of_range.
  std::uint8_t at(int i, int j, int k) const { return bits_[index(i, j, k)]; }
  void set(int i, int j, int k, bool value) { bits_[index(i, j, k)] = value ? 1 : 0; }

  /// Flatten-order storage: i outermost, j middle, k innermost.
  const std::vector<std::uint8_t>& raw() const { return bits_; }
  std::vector<std::uint8_t>& raw() { return bits_; }

  bool operator==(const BitTensor& other) const = default;

 private:
  std::size_t index(int i, int j, int k) const;

  int lx_ = 0, ly_ = 0, lz_ = 0;
  std::vector<std::uint8_t> bits_;
};

/**
 * Build a scope whose coordinate vectors run from range_min in steps of
 * delta, with per-axis length floor((max-min)/delta + 1/2) + 1. Spacing is
 * exact by construction. Throws ValidationError on non-positive delta or
 * inverted ranges.
 */
Scope build_scope(const Eigen::Vector3d& range_min,
                  const Eigen::Vector3d& range_max,
                  const Eigen::Vector3d& delta,
                  const Eigen::Vector3d& fixed,
                  WorkspaceMode mode);

/// Pose of grid node (i, j, k), 1-based; throws std::out_of_range.
Pose node_pose(const Scope& scope, int i, int j, int k);

/**
 * Classical discretization: bit (i,j,k) is 1 iff inverse kinematics reaches
 * the node pose. Nodes whose position norm exceeds reach_bound + tolerance
 * are zeroed without invoking the solver; the solver cannot succeed there.
 * Node evaluations are independent, so `threads` > 1 changes nothing but
 * wall time.
 */
BitTensor discretize_workspace(const Manipulator& m, const Scope& scope,
                               const IKSettings& ik, int threads = 1,
                               bool use_reach_prefilter = true);

/// Bit vector in flatten order: c = ((i-1)*ly + (j-1))*lz + (k-1).
std::vector<std::uint8_t> flatten(const BitTensor& tensor);

/// Inverse of flatten; throws ValidationError if sizes disagree.
BitTensor unflatten(const std::vector<std::uint8_t>& bits, int lx, int ly, int lz);

/// Elements lo..hi of y, 1-based inclusive; throws std::out_of_range.
std::vector<std::uint8_t> slice_output(const std::vector<std::uint8_t>& y,
                                       std::size_t lo, std::size_t hi);

/// One line of '0'/'1' characters in flatten order.
void write_bits_text(const BitTensor& tensor, std::ostream& out);

/// Point cloud `x,y,z,bit` (constant-orientation) or `roll,pitch,yaw,bit`
/// (orientation) with one row per node in flatten order.
void write_point_cloud_csv(const BitTensor& tensor, const Scope& scope,
                           std::ostream& out);

}  // namespace wssl
