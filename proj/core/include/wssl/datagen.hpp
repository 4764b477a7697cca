#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wssl/kinematics.hpp"
#include "wssl/rng.hpp"
#include "wssl/workspace.hpp"

namespace wssl {

/// Distribution of one element of the input vector.
struct ElementDist {
  enum class Kind { Dirac, Uniform };

  Kind kind = Kind::Dirac;
  double a = 0.0;  // Dirac value, or uniform lower bound
  double b = 0.0;  // uniform upper bound

  static ElementDist dirac(double value) { return {Kind::Dirac, value, value}; }
  static ElementDist uniform(double lo, double hi);

  bool is_free() const { return kind != Kind::Dirac; }
  /// Dirac elements consume no randomness, so they are identical across seeds.
  double sample(Rng& rng) const {
    return kind == Kind::Dirac ? a : rng.uniform(a, b);
  }

  bool operator==(const ElementDist&) const = default;
};

/**
 * Fully-specified input distribution p(x) over the manipulator parameters
 * (r_d, r_a, r_alpha, one tag per joint) and the scope orientation/position
 * vector n_i. Grid coordinate vectors are always Dirac at the scope values
 * and are kept in the Scope itself.
 */
struct DistributionSpec {
  std::vector<ElementDist> r_d, r_a, r_alpha;
  std::array<ElementDist, 3> n_i = {ElementDist::dirac(0), ElementDist::dirac(0),
                                    ElementDist::dirac(0)};
  double beta = 0.0;

  int dof() const { return static_cast<int>(r_d.size()); }
  void validate() const;  // throws ValidationError

  bool operator==(const DistributionSpec&) const = default;
};

/// 1-based inclusive slice into the flattened label vector.
struct SliceBounds {
  std::size_t lo = 1;
  std::size_t hi = 1;
  std::size_t width() const { return hi - lo + 1; }
  bool operator==(const SliceBounds&) const = default;
};

/**
 * One subspace: an input distribution together with the positions that stay
 * free after fixing (indices into the full concatenated vector
 * [r_d r_a r_alpha n_x n_y n_z n_i], 0-based) and the slice of the flattened
 * label the subspace model learns.
 */
struct SubspaceDescriptor {
  std::string id;
  DistributionSpec spec;
  SliceBounds output_slice;
  std::vector<int> free_indices;
  /// Position of n_i in the full vector: 3*dof + lx + ly + lz.
  int n_i_base = 0;

  int input_dim() const { return static_cast<int>(free_indices.size()); }
  int output_dim() const { return static_cast<int>(output_slice.width()); }

  bool operator==(const SubspaceDescriptor&) const = default;
};

/// Paired samples of one subspace plus everything needed to regenerate them.
struct Dataset {
  Eigen::MatrixXd X;               // n x input_dim, free elements only
  std::vector<std::uint8_t> Y;     // n x output_dim, row-major 0/1 bytes
  int y_cols = 0;
  SubspaceDescriptor descriptor;
  Scope scope;
  IKSettings ik;
  std::uint64_t seed = 0;

  int rows() const { return static_cast<int>(X.rows()); }
  std::uint8_t y(int row, int col) const {
    return Y[static_cast<std::size_t>(row) * static_cast<std::size_t>(y_cols) +
             static_cast<std::size_t>(col)];
  }
};

/// One draw from a DistributionSpec.
struct ManipulatorSample {
  Manipulator manipulator;
  Eigen::VectorXd r_d, r_a, r_alpha;
  Eigen::Vector3d n_i;
};

/**
 * The 6-DOF spherical-wrist family: d3, d4, a2, a3 ~ Uniform(0, beta)
 * (1-based joint indices), every other length 0, twists fixed at
 * (pi/2, 0, -pi/2, pi/2, -pi/2, 0). Throws ValidationError for beta <= 0.
 */
DistributionSpec spherical_wrist_spec(double beta);

/// Draw every element independently per its tag and assemble the DH table.
ManipulatorSample sample_manipulator(const DistributionSpec& spec, Rng& rng);

/**
 * Descriptor for `spec` over `scope`: validates Dirac n_i entries against
 * scope.fixed, computes free_indices, and records the output slice
 * (defaulting to the full flattened label).
 */
SubspaceDescriptor make_descriptor(const std::string& id,
                                   const DistributionSpec& spec,
                                   const Scope& scope,
                                   const SliceBounds* slice = nullptr);

/// Free elements of a concrete sample in free_indices order; the input row
/// a subspace model sees.
Eigen::VectorXd free_values(const SubspaceDescriptor& desc,
                            const ManipulatorSample& sample);

/**
 * Draw n manipulators, label each by classical discretization over `scope`,
 * flatten, slice. Sample i uses Rng::stream(seed, i), so the result is a
 * pure function of (descriptor, scope, ik, seed, n) regardless of threads.
 */
Dataset generate_dataset(int n, const SubspaceDescriptor& desc,
                         const Scope& scope, const IKSettings& ik,
                         std::uint64_t seed, int threads = 1);

/**
 * Seeded random partition. Validation and test sizes are floor allocations;
 * the remainder goes to the training split. Throws ValidationError if the
 * ratios are invalid or any split would be empty.
 */
std::array<Dataset, 3> split_dataset(const Dataset& d,
                                     const std::array<double, 3>& ratios,
                                     std::uint64_t seed);

/// WSSL1 container: magic, one-line JSON header, X as little-endian f64
/// row-major, Y as per-row byte-padded packed bits.
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Inspection CSV with header x_0..x_k, y_0..y_m.
void write_dataset_csv(const Dataset& d, std::ostream& out);

}  // namespace wssl
