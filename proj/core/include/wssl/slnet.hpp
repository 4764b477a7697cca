#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "wssl/datagen.hpp"

namespace wssl {

enum class LossKind { MeanSquaredError, MeanAbsoluteError, CrossEntropy };
enum class Optimizer { Rprop, GradientDescent, VariableLRGradientDescent };

/// Fully connected feedforward net: tanh hidden layers, affine output.
struct NetArchitecture {
  int input_dim = 1;
  std::vector<int> hidden_sizes;
  int output_dim = 1;

  /// Number of weight layers (hidden count + output layer).
  int depth() const { return static_cast<int>(hidden_sizes.size()) + 1; }
  /// Neuron counts including input and output: input, hidden..., output.
  std::vector<int> layer_dims() const;
  void validate() const;  // throws ValidationError
};

/// Per-layer weights and biases; weights[j] maps layer j to layer j+1.
struct ParameterSet {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  bool matches(const NetArchitecture& arch) const;
  double squared_norm() const;
  double norm() const;
  /// Same shapes, all components zero.
  ParameterSet zeros_like() const;
};

struct RpropParams {
  double eta_plus = 1.2;
  double eta_minus = 0.5;
  double delta0 = 0.07;
  double delta_min = 1e-9;
  double delta_max = 50.0;

  void validate() const;  // eta_plus > 1 > eta_minus > 0
};

struct VariableLRParams {
  double lr_increase = 1.05;
  double lr_decrease = 0.7;
  double max_loss_growth = 1.04;
};

struct TrainConfig {
  Optimizer optimizer = Optimizer::Rprop;
  LossKind loss = LossKind::MeanSquaredError;
  int epochs = 100;
  double l2_coefficient = 0.0;  // beta in J' = J + beta * ||theta||^2 / 2
  RpropParams rprop;
  double learning_rate = 0.01;  // gradient-descent variants
  VariableLRParams variable_lr;
  double tau = 0.5;  // threshold for the validation metrics
  std::uint64_t seed = 0;

  void validate() const;
};

struct Metrics {
  double precision;
  double recall;
  double f_measure;
  std::vector<double> gradient_norm_history;

  Metrics();
};

struct TrainLogRow {
  int epoch = 0;  // 1-based
  double loss = 0;
  double grad_norm = 0;
  double val_loss = 0;
};

struct TrainResult {
  ParameterSet params;  // epoch with best validation loss
  Metrics metrics;      // validation precision/recall/F at those parameters
  std::vector<TrainLogRow> log;
  int best_epoch = 0;  // 0 means the initial parameters won
};

/// Samples as rows; labels as 0/1 doubles.
struct LabeledData {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
};

LabeledData to_labeled(const Dataset& d);

/// Glorot-uniform weights, zero biases, deterministic by seed.
ParameterSet init_parameters(const NetArchitecture& arch, std::uint64_t seed);

/// h^0 = x; h^j = tanh(W^j h^{j-1} + b^j); output affine.
Eigen::VectorXd forward(const NetArchitecture& arch, const ParameterSet& params,
                        const Eigen::VectorXd& x);

/// Batched forward, one sample per row.
Eigen::MatrixXd forward_batch(const NetArchitecture& arch,
                              const ParameterSet& params,
                              const Eigen::MatrixXd& X);

/**
 * Elementwise-mean loss of one prediction. Cross entropy squashes the affine
 * output through a logistic before the log terms; MSE and MAE use it raw.
 */
double loss(LossKind kind, const Eigen::VectorXd& y_hat,
            const Eigen::VectorXd& y);

/// Mean over samples of the per-sample loss.
double batch_loss(LossKind kind, const Eigen::MatrixXd& y_hat,
                  const Eigen::MatrixXd& y);

/**
 * Exact reverse-mode gradient of batch_loss(kind, forward(X), Y) plus
 * l2_coefficient * theta.
 */
ParameterSet gradient(const NetArchitecture& arch, const ParameterSet& params,
                      const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                      LossKind kind, double l2_coefficient = 0.0);

/// Rprop- (no weight-backtracking): per-component adaptive step, sign-only.
struct RpropState {
  ParameterSet step_sizes;
  ParameterSet prev_grad_signs;
  RpropParams params;

  static RpropState init(const ParameterSet& shape, const RpropParams& p);
};

/// Advances the state and returns the applied parameter delta.
ParameterSet rprop_update(RpropState& state, const ParameterSet& grad);

/**
 * Full-batch training: `epochs` gradient updates, gradient norm recorded per
 * epoch, parameters returned from the epoch (0 = init) with the best
 * validation loss. Throws TrainingDiverged when the loss goes non-finite.
 */
TrainResult train(const NetArchitecture& arch, const LabeledData& train_split,
                  const LabeledData& val_split, const TrainConfig& config);

/// bit = 1 iff y_hat >= tau, elementwise.
std::vector<std::uint8_t> threshold_filter(const Eigen::VectorXd& y_hat,
                                           double tau);
std::vector<std::uint8_t> threshold_filter(const Eigen::MatrixXd& y_hat,
                                           double tau);

/// Micro-aggregated precision/recall/F over all elements; 0/0 gives NaN.
Metrics evaluate(const std::vector<std::uint8_t>& predictions,
                 const std::vector<std::uint8_t>& labels);

struct PerSampleF {
  double mean = 0;
  double stddev = 0;
  int defined = 0;  // rows with a defined F-measure
  int total = 0;
};

/// Row-wise F statistics (rows of width `cols`); NaN rows are skipped.
PerSampleF per_sample_f(const std::vector<std::uint8_t>& predictions,
                        const std::vector<std::uint8_t>& labels, int cols);

/**
 * Shared-architecture model bank: every entry stores its own parameter set
 * over identical hidden sizes, addressable as (layer j, subspace i); first
 * and last layer dims follow each entry's descriptor.
 */
class SubspaceBank {
 public:
  struct Entry {
    SubspaceDescriptor descriptor;
    ParameterSet params;
  };

  SubspaceBank() = default;
  explicit SubspaceBank(std::vector<int> hidden_sizes);

  const std::vector<int>& hidden_sizes() const { return hidden_sizes_; }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Replace the entry with the same id or append a new one.
  void upsert(const SubspaceDescriptor& descriptor, const ParameterSet& params);

  /// Linear search in insertion order; nullptr when absent.
  const Entry* find(const std::string& id) const;

  /// Weight tensor addressing: layer j of subspace entry i.
  const Eigen::MatrixXd& weight(int layer, int entry) const;
  const Eigen::VectorXd& bias(int layer, int entry) const;

  NetArchitecture entry_architecture(const Entry& entry) const;

 private:
  std::vector<int> hidden_sizes_;
  std::vector<Entry> entries_;
};

/**
 * Linear-search dispatch: select the first entry whose descriptor id matches,
 * run forward, threshold at tau. Throws std::out_of_range listing the stored
 * ids when nothing matches.
 */
std::vector<std::uint8_t> bank_predict(const SubspaceBank& bank,
                                       const std::string& id,
                                       const Eigen::VectorXd& x,
                                       double tau = 0.5);

/// SLBANK1 container: magic line plus a JSON document with hex-encoded
/// little-endian weight blobs. Save/load round-trips bit-exactly.
void save_bank(const SubspaceBank& bank, const std::string& path);
SubspaceBank load_bank(const std::string& path);

struct MonteCarloEquality {
  double lhs = 0;     // E over the subspace parameter of the subspace loss
  double rhs = 0;     // E over the full input distribution of the loss
  double stderr_ = 0; // pooled standard error of lhs - rhs
};

/**
 * Monte-Carlo check that fixing the first input coordinate to a draw from
 * its own marginal leaves the expected Gaussian negative log likelihood
 * unchanged. Inputs are standard normal; the per-draw loss is
 * m/2 * log(2*pi) + ||y - net(x)||^2 / 2 with y produced by `target`
 * (the net itself when null, giving zero residual).
 */
MonteCarloEquality appendix_gaussian_equality(const NetArchitecture& arch,
                                              const ParameterSet& params,
                                              int n_draws, std::uint64_t seed,
                                              const ParameterSet* target = nullptr);

}  // namespace wssl
