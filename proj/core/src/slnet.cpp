#include "wssl/slnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "serialize.hpp"
#include "wssl/errors.hpp"
#include "wssl/rng.hpp"

namespace wssl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

/// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// dJ/d(affine output) for the elementwise-mean batch loss.
Eigen::MatrixXd output_delta(LossKind kind, const Eigen::MatrixXd& y_hat,
                             const Eigen::MatrixXd& y) {
  const double scale =
      1.0 / (static_cast<double>(y_hat.rows()) * static_cast<double>(y_hat.cols()));
  switch (kind) {
    case LossKind::MeanSquaredError:
      return 2.0 * scale * (y_hat - y);
    case LossKind::MeanAbsoluteError:
      return scale * (y_hat - y).unaryExpr([](double v) { return sign(v); });
    case LossKind::CrossEntropy:
      return scale * (y_hat.unaryExpr([](double z) { return logistic(z); }) - y);
  }
  throw std::logic_error("unknown loss kind");
}

double element_loss(LossKind kind, double y_hat, double y) {
  switch (kind) {
    case LossKind::MeanSquaredError: {
      const double r = y_hat - y;
      return r * r;
    }
    case LossKind::MeanAbsoluteError:
      return std::abs(y_hat - y);
    case LossKind::CrossEntropy:
      return y * softplus(-y_hat) + (1.0 - y) * softplus(y_hat);
  }
  throw std::logic_error("unknown loss kind");
}

struct ForwardPass {
  std::vector<Eigen::MatrixXd> activations;  // activations[0] = X
};

ForwardPass run_forward(const NetArchitecture& arch, const ParameterSet& params,
                        const Eigen::MatrixXd& X) {
  ForwardPass fp;
  fp.activations.reserve(static_cast<std::size_t>(arch.depth()) + 1);
  fp.activations.push_back(X);
  for (int j = 0; j < arch.depth(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    Eigen::MatrixXd z =
        (fp.activations.back() * params.weights[ju].transpose()).rowwise() +
        params.biases[ju].transpose();
    if (j + 1 < arch.depth()) z = z.array().tanh();
    fp.activations.push_back(std::move(z));
  }
  return fp;
}

void apply_inplace(ParameterSet& params, const ParameterSet& delta) {
  for (std::size_t j = 0; j < params.weights.size(); ++j) {
    params.weights[j] += delta.weights[j];
    params.biases[j] += delta.biases[j];
  }
}

template <typename Fn>
void for_each_component(ParameterSet& a, const ParameterSet& b, Fn&& fn) {
  for (std::size_t j = 0; j < a.weights.size(); ++j) {
    double* pa = a.weights[j].data();
    const double* pb = b.weights[j].data();
    for (Eigen::Index i = 0; i < a.weights[j].size(); ++i) fn(pa[i], pb[i]);
    pa = a.biases[j].data();
    pb = b.biases[j].data();
    for (Eigen::Index i = 0; i < a.biases[j].size(); ++i) fn(pa[i], pb[i]);
  }
}

}  // namespace

std::vector<int> NetArchitecture::layer_dims() const {
  std::vector<int> dims;
  dims.reserve(hidden_sizes.size() + 2);
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_sizes.begin(), hidden_sizes.end());
  dims.push_back(output_dim);
  return dims;
}

void NetArchitecture::validate() const {
  if (input_dim < 1 || output_dim < 1) {
    throw ValidationError("net dims must be >= 1");
  }
  for (int h : hidden_sizes) {
    if (h < 1) throw ValidationError("hidden sizes must be >= 1");
  }
}

bool ParameterSet::matches(const NetArchitecture& arch) const {
  const auto dims = arch.layer_dims();
  if (weights.size() != static_cast<std::size_t>(arch.depth()) ||
      biases.size() != weights.size()) {
    return false;
  }
  for (int j = 0; j < arch.depth(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (weights[ju].rows() != dims[ju + 1] || weights[ju].cols() != dims[ju] ||
        biases[ju].size() != dims[ju + 1]) {
      return false;
    }
  }
  return true;
}

double ParameterSet::squared_norm() const {
  double total = 0;
  for (const auto& w : weights) total += w.squaredNorm();
  for (const auto& b : biases) total += b.squaredNorm();
  return total;
}

double ParameterSet::norm() const { return std::sqrt(squared_norm()); }

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet z;
  z.weights.reserve(weights.size());
  z.biases.reserve(biases.size());
  for (const auto& w : weights) {
    z.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : biases) {
    z.biases.push_back(Eigen::VectorXd::Zero(b.size()));
  }
  return z;
}

void RpropParams::validate() const {
  if (!(eta_plus > 1.0 && eta_minus < 1.0 && eta_minus > 0.0)) {
    throw ValidationError("rprop needs eta_plus > 1 > eta_minus > 0");
  }
  if (!(delta0 > 0 && delta_min > 0 && delta_max >= delta_min)) {
    throw ValidationError("rprop step bounds invalid");
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (l2_coefficient < 0) throw ValidationError("l2 coefficient must be >= 0");
  rprop.validate();
  if (optimizer != Optimizer::Rprop && !(learning_rate > 0)) {
    throw ValidationError("learning rate must be > 0");
  }
}

Metrics::Metrics() : precision(kNaN), recall(kNaN), f_measure(kNaN) {}

LabeledData to_labeled(const Dataset& d) {
  LabeledData out;
  out.X = d.X;
  out.Y.resize(d.rows(), d.y_cols);
  for (int r = 0; r < d.rows(); ++r) {
    for (int c = 0; c < d.y_cols; ++c) out.Y(r, c) = d.y(r, c) ? 1.0 : 0.0;
  }
  return out;
}

ParameterSet init_parameters(const NetArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  const auto dims = arch.layer_dims();
  Rng rng(seed);
  ParameterSet p;
  for (int j = 0; j < arch.depth(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const int fan_in = dims[ju];
    const int fan_out = dims[ju + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = rng.uniform(-bound, bound);
      }
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return p;
}

Eigen::MatrixXd forward_batch(const NetArchitecture& arch,
                              const ParameterSet& params,
                              const Eigen::MatrixXd& X) {
  if (X.cols() != arch.input_dim) {
    throw std::invalid_argument("input has " + std::to_string(X.cols()) +
                                " columns, net expects " +
                                std::to_string(arch.input_dim));
  }
  if (!params.matches(arch)) {
    throw std::invalid_argument("parameter shapes do not match architecture");
  }
  return run_forward(arch, params, X).activations.back();
}

Eigen::VectorXd forward(const NetArchitecture& arch, const ParameterSet& params,
                        const Eigen::VectorXd& x) {
  return forward_batch(arch, params, x.transpose()).row(0).transpose();
}

double loss(LossKind kind, const Eigen::VectorXd& y_hat,
            const Eigen::VectorXd& y) {
  if (y_hat.size() != y.size()) {
    throw std::invalid_argument("loss needs equal-length vectors");
  }
  double total = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    total += element_loss(kind, y_hat[i], y[i]);
  }
  return total / static_cast<double>(y.size());
}

double batch_loss(LossKind kind, const Eigen::MatrixXd& y_hat,
                  const Eigen::MatrixXd& y) {
  if (y_hat.rows() != y.rows() || y_hat.cols() != y.cols()) {
    throw std::invalid_argument("batch_loss needs equal shapes");
  }
  double total = 0;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      total += element_loss(kind, y_hat(r, c), y(r, c));
    }
  }
  return total / (static_cast<double>(y.rows()) * static_cast<double>(y.cols()));
}

ParameterSet gradient(const NetArchitecture& arch, const ParameterSet& params,
                      const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                      LossKind kind, double l2_coefficient) {
  if (X.rows() == 0) throw std::invalid_argument("gradient needs a nonempty batch");
  if (Y.rows() != X.rows() || Y.cols() != arch.output_dim) {
    throw std::invalid_argument("label shape mismatch");
  }
  const ForwardPass fp = run_forward(arch, params, X);

  ParameterSet grad = params.zeros_like();
  Eigen::MatrixXd delta = output_delta(kind, fp.activations.back(), Y);
  for (int j = arch.depth() - 1; j >= 0; --j) {
    const auto ju = static_cast<std::size_t>(j);
    grad.weights[ju] = delta.transpose() * fp.activations[ju];
    grad.biases[ju] = delta.colwise().sum().transpose();
    if (j > 0) {
      // tanh'(z) = 1 - tanh(z)^2, and activations[j] already holds tanh(z).
      delta = (delta * params.weights[ju]).array() *
              (1.0 - fp.activations[ju].array().square());
    }
  }
  if (l2_coefficient > 0) {
    for (std::size_t j = 0; j < grad.weights.size(); ++j) {
      grad.weights[j] += l2_coefficient * params.weights[j];
      grad.biases[j] += l2_coefficient * params.biases[j];
    }
  }
  return grad;
}

RpropState RpropState::init(const ParameterSet& shape, const RpropParams& p) {
  p.validate();
  RpropState s;
  s.params = p;
  s.prev_grad_signs = shape.zeros_like();
  s.step_sizes = shape.zeros_like();
  for (auto& w : s.step_sizes.weights) w.setConstant(p.delta0);
  for (auto& b : s.step_sizes.biases) b.setConstant(p.delta0);
  return s;
}

ParameterSet rprop_update(RpropState& state, const ParameterSet& grad) {
  ParameterSet delta = grad.zeros_like();
  const RpropParams& p = state.params;
  for (std::size_t j = 0; j < grad.weights.size(); ++j) {
    const auto update = [&](double& step, double& prev_sign, double g,
                            double& out) {
      const double prod = g * prev_sign;
      if (prod > 0) {
        step = std::min(step * p.eta_plus, p.delta_max);
      } else if (prod < 0) {
        step = std::max(step * p.eta_minus, p.delta_min);
        g = 0;  // skip the update after a sign flip (Rprop- rule)
      }
      out = -sign(g) * step;
      prev_sign = sign(g);
    };
    for (Eigen::Index i = 0; i < grad.weights[j].size(); ++i) {
      update(state.step_sizes.weights[j].data()[i],
             state.prev_grad_signs.weights[j].data()[i],
             grad.weights[j].data()[i], delta.weights[j].data()[i]);
    }
    for (Eigen::Index i = 0; i < grad.biases[j].size(); ++i) {
      update(state.step_sizes.biases[j].data()[i],
             state.prev_grad_signs.biases[j].data()[i],
             grad.biases[j].data()[i], delta.biases[j].data()[i]);
    }
  }
  return delta;
}

TrainResult train(const NetArchitecture& arch, const LabeledData& train_split,
                  const LabeledData& val_split, const TrainConfig& config) {
  arch.validate();
  config.validate();
  if (train_split.X.rows() == 0 || val_split.X.rows() == 0) {
    throw ValidationError("train and validation splits must be nonempty");
  }

  ParameterSet params = init_parameters(arch, config.seed);
  const auto objective = [&](const ParameterSet& theta,
                             const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& Y) {
    double value = batch_loss(config.loss, forward_batch(arch, theta, X), Y);
    if (config.l2_coefficient > 0) {
      value += 0.5 * config.l2_coefficient * theta.squared_norm();
    }
    return value;
  };

  TrainResult result;
  result.params = params;
  result.best_epoch = 0;
  double best_val = objective(params, val_split.X, val_split.Y);
  double prev_obj = objective(params, train_split.X, train_split.Y);
  if (!std::isfinite(prev_obj) || !std::isfinite(best_val)) {
    throw TrainingDiverged(0, "non-finite loss at initialization");
  }

  RpropState rprop = RpropState::init(params, config.rprop);
  double lr = config.learning_rate;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const ParameterSet grad = gradient(arch, params, train_split.X,
                                       train_split.Y, config.loss,
                                       config.l2_coefficient);
    const double grad_norm = grad.norm();

    switch (config.optimizer) {
      case Optimizer::Rprop:
        apply_inplace(params, rprop_update(rprop, grad));
        break;
      case Optimizer::GradientDescent:
        for_each_component(params, grad,
                           [&](double& p, const double& g) { p -= lr * g; });
        break;
      case Optimizer::VariableLRGradientDescent: {
        ParameterSet candidate = params;
        for_each_component(candidate, grad,
                           [&](double& p, const double& g) { p -= lr * g; });
        const double cand_obj =
            objective(candidate, train_split.X, train_split.Y);
        if (cand_obj > prev_obj * config.variable_lr.max_loss_growth) {
          lr *= config.variable_lr.lr_decrease;  // reject the step
        } else {
          if (cand_obj < prev_obj) lr *= config.variable_lr.lr_increase;
          params = std::move(candidate);
        }
        break;
      }
    }

    const double train_obj = objective(params, train_split.X, train_split.Y);
    const double val_obj = objective(params, val_split.X, val_split.Y);
    if (!std::isfinite(train_obj) || !std::isfinite(val_obj)) {
      throw TrainingDiverged(epoch, "non-finite loss at epoch " +
                                        std::to_string(epoch));
    }
    prev_obj = train_obj;
    result.metrics.gradient_norm_history.push_back(grad_norm);
    result.log.push_back({epoch, train_obj, grad_norm, val_obj});
    if (val_obj < best_val) {
      best_val = val_obj;
      result.params = params;
      result.best_epoch = epoch;
    }
  }

  const auto pred = threshold_filter(
      forward_batch(arch, result.params, val_split.X), config.tau);
  std::vector<std::uint8_t> labels(
      static_cast<std::size_t>(val_split.Y.rows()) *
      static_cast<std::size_t>(val_split.Y.cols()));
  for (Eigen::Index r = 0; r < val_split.Y.rows(); ++r) {
    for (Eigen::Index c = 0; c < val_split.Y.cols(); ++c) {
      labels[static_cast<std::size_t>(r * val_split.Y.cols() + c)] =
          val_split.Y(r, c) >= 0.5 ? 1 : 0;
    }
  }
  const std::vector<double> history =
      std::move(result.metrics.gradient_norm_history);
  result.metrics = evaluate(pred, labels);
  result.metrics.gradient_norm_history = history;
  return result;
}

std::vector<std::uint8_t> threshold_filter(const Eigen::VectorXd& y_hat,
                                           double tau) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(y_hat.size()));
  for (Eigen::Index i = 0; i < y_hat.size(); ++i) {
    bits[static_cast<std::size_t>(i)] = y_hat[i] >= tau ? 1 : 0;
  }
  return bits;
}

std::vector<std::uint8_t> threshold_filter(const Eigen::MatrixXd& y_hat,
                                           double tau) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(y_hat.size()));
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < y_hat.rows(); ++r) {
    for (Eigen::Index c = 0; c < y_hat.cols(); ++c) {
      bits[n++] = y_hat(r, c) >= tau ? 1 : 0;
    }
  }
  return bits;
}

Metrics evaluate(const std::vector<std::uint8_t>& predictions,
                 const std::vector<std::uint8_t>& labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("evaluate needs equal-size bit arrays");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool p = predictions[i] != 0;
    const bool l = labels[i] != 0;
    tp += static_cast<std::size_t>(p && l);
    fp += static_cast<std::size_t>(p && !l);
    fn += static_cast<std::size_t>(!p && l);
  }
  Metrics m;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (std::isfinite(m.precision) && std::isfinite(m.recall) &&
      m.precision + m.recall > 0) {
    m.f_measure = 2 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

PerSampleF per_sample_f(const std::vector<std::uint8_t>& predictions,
                        const std::vector<std::uint8_t>& labels, int cols) {
  if (predictions.size() != labels.size() || cols < 1 ||
      predictions.size() % static_cast<std::size_t>(cols) != 0) {
    throw std::invalid_argument("per_sample_f shape mismatch");
  }
  PerSampleF out;
  out.total = static_cast<int>(predictions.size() / static_cast<std::size_t>(cols));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(out.total));
  for (int r = 0; r < out.total; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
    const std::vector<std::uint8_t> p(predictions.begin() + static_cast<std::ptrdiff_t>(base),
                                      predictions.begin() + static_cast<std::ptrdiff_t>(base + static_cast<std::size_t>(cols)));
    const std::vector<std::uint8_t> l(labels.begin() + static_cast<std::ptrdiff_t>(base),
                                      labels.begin() + static_cast<std::ptrdiff_t>(base + static_cast<std::size_t>(cols)));
    const Metrics m = evaluate(p, l);
    if (std::isfinite(m.f_measure)) values.push_back(m.f_measure);
  }
  out.defined = static_cast<int>(values.size());
  if (!values.empty()) {
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out.mean = mean;
    out.stddev = values.size() > 1
                     ? std::sqrt(ss / static_cast<double>(values.size() - 1))
                     : 0.0;
  } else {
    out.mean = kNaN;
    out.stddev = kNaN;
  }
  return out;
}

SubspaceBank::SubspaceBank(std::vector<int> hidden_sizes)
    : hidden_sizes_(std::move(hidden_sizes)) {
  for (int h : hidden_sizes_) {
    if (h < 1) throw ValidationError("hidden sizes must be >= 1");
  }
}

NetArchitecture SubspaceBank::entry_architecture(const Entry& entry) const {
  return {entry.descriptor.input_dim(), hidden_sizes_,
          entry.descriptor.output_dim()};
}

void SubspaceBank::upsert(const SubspaceDescriptor& descriptor,
                          const ParameterSet& params) {
  if (descriptor.id.empty()) throw ValidationError("descriptor id must be non-empty");
  const NetArchitecture arch{descriptor.input_dim(), hidden_sizes_,
                             descriptor.output_dim()};
  if (!params.matches(arch)) {
    throw ValidationError("parameters do not match the bank architecture for '" +
                          descriptor.id + "'");
  }
  for (auto& e : entries_) {
    if (e.descriptor.id == descriptor.id) {
      e.descriptor = descriptor;
      e.params = params;
      return;
    }
  }
  entries_.push_back({descriptor, params});
}

const SubspaceBank::Entry* SubspaceBank::find(const std::string& id) const {
  for (const auto& e : entries_) {
    if (e.descriptor.id == id) return &e;
  }
  return nullptr;
}

const Eigen::MatrixXd& SubspaceBank::weight(int layer, int entry) const {
  return entries_.at(static_cast<std::size_t>(entry))
      .params.weights.at(static_cast<std::size_t>(layer));
}

const Eigen::VectorXd& SubspaceBank::bias(int layer, int entry) const {
  return entries_.at(static_cast<std::size_t>(entry))
      .params.biases.at(static_cast<std::size_t>(layer));
}

std::vector<std::uint8_t> bank_predict(const SubspaceBank& bank,
                                       const std::string& id,
                                       const Eigen::VectorXd& x, double tau) {
  const SubspaceBank::Entry* entry = bank.find(id);
  if (!entry) {
    std::string known;
    for (const auto& e : bank.entries()) {
      known += known.empty() ? "" : ", ";
      known += e.descriptor.id;
    }
    throw std::out_of_range("no subspace '" + id + "' in bank (stored: " +
                            (known.empty() ? "<none>" : known) + ")");
  }
  const NetArchitecture arch = bank.entry_architecture(*entry);
  return threshold_filter(forward(arch, entry->params, x), tau);
}

namespace {

std::string hex_encode(const double* data, std::size_t count) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(count * 16);
  std::string scratch;
  for (std::size_t i = 0; i < count; ++i) {
    scratch.clear();
    detail::append_f64_le(scratch, data[i]);
    for (char byte : scratch) {
      const auto u = static_cast<unsigned char>(byte);
      out.push_back(digits[u >> 4]);
      out.push_back(digits[u & 0xf]);
    }
  }
  return out;
}

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  throw IoError("bad hex digit in model file");
}

void hex_decode(const std::string& hex, double* out, std::size_t count) {
  if (hex.size() != count * 16) throw IoError("weight blob has wrong length");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < count; ++i) {
    unsigned char bytes[8];
    for (auto& byte : bytes) {
      byte = static_cast<unsigned char>((hex_nibble(hex[pos]) << 4) |
                                        hex_nibble(hex[pos + 1]));
      pos += 2;
    }
    out[i] = detail::read_f64_le(bytes);
  }
}

}  // namespace

void save_bank(const SubspaceBank& bank, const std::string& path) {
  detail::json doc{{"format", "SLBANK1"},
                   {"hidden_sizes", bank.hidden_sizes()},
                   {"entries", detail::json::array()}};
  for (const auto& entry : bank.entries()) {
    detail::json layers = detail::json::array();
    for (std::size_t j = 0; j < entry.params.weights.size(); ++j) {
      const Eigen::MatrixXd& w = entry.params.weights[j];
      const Eigen::VectorXd& b = entry.params.biases[j];
      // Row-major element order for the blob.
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
          row_major = w;
      layers.push_back(
          {{"rows", w.rows()},
           {"cols", w.cols()},
           {"weights", hex_encode(row_major.data(),
                                  static_cast<std::size_t>(row_major.size()))},
           {"bias", hex_encode(b.data(), static_cast<std::size_t>(b.size()))}});
    }
    doc["entries"].push_back(
        {{"descriptor", detail::to_json(entry.descriptor)},
         {"layers", layers}});
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "SLBANK1\n" << doc.dump(1) << '\n';
  if (!out) throw IoError("short write to " + path);
}

SubspaceBank load_bank(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  if (!std::getline(in, magic) || magic != "SLBANK1") {
    throw IoError(path + " is not an SLBANK1 model bank");
  }
  detail::json doc;
  try {
    in >> doc;
  } catch (const detail::json::exception& e) {
    throw IoError(path + ": bad model json: " + e.what());
  }
  SubspaceBank bank(doc.at("hidden_sizes").get<std::vector<int>>());
  for (const auto& je : doc.at("entries")) {
    ParameterSet params;
    for (const auto& jl : je.at("layers")) {
      const auto rows = jl.at("rows").get<Eigen::Index>();
      const auto cols = jl.at("cols").get<Eigen::Index>();
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
          row_major(rows, cols);
      hex_decode(jl.at("weights").get<std::string>(), row_major.data(),
                 static_cast<std::size_t>(rows * cols));
      Eigen::VectorXd b(rows);
      hex_decode(jl.at("bias").get<std::string>(), b.data(),
                 static_cast<std::size_t>(rows));
      params.weights.emplace_back(row_major);
      params.biases.push_back(std::move(b));
    }
    bank.upsert(detail::descriptor_from_json(je.at("descriptor")), params);
  }
  return bank;
}

MonteCarloEquality appendix_gaussian_equality(const NetArchitecture& arch,
                                              const ParameterSet& params,
                                              int n_draws, std::uint64_t seed,
                                              const ParameterSet* target) {
  arch.validate();
  if (n_draws < 2) throw ValidationError("n_draws must be >= 2");
  const ParameterSet& target_params = target ? *target : params;
  const double constant =
      0.5 * arch.output_dim * std::log(2.0 * std::numbers::pi);

  const auto draw_loss = [&](Rng& rng, bool fix_first_from_marginal) {
    Eigen::VectorXd x(arch.input_dim);
    if (fix_first_from_marginal) {
      // The subspace fixes x_1 to a Dirac at a draw from its own marginal.
      const double beta = rng.normal();
      x[0] = beta;
      for (Eigen::Index i = 1; i < x.size(); ++i) x[i] = rng.normal();
    } else {
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
    }
    const Eigen::VectorXd y = forward(arch, target_params, x);
    const Eigen::VectorXd y_hat = forward(arch, params, x);
    return constant + 0.5 * (y - y_hat).squaredNorm();
  };

  Rng lhs_rng = Rng::stream(seed, 0);
  Rng rhs_rng = Rng::stream(seed, 1);
  double lhs_sum = 0, lhs_sq = 0, rhs_sum = 0, rhs_sq = 0;
  for (int i = 0; i < n_draws; ++i) {
    const double l = draw_loss(lhs_rng, true);
    const double r = draw_loss(rhs_rng, false);
    lhs_sum += l;
    lhs_sq += l * l;
    rhs_sum += r;
    rhs_sq += r * r;
  }
  const double n = n_draws;
  MonteCarloEquality out;
  out.lhs = lhs_sum / n;
  out.rhs = rhs_sum / n;
  const double lhs_var = std::max(0.0, (lhs_sq - n * out.lhs * out.lhs) / (n - 1));
  const double rhs_var = std::max(0.0, (rhs_sq - n * out.rhs * out.rhs) / (n - 1));
  out.stderr_ = std::sqrt(lhs_var / n + rhs_var / n);
  return out;
}

}  // namespace wssl
