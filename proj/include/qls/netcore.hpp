#pragma once

// Fully-connected feed-forward networks with hand-written backpropagation.
//
// All weights and biases live in one flat vector. Layer l (1-based, mapping
// layers[l-1] inputs to layers[l] outputs) stores its weight block W_l as an
// out x in row-major matrix followed by its bias vector b_l when biases are
// enabled. Losses are batch means of per-sample losses:
//   binary_cross_entropy  sum_k softplus(z_k) - t_k z_k   (sigmoid outputs)
//   cross_entropy         logsumexp(z) - sum_k t_k z_k     (softmax outputs)
//   squared               sum_k (a_k - t_k)^2              (no 1/2 factor)

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qls/dataio.hpp"
#include "qls/error.hpp"

namespace qls {

using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation : std::uint8_t { sigmoid = 0, tanh = 1, linear = 2, softmax = 3 };
enum class Loss : std::uint8_t { binary_cross_entropy = 0, cross_entropy = 1, squared = 2 };
enum class Init : std::uint8_t { standard_normal = 0, xavier = 1 };

struct NetworkSpec {
  std::vector<std::size_t> layers;
  Activation hidden = Activation::sigmoid;
  Activation output = Activation::sigmoid;
  Loss loss = Loss::binary_cross_entropy;
  Init init = Init::standard_normal;
  bool bias = true;

  std::size_t layer_count() const { return layers.size() - 1; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 1; l < layers.size(); ++l) n += layers[l] * layers[l - 1] + (bias ? layers[l] : 0);
    return n;
  }

  void validate() const {
    if (layers.size() < 2) throw InvalidSpec("network needs at least input and output layers");
    for (std::size_t w : layers)
      if (w == 0) throw InvalidSpec("network layer of width 0");
    if (hidden != Activation::sigmoid && hidden != Activation::tanh) {
      throw InvalidSpec("hidden activation must be sigmoid or tanh");
    }
    switch (loss) {
      case Loss::binary_cross_entropy:
        if (output != Activation::sigmoid) throw InvalidSpec("binary cross entropy needs sigmoid outputs");
        break;
      case Loss::cross_entropy:
        if (output != Activation::softmax) throw InvalidSpec("cross entropy needs softmax outputs");
        break;
      case Loss::squared:
        if (output == Activation::softmax) throw InvalidSpec("squared loss does not take softmax outputs");
        break;
    }
  }

  /// Zero hidden layers, one sigmoid output, binary cross entropy.
  static NetworkSpec logistic(std::size_t inputs) {
    return {{inputs, 1}, Activation::sigmoid, Activation::sigmoid, Loss::binary_cross_entropy,
            Init::standard_normal, true};
  }

  /// One sigmoid hidden layer. Outputs are element-wise sigmoid with binary
  /// cross entropy against the one-hot target unless `softmax` is set.
  static NetworkSpec shallow(std::size_t inputs, std::size_t outputs, std::size_t hidden_width = 800,
                             bool softmax = false) {
    return {{inputs, hidden_width, outputs},
            Activation::sigmoid,
            softmax ? Activation::softmax : Activation::sigmoid,
            softmax ? Loss::cross_entropy : Loss::binary_cross_entropy,
            Init::standard_normal,
            true};
  }

  /// Three tanh hidden layers, tanh outputs, squared loss, Xavier init.
  static NetworkSpec deep(std::size_t inputs, std::size_t outputs,
                          std::vector<std::size_t> hidden_widths = {1000, 500, 250}) {
    NetworkSpec s{{inputs}, Activation::tanh, Activation::tanh, Loss::squared, Init::xavier, true};
    s.layers.insert(s.layers.end(), hidden_widths.begin(), hidden_widths.end());
    s.layers.push_back(outputs);
    return s;
  }

  bool operator==(const NetworkSpec&) const = default;
};

/// Offsets of each layer's weight and bias block inside the flat vector.
struct LayerBlock {
  std::size_t in;
  std::size_t out;
  std::size_t weight_offset;
  std::size_t bias_offset;  // meaningful only when the spec has biases
};

inline std::vector<LayerBlock> layer_blocks(const NetworkSpec& spec) {
  std::vector<LayerBlock> blocks;
  std::size_t offset = 0;
  for (std::size_t l = 1; l < spec.layers.size(); ++l) {
    LayerBlock b{spec.layers[l - 1], spec.layers[l], offset, 0};
    offset += b.in * b.out;
    b.bias_offset = offset;
    if (spec.bias) offset += b.out;
    blocks.push_back(b);
  }
  return blocks;
}

inline Vector init_weights(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Vector x = Vector::Zero(static_cast<Eigen::Index>(spec.parameter_count()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const LayerBlock& b : layer_blocks(spec)) {
    const double scale =
        spec.init == Init::xavier ? std::sqrt(2.0 / static_cast<double>(b.in + b.out)) : 1.0;
    for (std::size_t i = 0; i < b.in * b.out; ++i) x[static_cast<Eigen::Index>(b.weight_offset + i)] = scale * normal(rng);
    if (spec.bias && spec.init == Init::standard_normal) {
      for (std::size_t i = 0; i < b.out; ++i) x[static_cast<Eigen::Index>(b.bias_offset + i)] = normal(rng);
    }
  }
  return x;
}

namespace detail {

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

inline void apply_activation(Activation act, RowMatrix& z) {
  switch (act) {
    case Activation::sigmoid:
      z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      break;
    case Activation::tanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::linear:
      break;
    case Activation::softmax:
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double peak = z.row(r).maxCoeff();
        z.row(r) = (z.row(r).array() - peak).exp().matrix();
        z.row(r) /= z.row(r).sum();
      }
      break;
  }
}

/// Derivative of an element-wise activation expressed through its output.
inline RowMatrix activation_slope(Activation act, const RowMatrix& a) {
  switch (act) {
    case Activation::sigmoid: return (a.array() * (1.0 - a.array())).matrix();
    case Activation::tanh: return (1.0 - a.array().square()).matrix();
    default: return RowMatrix::Ones(a.rows(), a.cols());
  }
}

struct Batch {
  RowMatrix inputs;
  RowMatrix targets;
};

inline Batch gather(const Dataset& data, std::span<const std::size_t> rows) {
  Batch b{RowMatrix(static_cast<Eigen::Index>(rows.size()), data.inputs.cols()),
          RowMatrix(static_cast<Eigen::Index>(rows.size()), data.targets.cols())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    b.inputs.row(static_cast<Eigen::Index>(i)) = data.inputs.row(r).cast<double>();
    b.targets.row(static_cast<Eigen::Index>(i)) = data.targets.row(r).cast<double>();
  }
  return b;
}

struct ForwardPass {
  std::vector<RowMatrix> activations;  // [0] = inputs, back() = outputs
  RowMatrix output_logits;
};

inline ForwardPass forward(const NetworkSpec& spec, const Vector& x, RowMatrix inputs) {
  const auto blocks = layer_blocks(spec);
  ForwardPass pass;
  pass.activations.reserve(blocks.size() + 1);
  pass.activations.push_back(std::move(inputs));
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const LayerBlock& b = blocks[l];
    Eigen::Map<const RowMatrix> w(x.data() + b.weight_offset, static_cast<Eigen::Index>(b.out),
                                  static_cast<Eigen::Index>(b.in));
    RowMatrix z = pass.activations.back() * w.transpose();
    if (spec.bias) {
      Eigen::Map<const Eigen::RowVectorXd> bias(x.data() + b.bias_offset, static_cast<Eigen::Index>(b.out));
      z.rowwise() += bias;
    }
    const bool last = l + 1 == blocks.size();
    if (last) pass.output_logits = z;
    apply_activation(last ? spec.output : spec.hidden, z);
    pass.activations.push_back(std::move(z));
  }
  return pass;
}

inline double summed_loss(const NetworkSpec& spec, const ForwardPass& pass, const RowMatrix& targets) {
  const RowMatrix& z = pass.output_logits;
  double total = 0.0;
  switch (spec.loss) {
    case Loss::binary_cross_entropy:
      for (Eigen::Index r = 0; r < z.rows(); ++r)
        for (Eigen::Index c = 0; c < z.cols(); ++c) total += softplus(z(r, c)) - targets(r, c) * z(r, c);
      break;
    case Loss::cross_entropy:
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double peak = z.row(r).maxCoeff();
        const double lse = peak + std::log((z.row(r).array() - peak).exp().sum());
        total += lse * targets.row(r).sum() - targets.row(r).dot(z.row(r));
      }
      break;
    case Loss::squared:
      total = (pass.activations.back() - targets).squaredNorm();
      break;
  }
  return total;
}

inline void check_finite(double loss) {
  if (!std::isfinite(loss)) throw NonFinite("forward pass produced a non-finite loss");
}

}  // namespace detail

/// Mean per-sample loss over the rows of `data` named by `rows`.
inline double batch_loss(const NetworkSpec& spec, const Vector& x, const Dataset& data,
                         std::span<const std::size_t> rows) {
  if (rows.empty()) throw EmptyInput("batch_loss: empty batch");
  auto batch = detail::gather(data, rows);
  const auto pass = detail::forward(spec, x, std::move(batch.inputs));
  const double loss = detail::summed_loss(spec, pass, batch.targets) / static_cast<double>(rows.size());
  detail::check_finite(loss);
  return loss;
}

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

/// Loss and its gradient from one forward and one backward pass.
inline double batch_grad(const NetworkSpec& spec, const Vector& x, const Dataset& data,
                         std::span<const std::size_t> rows, Vector& grad) {
  if (rows.empty()) throw EmptyInput("batch_grad: empty batch");
  auto batch = detail::gather(data, rows);
  const auto pass = detail::forward(spec, x, std::move(batch.inputs));
  const double inv_b = 1.0 / static_cast<double>(rows.size());
  const double loss = detail::summed_loss(spec, pass, batch.targets) * inv_b;
  detail::check_finite(loss);

  const RowMatrix& out = pass.activations.back();
  RowMatrix delta;
  switch (spec.loss) {
    case Loss::binary_cross_entropy:
    case Loss::cross_entropy:
      delta = (out - batch.targets) * inv_b;
      break;
    case Loss::squared:
      delta = ((2.0 * inv_b) * (out - batch.targets).array() *
               detail::activation_slope(spec.output, out).array()).matrix();
      break;
  }

  grad.resize(static_cast<Eigen::Index>(spec.parameter_count()));
  const auto blocks = layer_blocks(spec);
  for (std::size_t l = blocks.size(); l-- > 0;) {
    const LayerBlock& b = blocks[l];
    const RowMatrix& input = pass.activations[l];
    Eigen::Map<RowMatrix> dw(grad.data() + b.weight_offset, static_cast<Eigen::Index>(b.out),
                             static_cast<Eigen::Index>(b.in));
    dw.noalias() = delta.transpose() * input;
    if (spec.bias) {
      Eigen::Map<Eigen::RowVectorXd> db(grad.data() + b.bias_offset, static_cast<Eigen::Index>(b.out));
      db = delta.colwise().sum();
    }
    if (l == 0) break;
    Eigen::Map<const RowMatrix> w(x.data() + b.weight_offset, static_cast<Eigen::Index>(b.out),
                                  static_cast<Eigen::Index>(b.in));
    RowMatrix upstream = delta * w;
    delta = (upstream.array() * detail::activation_slope(spec.hidden, input).array()).matrix();
  }
  return loss;
}

inline LossGrad batch_grad(const NetworkSpec& spec, const Vector& x, const Dataset& data,
                           std::span<const std::size_t> rows) {
  LossGrad out;
  out.loss = batch_grad(spec, x, data, rows, out.grad);
  return out;
}

inline double directional_derivative(const Vector& grad, const Vector& direction) {
  if (grad.size() != direction.size()) throw DimensionMismatch("directional_derivative: size mismatch");
  return grad.dot(direction);
}

/// Fraction of misclassified samples in a split: argmax for multi-class
/// outputs, threshold 0.5 for a single output. NaN for an empty split.
inline double classification_error(const NetworkSpec& spec, const Vector& x, const Dataset& data,
                                   Split split) {
  const auto& rows = split_indices(data, split);
  if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  constexpr std::size_t kChunk = 2048;
  std::size_t wrong = 0;
  for (std::size_t start = 0; start < rows.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, rows.size() - start);
    std::span<const std::size_t> chunk(rows.data() + start, n);
    auto batch = detail::gather(data, chunk);
    const auto pass = detail::forward(spec, x, std::move(batch.inputs));
    const RowMatrix& out = pass.activations.back();
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      int predicted = 0;
      if (out.cols() == 1) {
        predicted = out(r, 0) >= 0.5 ? 1 : 0;
      } else {
        Eigen::Index arg = 0;
        out.row(r).maxCoeff(&arg);
        predicted = static_cast<int>(arg);
      }
      if (predicted != data.labels[chunk[i]]) ++wrong;
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(rows.size());
}

// Weight checkpoints: "QLSW", u32 version, u32 layer count, u64 widths,
// u8 hidden, u8 output, u8 loss, u8 init, u8 bias, u64 parameter count,
// then the parameters as IEEE-754 doubles. Everything little-endian.

namespace detail {

inline void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint64_t get_le(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw ParseError("checkpoint: unexpected end of file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace detail

inline void save_weights(const std::filesystem::path& path, const NetworkSpec& spec, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != spec.parameter_count()) {
    throw DimensionMismatch("save_weights: vector does not match spec");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("QLSW", 4);
  detail::put_le(out, 1, 4);
  detail::put_le(out, spec.layers.size(), 4);
  for (std::size_t w : spec.layers) detail::put_le(out, w, 8);
  detail::put_le(out, static_cast<std::uint8_t>(spec.hidden), 1);
  detail::put_le(out, static_cast<std::uint8_t>(spec.output), 1);
  detail::put_le(out, static_cast<std::uint8_t>(spec.loss), 1);
  detail::put_le(out, static_cast<std::uint8_t>(spec.init), 1);
  detail::put_le(out, spec.bias ? 1 : 0, 1);
  detail::put_le(out, static_cast<std::uint64_t>(x.size()), 8);
  for (Eigen::Index i = 0; i < x.size(); ++i) detail::put_le(out, std::bit_cast<std::uint64_t>(x[i]), 8);
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::pair<NetworkSpec, Vector> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != "QLSW") throw BadMagic(path.string() + ": not a weight checkpoint");
  if (detail::get_le(in, 4) != 1) throw ParseError(path.string() + ": unsupported checkpoint version");
  NetworkSpec spec;
  const auto n_layers = detail::get_le(in, 4);
  if (n_layers < 2 || n_layers > 64) throw ParseError(path.string() + ": bad layer count");
  for (std::uint64_t i = 0; i < n_layers; ++i) spec.layers.push_back(detail::get_le(in, 8));
  spec.hidden = static_cast<Activation>(detail::get_le(in, 1));
  spec.output = static_cast<Activation>(detail::get_le(in, 1));
  spec.loss = static_cast<Loss>(detail::get_le(in, 1));
  spec.init = static_cast<Init>(detail::get_le(in, 1));
  spec.bias = detail::get_le(in, 1) != 0;
  spec.validate();
  const auto count = detail::get_le(in, 8);
  if (count != spec.parameter_count()) throw LengthMismatch(path.string() + ": parameter count mismatch");
  Vector x(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i)
    x[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(detail::get_le(in, 8));
  return {spec, x};
}

}  // namespace qls
