// SPDX-License-Identifier: Apache-2.0
//
// Fully-connected networks with hand-written forward/backward passes, plain
// SGD (optional momentum) and a JSON checkpoint format.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zkd/errors.hpp"
#include "zkd/io.hpp"
#include "zkd/logitcore.hpp"
#include "zkd/rng.hpp"

namespace zkd {

enum class Activation { ReLU, Tanh };

inline std::string to_string(Activation a) {
  return a == Activation::ReLU ? "relu" : "tanh";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  throw InvalidParameter("unknown activation '" + s + "' (expected relu or tanh)");
}

/// Layer widths from input dimension D to output dimension K.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::ReLU;
  std::uint64_t seed = 0;

  void validate() const {
    if (layer_sizes.size() < 2) {
      throw InvalidParameter("MLP needs at least an input and an output size");
    }
    for (std::size_t s : layer_sizes) {
      if (s == 0) throw InvalidParameter("MLP layer sizes must be positive");
    }
  }
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Affine map out = w * in + b, w stored row-major as out x in.
struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;
  std::vector<double> b;

  Layer() = default;
  Layer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), w(in_dim * out_dim, 0.0), b(out_dim, 0.0) {}

  double& weight(std::size_t row, std::size_t col) { return w[row * in + col]; }
  double weight(std::size_t row, std::size_t col) const { return w[row * in + col]; }
  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Per-layer gradients, same shapes as the network's layers.
struct MlpGradients {
  std::vector<Layer> layers;

  void scale(double factor) {
    for (auto& l : layers) {
      for (double& x : l.w) x *= factor;
      for (double& x : l.b) x *= factor;
    }
  }
};

class Mlp {
 public:
  /// All parameters zero.
  explicit Mlp(MlpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    for (std::size_t i = 0; i + 1 < spec_.layer_sizes.size(); ++i) {
      layers_.emplace_back(spec_.layer_sizes[i], spec_.layer_sizes[i + 1]);
    }
  }

  const MlpSpec& spec() const noexcept { return spec_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }
  std::size_t input_dim() const { return spec_.input_dim(); }
  std::size_t output_dim() const { return spec_.output_dim(); }

  MlpGradients zero_gradients() const {
    MlpGradients g;
    for (const auto& l : layers_) g.layers.emplace_back(l.in, l.out);
    return g;
  }

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  MlpSpec spec_;
  std::vector<Layer> layers_;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
/// Weights are drawn layer by layer in row-major order from Rng(spec.seed).
inline Mlp init(const MlpSpec& spec) {
  Mlp net(spec);
  Rng rng(spec.seed);
  for (auto& layer : net.layers()) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (double& x : layer.w) x = rng.uniform(-limit, limit);
  }
  return net;
}

namespace detail {

inline double activate(Activation a, double x) noexcept {
  return a == Activation::ReLU ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

/// Derivative expressed through the activation output y.
inline double activate_grad(Activation a, double pre, double y) noexcept {
  return a == Activation::ReLU ? (pre > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

/// Inputs to every layer plus pre-activations, kept for the backward pass.
struct ForwardTrace {
  std::vector<std::vector<double>> inputs;  // inputs[i] feeds layer i
  std::vector<std::vector<double>> pre;     // pre[i] = w_i inputs[i] + b_i
  std::vector<double> logits;
};

inline void check_input(const Mlp& net, std::span<const double> x) {
  if (x.size() != net.input_dim()) {
    throw ShapeError("input has " + std::to_string(x.size()) +
                     " features, network expects " + std::to_string(net.input_dim()));
  }
}

inline ForwardTrace forward_trace(const Mlp& net, std::span<const double> x) {
  check_input(net, x);
  ForwardTrace t;
  std::vector<double> cur(x.begin(), x.end());
  const auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    std::vector<double> pre(l.out);
    for (std::size_t r = 0; r < l.out; ++r) {
      double acc = l.b[r];
      const double* row = &l.w[r * l.in];
      for (std::size_t c = 0; c < l.in; ++c) acc += row[c] * cur[c];
      pre[r] = acc;
    }
    t.inputs.push_back(std::move(cur));
    if (i + 1 == layers.size()) {
      t.logits = pre;
    } else {
      cur.resize(l.out);
      for (std::size_t r = 0; r < l.out; ++r) {
        cur[r] = activate(net.spec().activation, pre[r]);
      }
    }
    t.pre.push_back(std::move(pre));
  }
  return t;
}

/// Adds d(d_logits . logits)/d(params) into grads.
inline void accumulate_backward(const Mlp& net, const ForwardTrace& t,
                                std::span<const double> d_logits, MlpGradients& grads) {
  const auto& layers = net.layers();
  std::vector<double> delta(d_logits.begin(), d_logits.end());
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Layer& l = layers[i];
    Layer& g = grads.layers[i];
    const auto& input = t.inputs[i];
    for (std::size_t r = 0; r < l.out; ++r) {
      g.b[r] += delta[r];
      double* grow = &g.w[r * l.in];
      for (std::size_t c = 0; c < l.in; ++c) grow[c] += delta[r] * input[c];
    }
    if (i == 0) break;
    std::vector<double> prev(l.in, 0.0);
    for (std::size_t r = 0; r < l.out; ++r) {
      const double* row = &l.w[r * l.in];
      for (std::size_t c = 0; c < l.in; ++c) prev[c] += row[c] * delta[r];
    }
    // input to layer i is the activation of layer i-1
    const auto& pre = t.pre[i - 1];
    for (std::size_t c = 0; c < l.in; ++c) {
      prev[c] *= activate_grad(net.spec().activation, pre[c], input[c]);
    }
    delta.swap(prev);
  }
}

inline void check_same_shape(const Mlp& net, const MlpGradients& grads) {
  const auto& layers = net.layers();
  if (grads.layers.size() != layers.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (grads.layers[i].in != layers[i].in || grads.layers[i].out != layers[i].out ||
        grads.layers[i].w.size() != layers[i].w.size() ||
        grads.layers[i].b.size() != layers[i].b.size()) {
      throw ShapeError("gradient shape mismatch in layer " + std::to_string(i));
    }
  }
}

}  // namespace detail

/// Hidden layers: affine then activation. Output layer: affine only.
inline LogitVector forward(const Mlp& net, std::span<const double> x) {
  return LogitVector(detail::forward_trace(net, x).logits);
}

/// Gradients of (d_logits . forward(net, x)) with respect to every parameter.
inline MlpGradients backward(const Mlp& net, std::span<const double> x,
                             std::span<const double> d_logits) {
  if (d_logits.size() != net.output_dim()) {
    throw ShapeError("d_logits has wrong length");
  }
  const auto trace = detail::forward_trace(net, x);
  MlpGradients grads = net.zero_gradients();
  detail::accumulate_backward(net, trace, d_logits, grads);
  return grads;
}

/// theta <- theta - lr * g, in place.
inline void sgd_step(Mlp& net, const MlpGradients& grads, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidParameter("lr must be >= 0");
  detail::check_same_shape(net, grads);
  auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (std::size_t j = 0; j < layers[i].w.size(); ++j) {
      layers[i].w[j] -= lr * grads.layers[i].w[j];
    }
    for (std::size_t j = 0; j < layers[i].b.size(); ++j) {
      layers[i].b[j] -= lr * grads.layers[i].b[j];
    }
  }
}

/// Heavy-ball momentum: v <- mu v + g; theta <- theta - lr v.
class MomentumSgd {
 public:
  MomentumSgd(const Mlp& net, double momentum)
      : velocity_(net.zero_gradients()), momentum_(momentum) {
    if (!(momentum >= 0.0 && momentum < 1.0)) {
      throw InvalidParameter("momentum must be in [0, 1)");
    }
  }

  void step(Mlp& net, const MlpGradients& grads, double lr) {
    detail::check_same_shape(net, grads);
    for (std::size_t i = 0; i < velocity_.layers.size(); ++i) {
      auto& v = velocity_.layers[i];
      const auto& g = grads.layers[i];
      for (std::size_t j = 0; j < v.w.size(); ++j) v.w[j] = momentum_ * v.w[j] + g.w[j];
      for (std::size_t j = 0; j < v.b.size(); ++j) v.b[j] = momentum_ * v.b[j] + g.b[j];
    }
    sgd_step(net, velocity_, lr);
  }

 private:
  MlpGradients velocity_;
  double momentum_;
};

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointFormatVersion = 1;

inline io::Json spec_to_json(const MlpSpec& spec) {
  return {{"layer_sizes", spec.layer_sizes},
          {"activation", to_string(spec.activation)},
          {"seed", spec.seed}};
}

inline io::Json checkpoint_to_json(const Mlp& net) {
  io::Json layers = io::Json::array();
  for (const auto& l : net.layers()) {
    io::Json rows = io::Json::array();
    for (std::size_t r = 0; r < l.out; ++r) {
      rows.push_back(std::vector<double>(l.w.begin() + static_cast<std::ptrdiff_t>(r * l.in),
                                         l.w.begin() + static_cast<std::ptrdiff_t>((r + 1) * l.in)));
    }
    layers.push_back({{"w", std::move(rows)}, {"b", l.b}});
  }
  return {{"format_version", kCheckpointFormatVersion},
          {"spec", spec_to_json(net.spec())},
          {"layers", std::move(layers)}};
}

namespace detail {

inline MlpSpec spec_from_json(const io::Json& j) {
  MlpSpec spec;
  spec.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  spec.activation = activation_from_string(j.at("activation").get<std::string>());
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.validate();
  return spec;
}

inline double finite_number(const io::Json& j) {
  if (!j.is_number()) throw MalformedCheckpoint("parameter is not a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw MalformedCheckpoint("parameter is not finite");
  return x;
}

}  // namespace detail

inline Mlp checkpoint_from_json(const io::Json& j) {
  if (!j.is_object() || !j.contains("format_version")) {
    throw MalformedCheckpoint("missing format_version");
  }
  if (!j.at("format_version").is_number_integer() ||
      j.at("format_version").get<int>() != kCheckpointFormatVersion) {
    throw CheckpointVersionError("unsupported checkpoint format_version " +
                                 j.at("format_version").dump());
  }
  try {
    Mlp net(detail::spec_from_json(j.at("spec")));
    const auto& layers = j.at("layers");
    if (!layers.is_array() || layers.size() != net.layers().size()) {
      throw MalformedCheckpoint("layer count does not match spec");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      Layer& l = net.layers()[i];
      const auto& w = layers[i].at("w");
      const auto& b = layers[i].at("b");
      if (!w.is_array() || w.size() != l.out || !b.is_array() || b.size() != l.out) {
        throw MalformedCheckpoint("layer " + std::to_string(i) + " has wrong shape");
      }
      for (std::size_t r = 0; r < l.out; ++r) {
        if (!w[r].is_array() || w[r].size() != l.in) {
          throw MalformedCheckpoint("layer " + std::to_string(i) + " has wrong shape");
        }
        for (std::size_t c = 0; c < l.in; ++c) l.weight(r, c) = detail::finite_number(w[r][c]);
        l.b[r] = detail::finite_number(b[r]);
      }
    }
    return net;
  } catch (const io::Json::exception& e) {
    throw MalformedCheckpoint(std::string("checkpoint structure: ") + e.what());
  } catch (const InvalidParameter& e) {
    throw MalformedCheckpoint(std::string("checkpoint spec: ") + e.what());
  }
}

inline void save_checkpoint(const Mlp& net, const std::filesystem::path& path) {
  io::write_file(path, io::dump_json(checkpoint_to_json(net)));
}

inline Mlp load_checkpoint(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  io::Json j;
  try {
    j = io::Json::parse(text);
  } catch (const io::Json::parse_error& e) {
    throw MalformedCheckpoint(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace zkd
