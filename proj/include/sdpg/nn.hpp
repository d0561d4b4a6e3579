#pragma once

// Dense feed-forward network with exact reverse-mode gradients for both the
// parameters and the input, Adam, and Polyak averaging.
//
// Parameters live in one flat vector, layer by layer, each layer as its
// weight matrix (out x in, row-major) followed by its bias.

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdpg/rng.hpp"

namespace sdpg::nn {

enum class Activation { relu, tanh };

struct Head {
  enum class Kind { linear, bounded } kind = Kind::linear;
  double scale = 1.0;  // bounded: scale * tanh(z)

  static Head linear() { return {}; }
  static Head bounded(double scale) { return {Kind::bounded, scale}; }
};

/// Row-major batch of vectors.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
};

struct ForwardCache {
  std::vector<Matrix> inputs;  // inputs[l] is the input of layer l
  std::vector<Matrix> pre;     // pre-activations of layer l
  Matrix output;
};

struct Gradients {
  std::vector<double> params;  // same layout as Mlp::params()
  Matrix input;                // d(upstream . output) / dx per row
};

class Mlp {
 public:
  Mlp() = default;
  /// All parameters zero.
  Mlp(std::vector<std::size_t> layer_sizes, Activation hidden, Head head);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
  static Mlp init(std::vector<std::size_t> layer_sizes, Activation hidden, Head head, Rng& rng);

  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  const Head& head() const { return head_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer + 1] * sizes_[layer];
  }

  Matrix forward(const Matrix& x) const;
  const Matrix& forward(const Matrix& x, ForwardCache& cache) const;
  std::vector<double> forward(const std::vector<double>& x) const;

  /// Reverse pass from `upstream` (rows x output_dim). Parameter gradients
  /// are summed over rows; callers fold any batch averaging into upstream.
  Gradients backward(const ForwardCache& cache, const Matrix& upstream,
                     bool want_param_grads = true) const;

  bool same_shape(const Mlp& other) const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  std::vector<std::size_t> sizes_;
  Activation hidden_ = Activation::relu;
  Head head_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<double> m;
  std::vector<double> v;

  AdamState() = default;
  AdamState(std::size_t n, double lr) : lr(lr), m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam step. Non-finite gradients raise NumericalError
/// before anything is modified.
void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& st);

/// target = (1 - tau) target + tau online.
void polyak_update(Mlp& target, const Mlp& online, double tau);

}  // namespace sdpg::nn
