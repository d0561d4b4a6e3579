#include "sdpg/nn.hpp"

#include <cmath>
#include <sstream>

#include "sdpg/error.hpp"
#include "sdpg/kernels.hpp"

namespace sdpg::nn {

namespace {

void check_finite(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << what << ": non-finite value at index " << i;
      throw NumericalError(os.str());
    }
  }
}

const char* activation_name(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

}  // namespace

Mlp::Mlp(std::vector<std::size_t> layer_sizes, Activation hidden, Head head)
    : sizes_(std::move(layer_sizes)), hidden_(hidden), head_(head) {
  if (sizes_.size() < 2) throw UsageError("mlp needs at least an input and an output layer");
  for (auto s : sizes_) {
    if (s == 0) throw UsageError("mlp layer sizes must be positive");
  }
  if (head_.kind == Head::Kind::bounded && !(head_.scale > 0.0)) {
    throw UsageError("bounded head scale must be positive");
  }
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(n);
    n += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  params_.assign(n, 0.0);
}

Mlp Mlp::init(std::vector<std::size_t> layer_sizes, Activation hidden, Head head, Rng& rng) {
  Mlp net(std::move(layer_sizes), hidden, head);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.sizes_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    const std::size_t begin = net.offsets_[l];
    const std::size_t end = begin + net.sizes_[l + 1] * (net.sizes_[l] + 1);
    for (std::size_t i = begin; i < end; ++i) net.params_[i] = u(rng);
  }
  return net;
}

const Matrix& Mlp::forward(const Matrix& x, ForwardCache& cache) const {
  if (x.cols != input_dim()) {
    std::ostringstream os;
    os << "mlp forward: input width " << x.cols << " but network expects " << input_dim();
    throw NumericalError(os.str());
  }
  const auto& k = kernels::active();
  const std::size_t layers = num_layers();
  cache.inputs.resize(layers);
  cache.pre.resize(layers);
  cache.inputs[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& in = cache.inputs[l];
    Matrix& z = cache.pre[l];
    z = Matrix(in.rows, sizes_[l + 1]);
    k.gemm_abt_bias(in.data.data(), params_.data() + weight_offset(l), params_.data() + bias_offset(l),
                    z.data.data(), in.rows, z.cols, in.cols);
    Matrix& out = (l + 1 < layers) ? cache.inputs[l + 1] : cache.output;
    out = z;
    if (l + 1 < layers) {
      if (hidden_ == Activation::relu) {
        for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
      } else {
        for (auto& v : out.data) v = std::tanh(v);
      }
    } else if (head_.kind == Head::Kind::bounded) {
      for (auto& v : out.data) v = head_.scale * std::tanh(v);
    }
  }
  return cache.output;
}

Matrix Mlp::forward(const Matrix& x) const {
  ForwardCache cache;
  forward(x, cache);
  return std::move(cache.output);
}

std::vector<double> Mlp::forward(const std::vector<double>& x) const {
  Matrix m(1, x.size());
  m.data = x;
  return forward(m).data;
}

Gradients Mlp::backward(const ForwardCache& cache, const Matrix& upstream,
                        bool want_param_grads) const {
  const std::size_t layers = num_layers();
  if (cache.pre.size() != layers || upstream.cols != output_dim() ||
      upstream.rows != cache.output.rows) {
    throw NumericalError("mlp backward: upstream shape does not match the forward cache");
  }
  const auto& k = kernels::active();
  Gradients g;
  if (want_param_grads) g.params.assign(params_.size(), 0.0);

  Matrix delta = upstream;
  if (head_.kind == Head::Kind::bounded) {
    const auto& z = cache.pre[layers - 1].data;
    for (std::size_t i = 0; i < delta.data.size(); ++i) {
      const double t = std::tanh(z[i]);
      delta.data[i] *= head_.scale * (1.0 - t * t);
    }
  }
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& in = cache.inputs[l];
    const std::size_t out_dim = sizes_[l + 1];
    if (want_param_grads) {
      k.gemm_atb_acc(delta.data.data(), in.data.data(), g.params.data() + weight_offset(l), delta.rows,
                     out_dim, in.cols);
      double* db = g.params.data() + bias_offset(l);
      for (std::size_t r = 0; r < delta.rows; ++r) k.axpy(1.0, delta.row(r), db, out_dim);
    }
    Matrix dx(in.rows, in.cols);
    k.gemm_ab_acc(delta.data.data(), params_.data() + weight_offset(l), dx.data.data(), delta.rows,
                  out_dim, in.cols);
    if (l > 0) {
      const auto& z = cache.pre[l - 1].data;
      if (hidden_ == Activation::relu) {
        for (std::size_t i = 0; i < dx.data.size(); ++i) {
          if (!(z[i] > 0.0)) dx.data[i] = 0.0;
        }
      } else {
        const auto& a = in.data;
        for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= 1.0 - a[i] * a[i];
      }
    }
    delta = std::move(dx);
  }
  g.input = std::move(delta);
  return g;
}

bool Mlp::same_shape(const Mlp& other) const {
  return sizes_ == other.sizes_ && hidden_ == other.hidden_ && head_.kind == other.head_.kind;
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json j;
  j["layer_sizes"] = sizes_;
  std::vector<std::string> acts(num_layers() - 1, activation_name(hidden_));
  acts.push_back(head_.kind == Head::Kind::bounded ? "bounded" : "linear");
  j["activations"] = acts;
  j["output_scale"] = head_.scale;
  j["weights"] = nlohmann::json::array();
  j["biases"] = nlohmann::json::array();
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const auto w = params_.begin() + static_cast<std::ptrdiff_t>(weight_offset(l));
    const auto b = params_.begin() + static_cast<std::ptrdiff_t>(bias_offset(l));
    j["weights"].push_back(std::vector<double>(w, b));
    j["biases"].push_back(std::vector<double>(b, b + static_cast<std::ptrdiff_t>(sizes_[l + 1])));
  }
  return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  try {
    const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    const auto acts = j.at("activations").get<std::vector<std::string>>();
    if (sizes.size() < 2 || acts.size() != sizes.size() - 1) {
      throw UsageError("checkpoint: activations do not match layer_sizes");
    }
    Activation hidden = Activation::relu;
    if (acts.size() > 1) {
      if (acts[0] == "tanh") {
        hidden = Activation::tanh;
      } else if (acts[0] != "relu") {
        throw UsageError("checkpoint: unknown activation '" + acts[0] + "'");
      }
      for (std::size_t i = 1; i + 1 < acts.size(); ++i) {
        if (acts[i] != acts[0]) throw UsageError("checkpoint: mixed hidden activations");
      }
    }
    Head head;
    if (acts.back() == "bounded") {
      head = Head::bounded(j.at("output_scale").get<double>());
    } else if (acts.back() != "linear") {
      throw UsageError("checkpoint: unknown output head '" + acts.back() + "'");
    }
    Mlp net(sizes, hidden, head);
    const auto& ws = j.at("weights");
    const auto& bs = j.at("biases");
    if (ws.size() != net.num_layers() || bs.size() != net.num_layers()) {
      throw UsageError("checkpoint: wrong number of weight/bias arrays");
    }
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      const auto w = ws[l].get<std::vector<double>>();
      const auto b = bs[l].get<std::vector<double>>();
      if (w.size() != sizes[l + 1] * sizes[l] || b.size() != sizes[l + 1]) {
        throw UsageError("checkpoint: layer " + std::to_string(l) + " has the wrong shape");
      }
      std::copy(w.begin(), w.end(), net.params_.begin() + static_cast<std::ptrdiff_t>(net.weight_offset(l)));
      std::copy(b.begin(), b.end(), net.params_.begin() + static_cast<std::ptrdiff_t>(net.bias_offset(l)));
    }
    check_finite(net.params_, "checkpoint");
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("checkpoint: ") + e.what());
  }
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& st) {
  if (grads.size() != params.size() || st.m.size() != params.size() || st.v.size() != params.size()) {
    throw NumericalError("adam_step: parameter, gradient and moment sizes differ");
  }
  check_finite(grads, "adam_step gradient");
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  kernels::active().adam(params.data(), grads.data(), st.m.data(), st.v.data(), params.size(), st.lr,
                         st.beta1, st.beta2, st.eps, bc1, bc2);
}

void polyak_update(Mlp& target, const Mlp& online, double tau) {
  if (!target.same_shape(online)) throw NumericalError("polyak_update: network shapes differ");
  if (!(tau >= 0.0 && tau <= 1.0)) throw UsageError("polyak_update: tau must lie in [0, 1]");
  kernels::active().lerp(tau, online.params().data(), target.params().data(), target.params().size());
}

}  // namespace sdpg::nn
