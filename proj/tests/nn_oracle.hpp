#pragma once

// Straight-line reference forward pass used as an oracle by several tests.

#include <cmath>
#include <vector>

#include "sdpg/nn.hpp"

namespace oracle {

inline std::vector<double> forward(const sdpg::nn::Mlp& net, std::vector<double> x) {
  const auto& sizes = net.layer_sizes();
  const auto& p = net.params();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t in = sizes[l], out = sizes[l + 1];
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
      double z = p[net.bias_offset(l) + o];
      for (std::size_t i = 0; i < in; ++i) z += p[net.weight_offset(l) + o * in + i] * x[i];
      const bool last = l + 2 == sizes.size();
      if (!last) {
        z = net.hidden_activation() == sdpg::nn::Activation::relu ? std::max(z, 0.0) : std::tanh(z);
      } else if (net.head().kind == sdpg::nn::Head::Kind::bounded) {
        z = net.head().scale * std::tanh(z);
      }
      y[o] = z;
    }
    x = std::move(y);
  }
  return x;
}

}  // namespace oracle
