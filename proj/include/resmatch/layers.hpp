#pragma once

#include <initializer_list>
#include <vector>

#include "resmatch/tape.hpp"
#include "resmatch/tensor.hpp"

namespace resmatch {

// Learnable tensor with its gradient slot and Adam moment buffers (sized on
// first optimizer use).
struct Param {
  Tensor2 value;
  Tensor2 grad;
  Tensor2 m;
  Tensor2 v;

  Param() = default;
  explicit Param(Tensor2 val) : value(std::move(val)), grad(value.rows, value.cols) {}

  void zero_grad() {
    for (double& g : grad.data) g = 0.0;
  }
};

// y = x·Wᵀ + b with W stored out×in.
struct LinearLayer {
  Param weight;
  Param bias;

  LinearLayer() = default;
  LinearLayer(std::size_t out, std::size_t in) : weight(Tensor2(out, in)), bias(Tensor2(1, out)) {}

  std::size_t in_dim() const { return weight.value.cols; }
  std::size_t out_dim() const { return weight.value.rows; }
};

// Stack of linear layers with LReLU between them (none after the last).
struct Mlp {
  std::vector<LinearLayer> layers;
  double slope = 0.01;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }
};

Mlp make_mlp(std::initializer_list<std::size_t> dims, double slope);

Tape::Id linear_forward(Tape& t, Tape::Id x, LinearLayer& l);
Tape::Id mlp_forward(Tape& t, Tape::Id x, Mlp& m);

Tensor2 linear_forward(const LinearLayer& l, const Tensor2& x);
Tensor2 mlp_forward(const Mlp& m, const Tensor2& x);

// Kaiming-uniform weight init for LReLU nonlinearity; biases stay zero.
void kaiming_init(LinearLayer& l, Rng& rng, double slope);
void kaiming_init(Mlp& m, Rng& rng);

}  // namespace resmatch
