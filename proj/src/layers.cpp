#include "resmatch/layers.hpp"

#include <cmath>

#include "resmatch/kernels.hpp"

namespace resmatch {

Mlp make_mlp(std::initializer_list<std::size_t> dims, double slope) {
  if (dims.size() < 2) throw ConfigError("make_mlp: need at least input and output dims");
  Mlp m;
  m.slope = slope;
  auto it = dims.begin();
  std::size_t prev = *it++;
  for (; it != dims.end(); ++it) {
    m.layers.emplace_back(*it, prev);
    prev = *it;
  }
  return m;
}

Tape::Id linear_forward(Tape& t, Tape::Id x, LinearLayer& l) {
  if (t.val(x).cols != l.in_dim())
    throw DimError("linear: input " + shape_str(t.val(x)) + " does not match weight " + shape_str(l.weight.value));
  Tape::Id w = t.param(l.weight);
  Tape::Id b = t.param(l.bias);
  return t.add_bias(t.matmul_nt(x, w), b);
}

Tape::Id mlp_forward(Tape& t, Tape::Id x, Mlp& m) {
  Tape::Id h = x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    h = linear_forward(t, h, m.layers[i]);
    if (i + 1 < m.layers.size()) h = t.lrelu(h, m.slope);
  }
  return h;
}

Tensor2 linear_forward(const LinearLayer& l, const Tensor2& x) {
  if (x.cols != l.in_dim())
    throw DimError("linear: input " + shape_str(x) + " does not match weight " + shape_str(l.weight.value));
  Tensor2 y = matmul_nt(x, l.weight.value);
  const Tensor2& b = l.bias.value;
  for (std::size_t i = 0; i < y.rows; ++i)
    for (std::size_t j = 0; j < y.cols; ++j) y(i, j) += b(0, j);
  return y;
}

Tensor2 mlp_forward(const Mlp& m, const Tensor2& x) {
  Tensor2 h = x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    h = linear_forward(m.layers[i], h);
    if (i + 1 < m.layers.size()) h = lrelu(h, m.slope);
  }
  return h;
}

void kaiming_init(LinearLayer& l, Rng& rng, double slope) {
  const double gain = std::sqrt(2.0 / (1.0 + slope * slope));
  const double bound = gain * std::sqrt(3.0 / static_cast<double>(l.in_dim()));
  fill_uniform(l.weight.value, rng, -bound, bound);
  for (double& b : l.bias.value.data) b = 0.0;
}

void kaiming_init(Mlp& m, Rng& rng) {
  for (auto& l : m.layers) kaiming_init(l, rng, m.slope);
}

}  // namespace resmatch
