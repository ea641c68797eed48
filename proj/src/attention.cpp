#include "resmatch/attention.hpp"

#include <cmath>

#include "resmatch/kernels.hpp"

namespace resmatch {

AttentionParams make_attention(std::size_t channels, std::size_t heads, double slope) {
  if (heads == 0 || channels % heads != 0)
    throw ConfigError("attention: heads must divide channels (" + std::to_string(channels) + "/" +
                      std::to_string(heads) + ")");
  AttentionParams p;
  const std::size_t d = channels / heads;
  for (std::size_t h = 0; h < heads; ++h) {
    p.wq.emplace_back(d, channels);
    p.wk.emplace_back(d, channels);
    p.wv.emplace_back(d, channels);
  }
  p.w_merge = LinearLayer(channels, channels);
  p.f3 = make_mlp({2 * channels, 2 * channels, channels}, slope);
  return p;
}

namespace {

void check_attend_inputs(const AttentionParams& p, std::size_t xc, std::size_t yc, std::size_t nb) {
  if (xc != p.channels() || yc != p.channels())
    throw DimError("attend: feature width does not match params (c=" + std::to_string(p.channels()) + ")");
  if (nb != 0 && nb != p.heads()) throw DimError("attend: bypass head-count mismatch");
}

}  // namespace

Tape::Id attend_tail(Tape& t, Tape::Id x, Tape::Id x_tilde, AttentionParams& p) {
  Tape::Id merged = linear_forward(t, x_tilde, p.w_merge);
  const Tape::Id cat[] = {x, merged};
  return t.add(x, mlp_forward(t, t.concat_cols(cat), p.f3));
}

Tensor2 attend_tail(const AttentionParams& p, const Tensor2& x, const Tensor2& x_tilde) {
  const Tensor2 merged = linear_forward(p.w_merge, x_tilde);
  Tensor2 cat(x.rows, x.cols + merged.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) cat(i, j) = x(i, j);
    for (std::size_t j = 0; j < merged.cols; ++j) cat(i, x.cols + j) = merged(i, j);
  }
  Tensor2 out = mlp_forward(p.f3, cat);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += x.data[i];
  return out;
}

Tape::Id attend(Tape& t, Tape::Id x, Tape::Id y, AttentionParams& p, std::span<const Tape::Id> bypass) {
  check_attend_inputs(p, t.val(x).cols, t.val(y).cols, bypass.size());
  const std::size_t heads = p.heads();
  const double sm_scale = std::sqrt(static_cast<double>(p.channels() / heads));
  std::vector<Tape::Id> head_out;
  head_out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tape::Id q = linear_forward(t, x, p.wq[h]);
    Tape::Id k = linear_forward(t, y, p.wk[h]);
    Tape::Id v = linear_forward(t, y, p.wv[h]);
    Tape::Id s = t.scale(t.matmul_nt(q, k), 1.0 / sm_scale);
    if (!bypass.empty()) {
      if (!t.val(bypass[h]).same_shape(t.val(s))) throw DimError("attend: bypass shape mismatch");
      s = t.add(s, bypass[h]);
    }
    head_out.push_back(t.matmul(t.softmax_rows(s, 1.0), v));
  }
  return attend_tail(t, x, t.concat_cols(head_out), p);
}

Tape::Id self_attend(Tape& t, Tape::Id x, AttentionParams& p, std::span<const Tape::Id> bypass) {
  return attend(t, x, x, p, bypass);
}

Tape::Id cross_attend(Tape& t, Tape::Id x, Tape::Id y, AttentionParams& p, std::span<const Tape::Id> bypass) {
  return attend(t, x, y, p, bypass);
}

Tensor2 attend(const AttentionParams& p, const Tensor2& x, const Tensor2& y, std::span<const Tensor2> bypass,
               AttnCapture* capture) {
  check_attend_inputs(p, x.cols, y.cols, bypass.size());
  const std::size_t heads = p.heads();
  const std::size_t d = p.channels() / heads;
  const double sm_scale = std::sqrt(static_cast<double>(d));
  Tensor2 x_tilde(x.rows, p.channels());
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor2 q = linear_forward(p.wq[h], x);
    const Tensor2 k = linear_forward(p.wk[h], y);
    const Tensor2 v = linear_forward(p.wv[h], y);
    Tensor2 s = matmul_nt(q, k);
    const double inv = 1.0 / sm_scale;
    for (double& e : s.data) e *= inv;
    if (!bypass.empty()) {
      if (!bypass[h].same_shape(s)) throw DimError("attend: bypass shape mismatch");
      for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] += bypass[h].data[i];
    }
    const Tensor2 w = softmax_rows(s, 1.0);
    if (capture) capture->head_weights.push_back(w);
    const Tensor2 ho = matmul(w, v);
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t j = 0; j < d; ++j) x_tilde(i, h * d + j) = ho(i, j);
  }
  return attend_tail(p, x, x_tilde);
}

Tensor2 self_attend(const AttentionParams& p, const Tensor2& x, std::span<const Tensor2> bypass,
                    AttnCapture* capture) {
  return attend(p, x, x, bypass, capture);
}

Tensor2 cross_attend(const AttentionParams& p, const Tensor2& x, const Tensor2& y, std::span<const Tensor2> bypass,
                     AttnCapture* capture) {
  return attend(p, x, y, bypass, capture);
}

}  // namespace resmatch
