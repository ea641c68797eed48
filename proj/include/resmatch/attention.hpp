#pragma once

#include <span>

#include "resmatch/layers.hpp"

namespace resmatch {

// One multi-head attention block with the residual feed-forward head:
// out = x + f3(x ‖ W(x̃)) where x̃ concatenates the per-head attention
// outputs. Heads use separate query/key/value projections c -> c/H.
struct AttentionParams {
  std::vector<LinearLayer> wq, wk, wv;  // per head
  LinearLayer w_merge;                  // c -> c
  Mlp f3;                               // 2c -> 2c -> c
  std::size_t heads() const { return wq.size(); }
  std::size_t channels() const { return w_merge.in_dim(); }
};

AttentionParams make_attention(std::size_t channels, std::size_t heads, double slope);

// Post-softmax weights per head, filled when a capture sink is passed to the
// immediate-mode overloads.
struct AttnCapture {
  std::vector<Tensor2> head_weights;
};

// bypass: one modulated score matrix per head (n_q×n_k), added to the scaled
// logits before the softmax. Empty span = vanilla attention.
Tape::Id attend(Tape& t, Tape::Id x, Tape::Id y, AttentionParams& p, std::span<const Tape::Id> bypass);
Tape::Id self_attend(Tape& t, Tape::Id x, AttentionParams& p, std::span<const Tape::Id> bypass);
Tape::Id cross_attend(Tape& t, Tape::Id x, Tape::Id y, AttentionParams& p, std::span<const Tape::Id> bypass);

Tensor2 attend(const AttentionParams& p, const Tensor2& x, const Tensor2& y, std::span<const Tensor2> bypass,
               AttnCapture* capture = nullptr);
Tensor2 self_attend(const AttentionParams& p, const Tensor2& x, std::span<const Tensor2> bypass,
                    AttnCapture* capture = nullptr);
Tensor2 cross_attend(const AttentionParams& p, const Tensor2& x, const Tensor2& y, std::span<const Tensor2> bypass,
                     AttnCapture* capture = nullptr);

// Residual head shared with the sparse path: x + f3(x ‖ W(x̃)).
Tape::Id attend_tail(Tape& t, Tape::Id x, Tape::Id x_tilde, AttentionParams& p);
Tensor2 attend_tail(const AttentionParams& p, const Tensor2& x, const Tensor2& x_tilde);

}  // namespace resmatch
