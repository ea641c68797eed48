#pragma once

#include "resmatch/layers.hpp"

namespace resmatch {

// Parameters of the two bypassing score paths: the descriptor-similarity
// score injected into cross-attention and the relative-position score
// injected into self-attention, plus the mid-network adjustment decoders and
// the per-layer/per-head affine modulation scalars.
struct BypassParams {
  Mlp f4;  // c -> c/2 -> bd   raw-descriptor encoder
  Mlp f5;  // 2 -> bd  -> bd   position encoder
  Mlp f6;  // c -> c/2 -> bd   descriptor-score adjustment decoder
  Mlp f7;  // c -> c/2 -> bd   position-score adjustment decoder
  // modulation scalars, indexed [layer][head], each a 1×1 param
  std::vector<std::vector<Param>> lambda_d, beta_d, lambda_p, beta_p;
};

BypassParams make_bypass(std::size_t channels, std::size_t bypass_dim, std::size_t layers, std::size_t heads,
                         double slope);

// Precomputed bypass scores for one image pair. s_d is n_a×n_b (s_d_t its
// transpose for the B-side queries), s_p_* are the symmetric per-image
// position scores. `adjusted` flips once after the mid-network refresh.
struct BypassNodes {
  Tape::Id s_d = Tape::kNone, s_d_t = Tape::kNone;
  Tape::Id s_p_a = Tape::kNone, s_p_b = Tape::kNone;
  bool adjusted = false;
};

struct BypassMats {
  Tensor2 s_d, s_d_t, s_p_a, s_p_b;
  bool adjusted = false;
};

// S^D = f4(D_A)·f4(D_B)ᵀ over raw descriptors
Tape::Id descriptor_similarity(Tape& t, Tape::Id desc_a, Tape::Id desc_b, Mlp& f4);
Tensor2 descriptor_similarity(const Mlp& f4, const Tensor2& desc_a, const Tensor2& desc_b);

// S^P = f5(P)·f5(P)ᵀ, symmetric by construction
Tape::Id position_similarity(Tape& t, Tape::Id pos, Mlp& f5);
Tensor2 position_similarity(const Mlp& f5, const Tensor2& pos);

// elementwise LReLU(λ·s + β); λ/β are per-layer, per-head scalars
Tape::Id modulate(Tape& t, Tape::Id s, Param& lambda, Param& beta, double slope);
Tensor2 modulate(const Tensor2& s, double lambda, double beta, double slope);

// Mid-network refresh: adds decoded current-feature similarities onto the
// initial scores and replaces them for all subsequent layers. Throws on a
// second call for the same pair.
void adjust(Tape& t, BypassNodes& state, Tape::Id feats_a, Tape::Id feats_b, Mlp& f6, Mlp& f7);
void adjust(BypassMats& state, const Tensor2& feats_a, const Tensor2& feats_b, const Mlp& f6, const Mlp& f7);

}  // namespace resmatch
