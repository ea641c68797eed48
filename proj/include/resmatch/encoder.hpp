#pragma once

#include "resmatch/layers.hpp"

namespace resmatch {

// Fuses descriptors and normalized positions into the initial features.
struct EncoderParams {
  Mlp f1;  // c -> c -> c
  Mlp f2;  // 2 -> c/2 -> c -> c
};

EncoderParams make_encoder(std::size_t channels, double slope);

// row i = f1(d_i) + f2(p_i)
Tape::Id fuse(Tape& t, Tape::Id desc, Tape::Id pos, EncoderParams& p);
Tensor2 fuse(const EncoderParams& p, const Tensor2& desc, const Tensor2& pos);

}  // namespace resmatch
