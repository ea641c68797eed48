#include "resmatch/encoder.hpp"

namespace resmatch {

EncoderParams make_encoder(std::size_t channels, double slope) {
  if (channels < 2) throw ConfigError("encoder: channels must be >= 2");
  EncoderParams p;
  p.f1 = make_mlp({channels, channels, channels}, slope);
  p.f2 = make_mlp({2, channels / 2, channels, channels}, slope);
  return p;
}

Tape::Id fuse(Tape& t, Tape::Id desc, Tape::Id pos, EncoderParams& p) {
  return t.add(mlp_forward(t, desc, p.f1), mlp_forward(t, pos, p.f2));
}

Tensor2 fuse(const EncoderParams& p, const Tensor2& desc, const Tensor2& pos) {
  Tensor2 a = mlp_forward(p.f1, desc);
  const Tensor2 b = mlp_forward(p.f2, pos);
  if (!a.same_shape(b)) throw DimError("fuse: branch outputs differ");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  return a;
}

}  // namespace resmatch
