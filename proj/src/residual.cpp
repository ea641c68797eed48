#include "resmatch/residual.hpp"

#include <cstdint>

#include "resmatch/kernels.hpp"

namespace resmatch {

BypassParams make_bypass(std::size_t channels, std::size_t bypass_dim, std::size_t layers, std::size_t heads,
                         double slope) {
  if (bypass_dim == 0) throw ConfigError("bypass: bypass_dim must be >= 1");
  BypassParams p;
  p.f4 = make_mlp({channels, std::max<std::size_t>(channels / 2, bypass_dim), bypass_dim}, slope);
  p.f5 = make_mlp({2, bypass_dim, bypass_dim}, slope);
  p.f6 = make_mlp({channels, std::max<std::size_t>(channels / 2, bypass_dim), bypass_dim}, slope);
  p.f7 = make_mlp({channels, std::max<std::size_t>(channels / 2, bypass_dim), bypass_dim}, slope);
  auto scalars = [&] {
    std::vector<std::vector<Param>> v(layers);
    for (auto& row : v) {
      row.reserve(heads);
      for (std::size_t h = 0; h < heads; ++h) row.emplace_back(Tensor2(1, 1));
    }
    return v;
  };
  p.lambda_d = scalars();
  p.beta_d = scalars();
  p.lambda_p = scalars();
  p.beta_p = scalars();
  return p;
}

Tape::Id descriptor_similarity(Tape& t, Tape::Id desc_a, Tape::Id desc_b, Mlp& f4) {
  return t.matmul_nt(mlp_forward(t, desc_a, f4), mlp_forward(t, desc_b, f4));
}

Tensor2 descriptor_similarity(const Mlp& f4, const Tensor2& desc_a, const Tensor2& desc_b) {
  return matmul_nt(mlp_forward(f4, desc_a), mlp_forward(f4, desc_b));
}

Tape::Id position_similarity(Tape& t, Tape::Id pos, Mlp& f5) {
  Tape::Id f = mlp_forward(t, pos, f5);
  return t.matmul_nt(f, f);
}

Tensor2 position_similarity(const Mlp& f5, const Tensor2& pos) {
  const Tensor2 f = mlp_forward(f5, pos);
  return matmul_nt(f, f);
}

Tape::Id modulate(Tape& t, Tape::Id s, Param& lambda, Param& beta, double slope) {
  return t.lrelu(t.scalar_affine(s, t.param(lambda), t.param(beta)), slope);
}

Tensor2 modulate(const Tensor2& s, double lambda, double beta, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("modulate: slope must lie in (0, 1)");
  Tensor2 out(s.rows, s.cols);
  const bool par = s.size() > kOmpMinWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(s.size()); ++i) {
    const double v = lambda * s.data[static_cast<std::size_t>(i)] + beta;
    out.data[static_cast<std::size_t>(i)] = v >= 0.0 ? v : slope * v;
  }
  return out;
}

void adjust(Tape& t, BypassNodes& state, Tape::Id feats_a, Tape::Id feats_b, Mlp& f6, Mlp& f7) {
  if (state.adjusted) throw UsageError("adjust: bypass scores already adjusted for this pair");
  Tape::Id da = mlp_forward(t, feats_a, f6);
  Tape::Id db = mlp_forward(t, feats_b, f6);
  state.s_d = t.add(state.s_d, t.matmul_nt(da, db));
  state.s_d_t = t.transpose(state.s_d);
  Tape::Id pa = mlp_forward(t, feats_a, f7);
  state.s_p_a = t.add(state.s_p_a, t.matmul_nt(pa, pa));
  Tape::Id pb = mlp_forward(t, feats_b, f7);
  state.s_p_b = t.add(state.s_p_b, t.matmul_nt(pb, pb));
  state.adjusted = true;
}

void adjust(BypassMats& state, const Tensor2& feats_a, const Tensor2& feats_b, const Mlp& f6, const Mlp& f7) {
  if (state.adjusted) throw UsageError("adjust: bypass scores already adjusted for this pair");
  auto add_nt = [](Tensor2& dst, const Tensor2& f, const Tensor2& g) {
    const Tensor2 prod = matmul_nt(f, g);
    if (!dst.same_shape(prod)) throw DimError("adjust: decoded score shape mismatch");
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += prod.data[i];
  };
  const Tensor2 da = mlp_forward(f6, feats_a);
  const Tensor2 db = mlp_forward(f6, feats_b);
  add_nt(state.s_d, da, db);
  state.s_d_t = transpose(state.s_d);
  const Tensor2 pa = mlp_forward(f7, feats_a);
  add_nt(state.s_p_a, pa, pa);
  const Tensor2 pb = mlp_forward(f7, feats_b);
  add_nt(state.s_p_b, pb, pb);
  state.adjusted = true;
}

}  // namespace resmatch
