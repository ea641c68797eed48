#include "resmatch/tape.hpp"

#include <cmath>
#include <memory>

#include "resmatch/kernels.hpp"
#include "resmatch/layers.hpp"

namespace resmatch {

namespace {

void add_into(Tensor2& dst, const Tensor2& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

Tape::Id Tape::push(Tensor2 val) {
  Node n;
  n.value = std::move(val);
  if (grad_enabled_) n.grad = Tensor2(n.value.rows, n.value.cols);
  bytes_ += n.value.size() * sizeof(double) * (grad_enabled_ ? 2 : 1);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

void Tape::check(Id id) const {
  if (id >= nodes_.size()) throw UsageError("tape: invalid node id");
}

Tape::Id Tape::input(Tensor2 v) {
  if (v.size() == 0) throw DimError("tape input: empty tensor");
  return push(std::move(v));
}

Tape::Id Tape::param(Param& p) {
  Id id = push(p.value);
  if (grad_enabled_) param_links_.emplace_back(id, &p);
  return id;
}

const Tensor2& Tape::val(Id id) const {
  check(id);
  return nodes_[id].value;
}

const Tensor2& Tape::grad(Id id) const {
  check(id);
  if (!ran_backward_) throw UsageError("tape: grad requested before backward");
  return nodes_[id].grad;
}

Tape::Id Tape::matmul(Id a, Id b) {
  check(a);
  check(b);
  Id out = push(resmatch::matmul(v(a), v(b)));
  record([this, a, b, out] {
    add_into(g(a), resmatch::matmul_nt(g(out), v(b)));  // G·Bᵀ
    add_into(g(b), resmatch::matmul_tn(v(a), g(out)));  // Aᵀ·G
  });
  return out;
}

Tape::Id Tape::matmul_nt(Id a, Id b) {
  check(a);
  check(b);
  Id out = push(resmatch::matmul_nt(v(a), v(b)));
  record([this, a, b, out] {
    add_into(g(a), resmatch::matmul(g(out), v(b)));     // G·B
    add_into(g(b), resmatch::matmul_tn(g(out), v(a)));  // Gᵀ·A
  });
  return out;
}

Tape::Id Tape::transpose(Id a) {
  check(a);
  Id out = push(resmatch::transpose(v(a)));
  record([this, a, out] { add_into(g(a), resmatch::transpose(g(out))); });
  return out;
}

Tape::Id Tape::add(Id a, Id b) {
  check(a);
  check(b);
  if (!v(a).same_shape(v(b))) throw DimError("tape add: " + shape_str(v(a)) + " vs " + shape_str(v(b)));
  Tensor2 out = v(a);
  add_into(out, v(b));
  Id id = push(std::move(out));
  record([this, a, b, id] {
    add_into(g(a), g(id));
    add_into(g(b), g(id));
  });
  return id;
}

Tape::Id Tape::add_bias(Id x, Id bias) {
  check(x);
  check(bias);
  const Tensor2& b = v(bias);
  if (b.rows != 1 || b.cols != v(x).cols)
    throw DimError("tape add_bias: bias " + shape_str(b) + " for " + shape_str(v(x)));
  Tensor2 out = v(x);
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += b(0, j);
  Id id = push(std::move(out));
  record([this, x, bias, id] {
    add_into(g(x), g(id));
    Tensor2& gb = g(bias);
    const Tensor2& go = g(id);
    for (std::size_t i = 0; i < go.rows; ++i)
      for (std::size_t j = 0; j < go.cols; ++j) gb(0, j) += go(i, j);
  });
  return id;
}

Tape::Id Tape::lrelu(Id x, double slope) {
  check(x);
  Id out = push(resmatch::lrelu(v(x), slope));
  record([this, x, out, slope] {
    Tensor2& gx = g(x);
    const Tensor2& go = g(out);
    const Tensor2& xv = v(x);
    for (std::size_t i = 0; i < gx.data.size(); ++i)
      gx.data[i] += go.data[i] * (xv.data[i] >= 0.0 ? 1.0 : slope);
  });
  return out;
}

Tape::Id Tape::scale(Id x, double s) {
  check(x);
  Tensor2 out = v(x);
  for (double& e : out.data) e *= s;
  Id id = push(std::move(out));
  record([this, x, id, s] {
    Tensor2& gx = g(x);
    const Tensor2& go = g(id);
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += s * go.data[i];
  });
  return id;
}

Tape::Id Tape::scalar_affine(Id x, Id lam, Id beta) {
  check(x);
  check(lam);
  check(beta);
  if (v(lam).size() != 1 || v(beta).size() != 1) throw DimError("tape scalar_affine: lam/beta must be 1x1");
  const double lv = v(lam).data[0];
  const double bv = v(beta).data[0];
  Tensor2 out = v(x);
  for (double& e : out.data) e = lv * e + bv;
  Id id = push(std::move(out));
  record([this, x, lam, beta, id, lv] {
    const Tensor2& go = g(id);
    const Tensor2& xv = v(x);
    Tensor2& gx = g(x);
    double dl = 0.0, db = 0.0;
    for (std::size_t i = 0; i < go.data.size(); ++i) {
      dl += go.data[i] * xv.data[i];
      db += go.data[i];
      gx.data[i] += lv * go.data[i];
    }
    g(lam).data[0] += dl;
    g(beta).data[0] += db;
  });
  return id;
}

Tape::Id Tape::softmax_rows(Id x, double sm_scale) {
  check(x);
  Id out = push(resmatch::softmax_rows(v(x), sm_scale));
  record([this, x, out, sm_scale] {
    // dx = (y ⊙ (g − <g, y>_row)) / scale
    const Tensor2& y = v(out);
    const Tensor2& go = g(out);
    Tensor2& gx = g(x);
    const double inv = 1.0 / sm_scale;
    for (std::size_t i = 0; i < y.rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols; ++j) dot += go(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols; ++j) gx(i, j) += inv * y(i, j) * (go(i, j) - dot);
    }
  });
  return out;
}

Tape::Id Tape::concat_cols(std::span<const Id> parts) {
  if (parts.empty()) throw DimError("tape concat_cols: no parts");
  std::size_t rows = 0, cols = 0;
  for (Id p : parts) {
    check(p);
    if (rows == 0)
      rows = v(p).rows;
    else if (v(p).rows != rows)
      throw DimError("tape concat_cols: row mismatch");
    cols += v(p).cols;
  }
  Tensor2 out(rows, cols);
  std::size_t off = 0;
  for (Id p : parts) {
    const Tensor2& t = v(p);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < t.cols; ++j) out(i, off + j) = t(i, j);
    off += t.cols;
  }
  Id id = push(std::move(out));
  std::vector<Id> ps(parts.begin(), parts.end());
  record([this, ps, id] {
    const Tensor2& go = g(id);
    std::size_t off2 = 0;
    for (Id p : ps) {
      Tensor2& gp = g(p);
      for (std::size_t i = 0; i < gp.rows; ++i)
        for (std::size_t j = 0; j < gp.cols; ++j) gp(i, j) += go(i, off2 + j);
      off2 += gp.cols;
    }
  });
  return id;
}

Tape::Id Tape::exp_elem(Id x) {
  check(x);
  Tensor2 out = v(x);
  for (double& e : out.data) e = std::exp(e);
  Id id = push(std::move(out));
  record([this, x, id] {
    const Tensor2& y = v(id);
    const Tensor2& go = g(id);
    Tensor2& gx = g(x);
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += go.data[i] * y.data[i];
  });
  return id;
}

Tape::Id Tape::logsumexp_rows(Id x) {
  check(x);
  const Tensor2& xv = v(x);
  Tensor2 out(xv.rows, 1);
  for (std::size_t i = 0; i < xv.rows; ++i) {
    const double* r = xv.row(i);
    double mx = r[0];
    for (std::size_t j = 1; j < xv.cols; ++j) mx = std::max(mx, r[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < xv.cols; ++j) s += std::exp(r[j] - mx);
    out(i, 0) = mx + std::log(s);
  }
  Id id = push(std::move(out));
  record([this, x, id] {
    const Tensor2& xv2 = v(x);
    const Tensor2& y = v(id);
    const Tensor2& go = g(id);
    Tensor2& gx = g(x);
    for (std::size_t i = 0; i < xv2.rows; ++i)
      for (std::size_t j = 0; j < xv2.cols; ++j) gx(i, j) += go(i, 0) * std::exp(xv2(i, j) - y(i, 0));
  });
  return id;
}

Tape::Id Tape::logsumexp_cols(Id x) {
  check(x);
  const Tensor2& xv = v(x);
  Tensor2 out(1, xv.cols);
  for (std::size_t j = 0; j < xv.cols; ++j) {
    double mx = xv(0, j);
    for (std::size_t i = 1; i < xv.rows; ++i) mx = std::max(mx, xv(i, j));
    double s = 0.0;
    for (std::size_t i = 0; i < xv.rows; ++i) s += std::exp(xv(i, j) - mx);
    out(0, j) = mx + std::log(s);
  }
  Id id = push(std::move(out));
  record([this, x, id] {
    const Tensor2& xv2 = v(x);
    const Tensor2& y = v(id);
    const Tensor2& go = g(id);
    Tensor2& gx = g(x);
    for (std::size_t i = 0; i < xv2.rows; ++i)
      for (std::size_t j = 0; j < xv2.cols; ++j) gx(i, j) += go(0, j) * std::exp(xv2(i, j) - y(0, j));
  });
  return id;
}

Tape::Id Tape::add_col(Id x, Id c) {
  check(x);
  check(c);
  const Tensor2& cv = v(c);
  if (cv.cols != 1 || cv.rows != v(x).rows)
    throw DimError("tape add_col: column " + shape_str(cv) + " for " + shape_str(v(x)));
  Tensor2 out = v(x);
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += cv(i, 0);
  Id id = push(std::move(out));
  record([this, x, c, id] {
    const Tensor2& go = g(id);
    add_into(g(x), go);
    Tensor2& gc = g(c);
    for (std::size_t i = 0; i < go.rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < go.cols; ++j) s += go(i, j);
      gc(i, 0) += s;
    }
  });
  return id;
}

Tape::Id Tape::add_row(Id x, Id r) {
  check(x);
  check(r);
  const Tensor2& rv = v(r);
  if (rv.rows != 1 || rv.cols != v(x).cols)
    throw DimError("tape add_row: row " + shape_str(rv) + " for " + shape_str(v(x)));
  Tensor2 out = v(x);
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += rv(0, j);
  Id id = push(std::move(out));
  record([this, x, r, id] {
    const Tensor2& go = g(id);
    add_into(g(x), go);
    Tensor2& gr = g(r);
    for (std::size_t i = 0; i < go.rows; ++i)
      for (std::size_t j = 0; j < go.cols; ++j) gr(0, j) += go(i, j);
  });
  return id;
}

Tape::Id Tape::const_sub(Tensor2 c, Id x) {
  check(x);
  if (!c.same_shape(v(x))) throw DimError("tape const_sub: " + shape_str(c) + " vs " + shape_str(v(x)));
  Tensor2 out = std::move(c);
  const Tensor2& xv = v(x);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= xv.data[i];
  Id id = push(std::move(out));
  record([this, x, id] {
    const Tensor2& go = g(id);
    Tensor2& gx = g(x);
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] -= go.data[i];
  });
  return id;
}

Tape::Id Tape::augment_dustbin(Id scores, Id z) {
  check(scores);
  check(z);
  if (v(z).size() != 1) throw DimError("tape augment_dustbin: dustbin must be 1x1");
  const Tensor2& s = v(scores);
  const double zv = v(z).data[0];
  Tensor2 out(s.rows + 1, s.cols + 1, zv);
  for (std::size_t i = 0; i < s.rows; ++i)
    for (std::size_t j = 0; j < s.cols; ++j) out(i, j) = s(i, j);
  Id id = push(std::move(out));
  record([this, scores, z, id] {
    const Tensor2& go = g(id);
    Tensor2& gs = g(scores);
    for (std::size_t i = 0; i < gs.rows; ++i)
      for (std::size_t j = 0; j < gs.cols; ++j) gs(i, j) += go(i, j);
    double dz = 0.0;
    const std::size_t m = gs.rows, n = gs.cols;
    for (std::size_t j = 0; j <= n; ++j) dz += go(m, j);
    for (std::size_t i = 0; i < m; ++i) dz += go(i, n);
    g(z).data[0] += dz;
  });
  return id;
}

Tape::Id Tape::gather_cols(Id x, std::vector<std::uint32_t> idx, std::size_t k) {
  check(x);
  const Tensor2& xv = v(x);
  if (k == 0 || idx.size() != xv.rows * k) throw DimError("tape gather_cols: index table shape mismatch");
  for (std::uint32_t j : idx)
    if (j >= xv.cols) throw UsageError("tape gather_cols: index out of range");
  Tensor2 out(xv.rows, k);
  for (std::size_t i = 0; i < xv.rows; ++i)
    for (std::size_t j = 0; j < k; ++j) out(i, j) = xv(i, idx[i * k + j]);
  Id id = push(std::move(out));
  auto shared = std::make_shared<std::vector<std::uint32_t>>(std::move(idx));
  record([this, x, id, shared, k] {
    const Tensor2& go = g(id);
    Tensor2& gx = g(x);
    const auto& ix = *shared;
    // row i of gx is touched only by query i: parallel-safe and order-fixed
    for (std::size_t i = 0; i < go.rows; ++i)
      for (std::size_t j = 0; j < k; ++j) gx(i, ix[i * k + j]) += go(i, j);
  });
  return id;
}

Tape::Id Tape::sparse_head_attend(Id q, Id kk, Id vv, Id bypass, std::vector<std::uint32_t> idx, std::size_t k,
                                  double sm_scale) {
  check(q);
  check(kk);
  check(vv);
  const Tensor2& qv = v(q);
  const Tensor2& kv = v(kk);
  const Tensor2& vvv = v(vv);
  if (qv.cols != kv.cols || kv.rows != vvv.rows || kv.cols != vvv.cols)
    throw DimError("tape sparse_head_attend: q/k/v shape mismatch");
  if (k == 0 || idx.size() != qv.rows * k) throw DimError("tape sparse_head_attend: index table shape mismatch");
  for (std::uint32_t j : idx)
    if (j >= kv.rows) throw UsageError("tape sparse_head_attend: neighbor index out of range");
  const Tensor2* bp = nullptr;
  if (bypass != kNone) {
    check(bypass);
    bp = &v(bypass);
    if (bp->rows != qv.rows || bp->cols != k) throw DimError("tape sparse_head_attend: bypass shape mismatch");
  }
  const double inv_scale = 1.0 / sm_scale;
  const std::size_t d = qv.cols;

  Tensor2 out(qv.rows, d);
  auto weights = std::make_shared<Tensor2>(qv.rows, k);
  for (std::size_t i = 0; i < qv.rows; ++i) {
    const double* qrow = qv.row(i);
    double* wrow = weights->row(i);
    double mx = -1e308;
    for (std::size_t j = 0; j < k; ++j) {
      const double* krow = kv.row(idx[i * k + j]);
      double s = 0.0;
      for (std::size_t t = 0; t < d; ++t) s += qrow[t] * krow[t];
      s *= inv_scale;
      if (bp) s += (*bp)(i, j);
      wrow[j] = s;
      mx = std::max(mx, s);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      wrow[j] = std::exp(wrow[j] - mx);
      sum += wrow[j];
    }
    const double inv = 1.0 / sum;
    double* orow = out.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      wrow[j] *= inv;
      const double* vrow = vvv.row(idx[i * k + j]);
      for (std::size_t t = 0; t < d; ++t) orow[t] += wrow[j] * vrow[t];
    }
  }
  Id id = push(std::move(out));
  auto shared = std::make_shared<std::vector<std::uint32_t>>(std::move(idx));
  record([this, q, kk, vv, bypass, id, shared, weights, k, inv_scale] {
    const Tensor2& go = g(id);
    const Tensor2& qv2 = v(q);
    const Tensor2& kv2 = v(kk);
    const Tensor2& vv2 = v(vv);
    Tensor2& gq = g(q);
    Tensor2& gk = g(kk);
    Tensor2& gv = g(vv);
    Tensor2* gb = bypass != kNone ? &g(bypass) : nullptr;
    const auto& ix = *shared;
    const Tensor2& w = *weights;
    const std::size_t d = qv2.cols;
    std::vector<double> ds(k);
    // scatter adds into gk/gv rows collide across queries; the loop stays
    // serial so accumulation order is fixed
    for (std::size_t i = 0; i < qv2.rows; ++i) {
      const double* grow = go.row(i);
      const double* wrow = w.row(i);
      // dw_j = <g_i, v_nj>, then softmax backward within the row
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double* vrow = vv2.row(ix[i * k + j]);
        double dw = 0.0;
        for (std::size_t t = 0; t < d; ++t) dw += grow[t] * vrow[t];
        ds[j] = dw;
        dot += dw * wrow[j];
      }
      for (std::size_t j = 0; j < k; ++j) ds[j] = wrow[j] * (ds[j] - dot);
      const double* qrow = qv2.row(i);
      double* gqrow = gq.row(i);
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t nj = ix[i * k + j];
        const double dsj = ds[j];
        if (gb) (*gb)(i, j) += dsj;
        const double scaled = dsj * inv_scale;
        const double* krow = kv2.row(nj);
        double* gkrow = gk.row(nj);
        double* gvrow = gv.row(nj);
        const double wj = wrow[j];
        for (std::size_t t = 0; t < d; ++t) {
          gqrow[t] += scaled * krow[t];
          gkrow[t] += scaled * qrow[t];
          gvrow[t] += wj * grow[t];
        }
      }
    }
  });
  return id;
}

Tape::Id Tape::weighted_sum(Id x, Tensor2 coef) {
  check(x);
  if (!coef.same_shape(v(x))) throw DimError("tape weighted_sum: coef " + shape_str(coef) + " vs " + shape_str(v(x)));
  double s = 0.0;
  const Tensor2& xv = v(x);
  for (std::size_t i = 0; i < xv.data.size(); ++i) s += coef.data[i] * xv.data[i];
  Tensor2 out(1, 1);
  out.data[0] = s;
  Id id = push(std::move(out));
  auto shared = std::make_shared<Tensor2>(std::move(coef));
  record([this, x, id, shared] {
    const double go = g(id).data[0];
    Tensor2& gx = g(x);
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += go * shared->data[i];
  });
  return id;
}

Tape::Id Tape::neg_mean_entries(Id x, std::vector<std::pair<std::uint32_t, std::uint32_t>> cells) {
  check(x);
  if (cells.empty()) throw UsageError("tape neg_mean_entries: no cells");
  const Tensor2& xv = v(x);
  double s = 0.0;
  for (auto [i, j] : cells) {
    if (i >= xv.rows || j >= xv.cols) throw DimError("tape neg_mean_entries: cell out of range");
    s += xv(i, j);
  }
  const double inv_n = 1.0 / static_cast<double>(cells.size());
  Tensor2 out(1, 1);
  out.data[0] = -s * inv_n;
  Id id = push(std::move(out));
  auto shared = std::make_shared<std::vector<std::pair<std::uint32_t, std::uint32_t>>>(std::move(cells));
  record([this, x, id, shared, inv_n] {
    const double go = g(id).data[0];
    Tensor2& gx = g(x);
    for (auto [i, j] : *shared) gx(i, j) -= go * inv_n;
  });
  return id;
}

void Tape::backward(Id root, double seed) {
  check(root);
  if (!grad_enabled_) throw UsageError("tape backward: gradients are disabled on this tape");
  if (ran_backward_) throw UsageError("tape backward: already ran on this tape");
  if (v(root).size() != 1) throw UsageError("tape backward: root must be a 1x1 scalar");
  if (!std::isfinite(seed)) throw NumericError("tape backward: non-finite seed");
  ran_backward_ = true;
  g(root).data[0] += seed;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  for (auto& [id, p] : param_links_) add_into(p->grad, g(id));
}

}  // namespace resmatch
