#include "resmatch/kernels.hpp"

#include <cmath>
#include <cstdint>

namespace resmatch {

namespace {

using std::int64_t;

void require(bool ok, const std::string& msg) {
  if (!ok) throw DimError(msg);
}

// c[i,:] += a[i,:]·b  (b row-major, inner loop contiguous)
inline void matmul_row(const Tensor2& a, const Tensor2& b, Tensor2& c, std::size_t i) {
  const double* arow = a.row(i);
  double* crow = c.row(i);
  for (std::size_t k = 0; k < a.cols; ++k) {
    const double av = arow[k];
    const double* brow = b.row(k);
    for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
  }
}

// c[i,j] = dot(a[i,:], b[j,:])
inline void matmul_nt_row(const Tensor2& a, const Tensor2& b, Tensor2& c, std::size_t i) {
  const double* arow = a.row(i);
  double* crow = c.row(i);
  for (std::size_t j = 0; j < b.rows; ++j) {
    const double* brow = b.row(j);
    double acc = 0.0;
    for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
    crow[j] = acc;
  }
}

// c[i,:] = Σ_k a[k,i]·b[k,:]
inline void matmul_tn_row(const Tensor2& a, const Tensor2& b, Tensor2& c, std::size_t i) {
  double* crow = c.row(i);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double av = a(k, i);
    const double* brow = b.row(k);
    for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
  }
}

inline void softmax_row(const Tensor2& s, Tensor2& out, double inv_scale, std::size_t i) {
  const double* srow = s.row(i);
  double* orow = out.row(i);
  double mx = srow[0] * inv_scale;
  for (std::size_t j = 1; j < s.cols; ++j) mx = std::max(mx, srow[j] * inv_scale);
  double sum = 0.0;
  for (std::size_t j = 0; j < s.cols; ++j) {
    const double e = std::exp(srow[j] * inv_scale - mx);
    orow[j] = e;
    sum += e;
  }
  const double inv = 1.0 / sum;
  for (std::size_t j = 0; j < s.cols; ++j) orow[j] *= inv;
}

}  // namespace

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  require(a.cols == b.rows, "matmul: inner dims differ, " + shape_str(a) + " x " + shape_str(b));
  Tensor2 c(a.rows, b.cols);
  const bool par = a.rows * a.cols * b.cols > kOmpMinWork;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t i = 0; i < static_cast<int64_t>(a.rows); ++i) matmul_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  require(a.cols == b.cols, "matmul_nt: shared dims differ, " + shape_str(a) + " x " + shape_str(b) + "^T");
  Tensor2 c(a.rows, b.rows);
  const bool par = a.rows * a.cols * b.rows > kOmpMinWork;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t i = 0; i < static_cast<int64_t>(a.rows); ++i) matmul_nt_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  require(a.rows == b.rows, "matmul_tn: shared dims differ, " + shape_str(a) + "^T x " + shape_str(b));
  Tensor2 c(a.cols, b.cols);
  const bool par = a.rows * a.cols * b.cols > kOmpMinWork;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t i = 0; i < static_cast<int64_t>(a.cols); ++i) matmul_tn_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Tensor2 transpose(const Tensor2& a) {
  Tensor2 t(a.cols, a.rows);
  const bool par = a.size() > kOmpMinWork;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t i = 0; i < static_cast<int64_t>(a.rows); ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, static_cast<std::size_t>(i)) = a(static_cast<std::size_t>(i), j);
  return t;
}

Tensor2 softmax_rows(const Tensor2& s, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("softmax_rows: scale must be positive and finite");
  if (s.cols == 0 || s.rows == 0) throw DimError("softmax_rows: empty input");
  Tensor2 out(s.rows, s.cols);
  const double inv_scale = 1.0 / scale;
  const bool par = s.size() > kOmpMinWork;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t i = 0; i < static_cast<int64_t>(s.rows); ++i) softmax_row(s, out, inv_scale, static_cast<std::size_t>(i));
  return out;
}

Tensor2 lrelu(const Tensor2& x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("lrelu: slope must lie in (0, 1)");
  Tensor2 out(x.rows, x.cols);
  const bool par = x.size() > kOmpMinWork;
#pragma omp parallel for schedule(static) if (par)
  for (int64_t i = 0; i < static_cast<int64_t>(x.size()); ++i) {
    const double v = x.data[static_cast<std::size_t>(i)];
    out.data[static_cast<std::size_t>(i)] = v >= 0.0 ? v : slope * v;
  }
  return out;
}

namespace serial {

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  require(a.cols == b.rows, "matmul: inner dims differ, " + shape_str(a) + " x " + shape_str(b));
  Tensor2 c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
  return c;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  require(a.cols == b.cols, "matmul_nt: shared dims differ, " + shape_str(a) + " x " + shape_str(b) + "^T");
  Tensor2 c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) matmul_nt_row(a, b, c, i);
  return c;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  require(a.rows == b.rows, "matmul_tn: shared dims differ, " + shape_str(a) + "^T x " + shape_str(b));
  Tensor2 c(a.cols, b.cols);
  for (std::size_t i = 0; i < a.cols; ++i) matmul_tn_row(a, b, c, i);
  return c;
}

Tensor2 softmax_rows(const Tensor2& s, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("softmax_rows: scale must be positive and finite");
  if (s.cols == 0 || s.rows == 0) throw DimError("softmax_rows: empty input");
  Tensor2 out(s.rows, s.cols);
  const double inv_scale = 1.0 / scale;
  for (std::size_t i = 0; i < s.rows; ++i) softmax_row(s, out, inv_scale, i);
  return out;
}

Tensor2 lrelu(const Tensor2& x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("lrelu: slope must lie in (0, 1)");
  Tensor2 out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.data[i];
    out.data[i] = v >= 0.0 ? v : slope * v;
  }
  return out;
}

}  // namespace serial

}  // namespace resmatch
