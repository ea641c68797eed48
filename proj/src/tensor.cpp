#include "resmatch/tensor.hpp"

#include <cmath>
#include <cstring>

namespace resmatch {

Tensor2 Tensor2::identity(std::size_t n) {
  Tensor2 t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

bool all_finite(const Tensor2& t) {
  for (double v : t.data)
    if (!std::isfinite(v)) return false;
  return true;
}

double max_abs(const Tensor2& t) {
  double m = 0.0;
  for (double v : t.data) m = std::max(m, std::fabs(v));
  return m;
}

double max_abs_diff(const Tensor2& a, const Tensor2& b) {
  if (!a.same_shape(b)) throw DimError("max_abs_diff: " + shape_str(a) + " vs " + shape_str(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

bool bit_equal(const Tensor2& a, const Tensor2& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

void fill_uniform(Tensor2& t, Rng& rng, double lo, double hi) {
  for (double& v : t.data) v = rng.uniform(lo, hi);
}

void fill_gaussian(Tensor2& t, Rng& rng, double sigma) {
  for (double& v : t.data) v = sigma * rng.gaussian();
}

std::string shape_str(const Tensor2& t) {
  return std::to_string(t.rows) + "x" + std::to_string(t.cols);
}

}  // namespace resmatch
