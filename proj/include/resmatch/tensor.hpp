#pragma once

#include <cstddef>
#include <vector>

#include "resmatch/common.hpp"

namespace resmatch {

// Dense row-major matrix of 64-bit floats. The only tensor shape in the
// project; row and column vectors are 1×n / n×1.
struct Tensor2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }

  std::size_t size() const { return rows * cols; }
  bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }

  static Tensor2 identity(std::size_t n);
};

bool all_finite(const Tensor2& t);
double max_abs(const Tensor2& t);
double max_abs_diff(const Tensor2& a, const Tensor2& b);
bool bit_equal(const Tensor2& a, const Tensor2& b);

void fill_uniform(Tensor2& t, Rng& rng, double lo, double hi);
void fill_gaussian(Tensor2& t, Rng& rng, double sigma);

std::string shape_str(const Tensor2& t);

}  // namespace resmatch
