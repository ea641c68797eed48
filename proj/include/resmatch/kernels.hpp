#pragma once

#include "resmatch/tensor.hpp"

namespace resmatch {

// OpenMP-parallel dense kernels. Every output element is owned by exactly one
// thread and accumulated in a fixed loop order, so results are bit-identical
// for any thread count and to the serial reference below.

Tensor2 matmul(const Tensor2& a, const Tensor2& b);     // a·b
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);  // a·bᵀ
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);  // aᵀ·b
Tensor2 transpose(const Tensor2& a);

// softmax(s / scale) applied per row, with row-max subtraction
Tensor2 softmax_rows(const Tensor2& s, double scale);

// x where x >= 0, slope·x otherwise; slope must lie in (0, 1)
Tensor2 lrelu(const Tensor2& x, double slope);

// Work threshold below which the kernels stay serial.
inline constexpr std::size_t kOmpMinWork = 1 << 15;

// Plain-loop reference implementations, kept for tests and the kernel
// benchmark. Same per-element summation order as the parallel versions.
namespace serial {
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);
Tensor2 softmax_rows(const Tensor2& s, double scale);
Tensor2 lrelu(const Tensor2& x, double slope);
}  // namespace serial

}  // namespace resmatch
