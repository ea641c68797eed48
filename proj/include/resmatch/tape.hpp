#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "resmatch/tensor.hpp"

namespace resmatch {

struct Param;

// Reverse-mode tape over Tensor2 values. Forward is eager: every op computes
// its result immediately and records a closure that scatters the output
// gradient back to its inputs. One tape covers one forward pass; parameter
// leaves carry an external grad slot that receives its share at the end of
// backward(). Gradients accumulate additively, so callers zero parameter
// grads between optimizer steps.
//
// A tape instance is single-threaded. The kernels it calls parallelize
// internally with a fixed per-element summation order, so results are
// reproducible for any thread count.
class Tape {
 public:
  using Id = std::uint32_t;
  static constexpr Id kNone = 0xffffffffu;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // leaves
  Id input(Tensor2 v);   // gradient kept on the tape only
  Id param(Param& p);    // gradient also accumulated into p.grad

  const Tensor2& val(Id id) const;
  const Tensor2& grad(Id id) const;  // valid after backward()
  bool grad_enabled() const { return grad_enabled_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t bytes() const { return bytes_; }

  // ops
  Id matmul(Id a, Id b);                       // a·b
  Id matmul_nt(Id a, Id b);                    // a·bᵀ
  Id transpose(Id a);
  Id add(Id a, Id b);                          // same shape
  Id add_bias(Id x, Id bias);                  // bias: 1×n broadcast over rows
  Id lrelu(Id x, double slope);
  Id scale(Id x, double s);
  Id scalar_affine(Id x, Id lam, Id beta);     // lam·x + beta, lam/beta 1×1
  Id softmax_rows(Id x, double sm_scale);      // softmax(x / sm_scale) per row
  Id concat_cols(std::span<const Id> parts);
  Id exp_elem(Id x);
  Id logsumexp_rows(Id x);                     // m×1
  Id logsumexp_cols(Id x);                     // 1×n
  Id add_col(Id x, Id c);                      // c: m×1 broadcast over columns
  Id add_row(Id x, Id r);                      // r: 1×n broadcast over rows
  Id const_sub(Tensor2 c, Id x);               // c − x, c is a constant
  Id augment_dustbin(Id scores, Id z);         // append dustbin row/col filled with z (1×1)
  Id gather_cols(Id x, std::vector<std::uint32_t> idx, std::size_t k);  // y[i,j] = x[i, idx[i*k+j]]
  // per-head sparse attention: softmax over each query's k neighbors, then
  // the weighted sum of gathered value rows; bypass (may be kNone) is a
  // pre-gathered n_q×k score table added after scaling
  Id sparse_head_attend(Id q, Id kk, Id v, Id bypass, std::vector<std::uint32_t> idx, std::size_t k,
                        double sm_scale);
  Id weighted_sum(Id x, Tensor2 coef);         // 1×1, Σ coef⊙x
  Id neg_mean_entries(Id x, std::vector<std::pair<std::uint32_t, std::uint32_t>> cells);  // 1×1

  // Seeds d(root)/d(root) = seed and runs the recorded closures in reverse.
  // root must be 1×1. May be called once per tape.
  void backward(Id root, double seed = 1.0);

 private:
  struct Node {
    Tensor2 value;
    Tensor2 grad;
  };

  Id push(Tensor2 v);
  Tensor2& g(Id id) { return nodes_[id].grad; }
  const Tensor2& v(Id id) const { return nodes_[id].value; }
  void record(std::function<void()> fn) {
    if (grad_enabled_) steps_.push_back(std::move(fn));
  }
  void check(Id id) const;

  std::vector<Node> nodes_;
  std::vector<std::function<void()>> steps_;
  std::vector<std::pair<Id, Param*>> param_links_;
  std::size_t bytes_ = 0;
  bool grad_enabled_ = true;
  bool ran_backward_ = false;
};

}  // namespace resmatch
