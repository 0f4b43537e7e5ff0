#pragma once

#include <functional>
#include <string>
#include <vector>

#include "clkcrec/matrix.hpp"

namespace clk {

// A named trainable parameter. Parameters persist across tapes; gradients
// are accumulated here by Tape::backward.
struct Param {
  std::string name;
  DenseMatrix value;
  DenseMatrix grad;

  Param() = default;
  Param(std::string n, DenseMatrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { std::fill(grad.values().begin(), grad.values().end(), 0.0); }
  double grad_norm() const;
};

// Reverse-mode tape over dense and (pattern-fixed) sparse matrix values.
// Forward values are computed eagerly; backward() replays recorded closures
// in reverse topological order. A tape is rebuilt each forward pass and is
// confined to a single thread.
class Tape {
 public:
  using Id = int;

  Id leaf(Param& p);
  Id constant(DenseMatrix v);

  // elementwise / structural
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id scale(Id a, double c);
  Id ew_mul(Id a, Id b);
  Id ew_div(Id a, Id b);
  Id tanh_(Id a);
  Id sigmoid_(Id a);
  Id exp_(Id a);
  Id log_(Id a);
  Id sqrt_(Id a);
  Id softplus(Id a);
  Id leaky_relu(Id a, double slope);
  Id row_softmax(Id a);
  Id row_sum(Id a);      // n x m -> n x 1
  Id reduce_sum(Id a);   // -> 1 x 1
  Id rows_scale(Id a, Id v);     // row i of a scaled by v(i,0)
  Id add_row_bias(Id a, Id b);   // b: 1 x cols, broadcast over rows
  Id concat_cols(Id a, Id b);
  Id gather_rows(Id a, std::vector<int> rows);
  Id select_col(Id a, int col);  // -> n x 1

  // linear algebra
  Id matmul(Id a, Id b);
  Id matmul_nt(Id a, Id b);  // a * b^T
  Id matmul_tn(Id a, Id b);  // a^T * b
  Id circcorr_rows(Id h, Id z);  // z: 1 x d, applied to every row of h
  Id spmm_const(const SparseMatrix* a, Id x);  // a must outlive the tape

  // sparse-valued nodes (adjacency chains with trainable selection weights)
  Id sp_combine(std::vector<const SparseMatrix*> mats, Id weights);
  Id sp_row_normalize_v(Id a);
  Id sp_matmul_v(Id a, Id b);
  Id sp_add_identity_v(Id a);
  Id spmm_v(Id a, Id x);

  const DenseMatrix& value(Id id) const;
  const SparseMatrix& sparse_value(Id id) const;
  const DenseMatrix& grad(Id id) const;
  double scalar(Id id) const;
  bool requires_grad(Id id) const;

  // populates Param::grad for every leaf reachable from loss (accumulating)
  void backward(Id loss);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    DenseMatrix val;
    DenseMatrix grad;
    SparseMatrix sval;
    std::vector<double> sgrad;  // aligned with sval pattern
    bool sparse = false;
    bool needs_grad = false;
    Param* param = nullptr;
    std::function<void(Tape&)> back;
  };

  Node& node(Id id);
  const Node& node(Id id) const;
  Id push_dense(DenseMatrix v, bool needs_grad, std::function<void(Tape&)> back);
  Id push_sparse(SparseMatrix v, bool needs_grad, std::function<void(Tape&)> back);
  void accum(Id id, const DenseMatrix& g);

  std::vector<Node> nodes_;
};

}  // namespace clk
