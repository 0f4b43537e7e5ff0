#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <tuple>
#include <vector>

#include "clkcrec/errors.hpp"

namespace clk {

// Row-major dense matrix, double precision.
class DenseMatrix {
 public:
  DenseMatrix() : rows_(0), cols_(0) {}
  DenseMatrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * cols, fill) {}

  static DenseMatrix zeros(int rows, int cols) { return DenseMatrix(rows, cols, 0.0); }
  static DenseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }

  double& at(int i, int j) { return v_[static_cast<std::size_t>(i) * cols_ + j]; }
  double at(int i, int j) const { return v_[static_cast<std::size_t>(i) * cols_ + j]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

 private:
  int rows_, cols_;
  std::vector<double> v_;
};

// Sparse matrix in CSR with sorted column indices and no explicit zeros.
// The canonical form makes equality and serialization bit-exact.
class SparseMatrix {
 public:
  SparseMatrix() : rows_(0), cols_(0), rowptr_(1, 0) {}
  SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), rowptr_(rows + 1, 0) {}

  // duplicates are summed; zero values dropped
  static SparseMatrix from_coo(int rows, int cols,
                               std::vector<std::tuple<int, int, double>> entries);
  static SparseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nnz() const { return static_cast<int>(vals_.size()); }

  const std::vector<int>& rowptr() const { return rowptr_; }
  const std::vector<int>& colidx() const { return colidx_; }
  const std::vector<double>& vals() const { return vals_; }
  std::vector<double>& vals() { return vals_; }

  double get(int i, int j) const;
  // index into vals() of entry (i,j), or -1
  int find(int i, int j) const;

  DenseMatrix to_dense() const;

  bool operator==(const SparseMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && rowptr_ == o.rowptr_ &&
           colidx_ == o.colidx_ && vals_ == o.vals_;
  }

  std::string serialize() const;
  static SparseMatrix parse(const std::string& text);

 private:
  int rows_, cols_;
  std::vector<int> rowptr_;
  std::vector<int> colidx_;
  std::vector<double> vals_;
  friend SparseMatrix sp_lincomb(const std::vector<const SparseMatrix*>&,
                                 const std::vector<double>&);
  friend SparseMatrix sp_matmul(const SparseMatrix&, const SparseMatrix&);
  friend SparseMatrix sp_transpose(const SparseMatrix&);
  friend SparseMatrix sp_row_normalize(const SparseMatrix&);
  friend SparseMatrix sp_add_identity(const SparseMatrix&);
};

// --- dense ops (wrap kernels) ---
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);  // a * b^T
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);  // a^T * b
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& x);
DenseMatrix transpose(const DenseMatrix& a);

// --- sparse ops ---
// sum_i w_i * A_i over the union pattern
SparseMatrix sp_lincomb(const std::vector<const SparseMatrix*>& mats,
                        const std::vector<double>& weights);
SparseMatrix sp_matmul(const SparseMatrix& a, const SparseMatrix& b);
SparseMatrix sp_transpose(const SparseMatrix& a);
// each nonzero row divided by its row sum; zero rows unchanged; negative entry -> error
SparseMatrix sp_row_normalize(const SparseMatrix& a);
SparseMatrix sp_add_identity(const SparseMatrix& a);

// --- small vector ops (tensor-core spec surface) ---
std::vector<double> softmax(const std::vector<double>& v);
std::vector<double> circ_corr(const std::vector<double>& a, const std::vector<double>& b);
double cosine_sim(const std::vector<double>& a, const std::vector<double>& b);

std::string format_double(double x);  // shortest round-trip decimal

}  // namespace clk
