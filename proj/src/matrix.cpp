#include "clkcrec/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "clkcrec/kernels.hpp"

namespace clk {

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

bool DenseMatrix::all_finite() const {
  for (double x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

SparseMatrix SparseMatrix::from_coo(int rows, int cols,
                                    std::vector<std::tuple<int, int, double>> entries) {
  for (auto& [i, j, v] : entries) {
    if (i < 0 || i >= rows || j < 0 || j >= cols)
      throw ShapeError("sparse entry index out of range");
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) {
              return std::tie(std::get<0>(a), std::get<1>(a)) <
                     std::tie(std::get<0>(b), std::get<1>(b));
            });
  SparseMatrix m(rows, cols);
  std::size_t k = 0;
  while (k < entries.size()) {
    auto [i, j, v] = entries[k++];
    while (k < entries.size() && std::get<0>(entries[k]) == i && std::get<1>(entries[k]) == j)
      v += std::get<2>(entries[k++]);
    if (v != 0.0) {
      m.colidx_.push_back(j);
      m.vals_.push_back(v);
      m.rowptr_[i + 1]++;
    }
  }
  for (int i = 0; i < rows; ++i) m.rowptr_[i + 1] += m.rowptr_[i];
  return m;
}

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix m(n, n);
  m.colidx_.resize(n);
  m.vals_.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    m.colidx_[i] = i;
    m.rowptr_[i + 1] = i + 1;
  }
  return m;
}

int SparseMatrix::find(int i, int j) const {
  if (i < 0 || i >= rows_) return -1;
  auto lo = colidx_.begin() + rowptr_[i];
  auto hi = colidx_.begin() + rowptr_[i + 1];
  auto it = std::lower_bound(lo, hi, j);
  if (it != hi && *it == j) return static_cast<int>(it - colidx_.begin());
  return -1;
}

double SparseMatrix::get(int i, int j) const {
  int k = find(i, j);
  return k < 0 ? 0.0 : vals_[k];
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int e = rowptr_[i]; e < rowptr_[i + 1]; ++e) m.at(i, colidx_[e]) = vals_[e];
  return m;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string SparseMatrix::serialize() const {
  std::ostringstream os;
  os << "sparse " << rows_ << ' ' << cols_ << ' ' << nnz() << '\n';
  for (int i = 0; i < rows_; ++i)
    for (int e = rowptr_[i]; e < rowptr_[i + 1]; ++e)
      os << i << '\t' << colidx_[e] << '\t' << format_double(vals_[e]) << '\n';
  return os.str();
}

SparseMatrix SparseMatrix::parse(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  int rows, cols, nnz;
  if (!(is >> tag >> rows >> cols >> nnz) || tag != "sparse")
    throw DataError("bad sparse matrix header");
  std::vector<std::tuple<int, int, double>> entries;
  entries.reserve(nnz);
  for (int k = 0; k < nnz; ++k) {
    int i, j;
    double v;
    if (!(is >> i >> j >> v)) throw DataError("truncated sparse matrix body");
    entries.emplace_back(i, j, v);
  }
  return from_coo(rows, cols, std::move(entries));
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dims differ");
  DenseMatrix c(a.rows(), b.cols());
  kernels::matmul_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: inner dims differ");
  DenseMatrix c(a.rows(), b.rows());
  kernels::matmul_nt(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows());
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: inner dims differ");
  DenseMatrix c(a.cols(), b.cols());
  kernels::matmul_tn(a.data(), b.data(), c.data(), a.cols(), a.rows(), b.cols());
  return c;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& x) {
  if (a.cols() != x.rows()) throw ShapeError("spmm: inner dims differ");
  DenseMatrix y(a.rows(), x.cols());
  kernels::spmm_csr(a.rowptr().data(), a.colidx().data(), a.vals().data(), a.rows(),
                    x.data(), y.data(), x.cols());
  return y;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

SparseMatrix sp_lincomb(const std::vector<const SparseMatrix*>& mats,
                        const std::vector<double>& weights) {
  if (mats.empty() || mats.size() != weights.size())
    throw ShapeError("sp_lincomb: matrix/weight count mismatch");
  const int rows = mats[0]->rows(), cols = mats[0]->cols();
  std::vector<std::tuple<int, int, double>> entries;
  for (std::size_t m = 0; m < mats.size(); ++m) {
    const SparseMatrix& a = *mats[m];
    if (a.rows() != rows || a.cols() != cols) throw ShapeError("sp_lincomb: shape mismatch");
    for (int i = 0; i < rows; ++i)
      for (int e = a.rowptr_[i]; e < a.rowptr_[i + 1]; ++e)
        entries.emplace_back(i, a.colidx_[e], weights[m] * a.vals_[e]);
  }
  return SparseMatrix::from_coo(rows, cols, std::move(entries));
}

SparseMatrix sp_matmul(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("sp_matmul: inner dims differ");
  SparseMatrix c(a.rows(), b.cols());
  std::vector<double> acc(b.cols(), 0.0);
  std::vector<int> marked;
  for (int i = 0; i < a.rows(); ++i) {
    marked.clear();
    for (int e = a.rowptr_[i]; e < a.rowptr_[i + 1]; ++e) {
      const int j = a.colidx_[e];
      const double av = a.vals_[e];
      for (int f = b.rowptr_[j]; f < b.rowptr_[j + 1]; ++f) {
        const int k = b.colidx_[f];
        if (acc[k] == 0.0) marked.push_back(k);
        acc[k] += av * b.vals_[f];
      }
    }
    std::sort(marked.begin(), marked.end());
    for (int k : marked) {
      if (acc[k] != 0.0) {
        c.colidx_.push_back(k);
        c.vals_.push_back(acc[k]);
      }
      acc[k] = 0.0;
    }
    c.rowptr_[i + 1] = static_cast<int>(c.vals_.size());
  }
  return c;
}

SparseMatrix sp_transpose(const SparseMatrix& a) {
  std::vector<std::tuple<int, int, double>> entries;
  entries.reserve(a.nnz());
  for (int i = 0; i < a.rows(); ++i)
    for (int e = a.rowptr_[i]; e < a.rowptr_[i + 1]; ++e)
      entries.emplace_back(a.colidx_[e], i, a.vals_[e]);
  return SparseMatrix::from_coo(a.cols(), a.rows(), std::move(entries));
}

SparseMatrix sp_row_normalize(const SparseMatrix& a) {
  SparseMatrix out = a;
  for (int i = 0; i < a.rows(); ++i) {
    double sum = 0.0;
    for (int e = a.rowptr_[i]; e < a.rowptr_[i + 1]; ++e) {
      if (a.vals_[e] < 0.0) throw DegenerateInputError("sp_row_normalize: negative entry");
      sum += a.vals_[e];
    }
    if (sum > 0.0)
      for (int e = a.rowptr_[i]; e < a.rowptr_[i + 1]; ++e) out.vals_[e] = a.vals_[e] / sum;
  }
  return out;
}

SparseMatrix sp_add_identity(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("sp_add_identity: not square");
  std::vector<std::tuple<int, int, double>> entries;
  entries.reserve(a.nnz() + a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int e = a.rowptr_[i]; e < a.rowptr_[i + 1]; ++e)
      entries.emplace_back(i, a.colidx_[e], a.vals_[e]);
  for (int i = 0; i < a.rows(); ++i) entries.emplace_back(i, i, 1.0);
  return SparseMatrix::from_coo(a.rows(), a.cols(), std::move(entries));
}

std::vector<double> softmax(const std::vector<double>& v) {
  if (v.empty()) throw ShapeError("softmax: empty input");
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

std::vector<double> circ_corr(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("circ_corr: length mismatch");
  const int d = static_cast<int>(a.size());
  std::vector<double> out(a.size(), 0.0);
  kernels::circcorr_rows_serial(a.data(), b.data(), out.data(), 1, d);
  return out;
}

double cosine_sim(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine_sim: length mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateInputError("cosine_sim: zero-norm input");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace clk
