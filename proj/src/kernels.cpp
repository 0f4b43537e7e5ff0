#include "clkcrec/kernels.hpp"

#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace clk::kernels {

namespace {
bool g_parallel = true;
constexpr long kParallelThreshold = 16384;  // flop count below which serial wins
}  // namespace

bool parallel_enabled() {
#ifdef _OPENMP
  return g_parallel;
#else
  return false;
#endif
}

void set_parallel(bool on) { g_parallel = on; }

void matmul_nn_serial(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<long>(i) * k;
    double* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_nn_omp(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<long>(i) * k;
    double* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  if (parallel_enabled() && static_cast<long>(m) * k * n >= kParallelThreshold)
    matmul_nn_omp(a, b, c, m, k, n);
  else
    matmul_nn_serial(a, b, c, m, k, n);
}

void matmul_nt_serial(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      const double* ai = a + static_cast<long>(i) * k;
      const double* bj = b + static_cast<long>(j) * k;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      c[static_cast<long>(i) * n + j] = acc;
    }
  }
}

void matmul_nt_omp(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      const double* ai = a + static_cast<long>(i) * k;
      const double* bj = b + static_cast<long>(j) * k;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      c[static_cast<long>(i) * n + j] = acc;
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
  if (parallel_enabled() && static_cast<long>(m) * k * n >= kParallelThreshold)
    matmul_nt_omp(a, b, c, m, k, n);
  else
    matmul_nt_serial(a, b, c, m, k, n);
}

void matmul_tn_serial(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double aip = a[static_cast<long>(p) * m + i];
      const double* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_tn_omp(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double aip = a[static_cast<long>(p) * m + i];
      const double* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  if (parallel_enabled() && static_cast<long>(m) * k * n >= kParallelThreshold)
    matmul_tn_omp(a, b, c, m, k, n);
  else
    matmul_tn_serial(a, b, c, m, k, n);
}

void circcorr_rows_serial(const double* h, const double* z, double* out, int rows, int d) {
  // z doubled so the inner loop reads contiguously instead of taking mod d
  std::vector<double> z2(2 * d);
  for (int i = 0; i < d; ++i) z2[i] = z2[d + i] = z[i];
  for (int r = 0; r < rows; ++r) {
    const double* hr = h + static_cast<long>(r) * d;
    double* or_ = out + static_cast<long>(r) * d;
    for (int t = 0; t < d; ++t) {
      const double* zt = z2.data() + t;
      double acc = 0.0;
      for (int i = 0; i < d; ++i) acc += hr[i] * zt[i];
      or_[t] = acc;
    }
  }
}

void circcorr_rows_omp(const double* h, const double* z, double* out, int rows, int d) {
  std::vector<double> z2(2 * d);
  for (int i = 0; i < d; ++i) z2[i] = z2[d + i] = z[i];
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const double* hr = h + static_cast<long>(r) * d;
    double* or_ = out + static_cast<long>(r) * d;
    for (int t = 0; t < d; ++t) {
      const double* zt = z2.data() + t;
      double acc = 0.0;
      for (int i = 0; i < d; ++i) acc += hr[i] * zt[i];
      or_[t] = acc;
    }
  }
}

void circcorr_rows(const double* h, const double* z, double* out, int rows, int d) {
  if (parallel_enabled() && static_cast<long>(rows) * d * d >= kParallelThreshold)
    circcorr_rows_omp(h, z, out, rows, d);
  else
    circcorr_rows_serial(h, z, out, rows, d);
}

void spmm_csr_serial(const int* rowptr, const int* colidx, const double* vals, int rows,
                     const double* x, double* y, int cols) {
  for (int i = 0; i < rows; ++i) {
    double* yi = y + static_cast<long>(i) * cols;
    for (int c = 0; c < cols; ++c) yi[c] = 0.0;
    for (int e = rowptr[i]; e < rowptr[i + 1]; ++e) {
      const double v = vals[e];
      const double* xr = x + static_cast<long>(colidx[e]) * cols;
      for (int c = 0; c < cols; ++c) yi[c] += v * xr[c];
    }
  }
}

void spmm_csr_omp(const int* rowptr, const int* colidx, const double* vals, int rows,
                  const double* x, double* y, int cols) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    double* yi = y + static_cast<long>(i) * cols;
    for (int c = 0; c < cols; ++c) yi[c] = 0.0;
    for (int e = rowptr[i]; e < rowptr[i + 1]; ++e) {
      const double v = vals[e];
      const double* xr = x + static_cast<long>(colidx[e]) * cols;
      for (int c = 0; c < cols; ++c) yi[c] += v * xr[c];
    }
  }
}

void spmm_csr(const int* rowptr, const int* colidx, const double* vals, int rows,
              const double* x, double* y, int cols) {
  if (parallel_enabled() && rows >= 64)
    spmm_csr_omp(rowptr, colidx, vals, rows, x, y, cols);
  else
    spmm_csr_serial(rowptr, colidx, vals, rows, x, y, cols);
}

}  // namespace clk::kernels
