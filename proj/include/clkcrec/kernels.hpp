#pragma once

// Dense numeric kernels. Each kernel has a serial reference and an OpenMP
// variant; the parallel version computes every output element with the same
// serial accumulation order, so results are bitwise identical across thread
// counts. bench_kernels compares the two.

namespace clk::kernels {

bool parallel_enabled();
void set_parallel(bool on);

// c(m x n) = a(m x k) * b(k x n)
void matmul_nn_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nn_omp(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n);

// c(m x n) = a(m x k) * b(n x k)^T
void matmul_nt_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt_omp(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);

// c(m x n) = a(k x m)^T * b(k x n)
void matmul_tn_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn_omp(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);

// out[r][t] = sum_i h[r][i] * z[(i+t) mod d], one circular correlation per row
void circcorr_rows_serial(const double* h, const double* z, double* out, int rows, int d);
void circcorr_rows_omp(const double* h, const double* z, double* out, int rows, int d);
void circcorr_rows(const double* h, const double* z, double* out, int rows, int d);

// y(rows x cols) = A(csr, rows x ?) * x(? x cols)
void spmm_csr_serial(const int* rowptr, const int* colidx, const double* vals, int rows,
                     const double* x, double* y, int cols);
void spmm_csr_omp(const int* rowptr, const int* colidx, const double* vals, int rows,
                  const double* x, double* y, int cols);
void spmm_csr(const int* rowptr, const int* colidx, const double* vals, int rows,
              const double* x, double* y, int cols);

}  // namespace clk::kernels
