#include <cstring>
#include <vector>

#include "clkcrec/kernels.hpp"
#include "clkcrec/rng.hpp"
#include "doctest.h"

using clk::Rng;
namespace k = clk::kernels;

TEST_CASE("matmul serial matches hand-computed product") {
  // [[1,2],[3,4]] * [[5],[6]] = [[17],[39]]
  std::vector<double> a{1, 2, 3, 4}, b{5, 6}, c(2);
  k::matmul_nn_serial(a.data(), b.data(), c.data(), 2, 2, 1);
  CHECK(c[0] == 17.0);
  CHECK(c[1] == 39.0);
}

TEST_CASE("omp kernels are bitwise identical to serial reference") {
  Rng rng(7);
  const int m = 37, kk = 23, n = 19;
  std::vector<double> a(m * kk), b(kk * n), bt(n * kk), c1(m * n), c2(m * n);
  for (auto& x : a) x = rng.uniform(-1, 1);
  for (auto& x : b) x = rng.uniform(-1, 1);
  for (auto& x : bt) x = rng.uniform(-1, 1);

  k::matmul_nn_serial(a.data(), b.data(), c1.data(), m, kk, n);
  k::matmul_nn_omp(a.data(), b.data(), c2.data(), m, kk, n);
  CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)) == 0);

  k::matmul_nt_serial(a.data(), bt.data(), c1.data(), m, kk, n);
  k::matmul_nt_omp(a.data(), bt.data(), c2.data(), m, kk, n);
  CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)) == 0);

  std::vector<double> at(kk * m);
  for (auto& x : at) x = rng.uniform(-1, 1);
  std::vector<double> b2(kk * n);
  for (auto& x : b2) x = rng.uniform(-1, 1);
  k::matmul_tn_serial(at.data(), b2.data(), c1.data(), m, kk, n);
  k::matmul_tn_omp(at.data(), b2.data(), c2.data(), m, kk, n);
  CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)) == 0);

  const int rows = 11, d = 16;
  std::vector<double> h(rows * d), z(d), o1(rows * d), o2(rows * d);
  for (auto& x : h) x = rng.uniform(-1, 1);
  for (auto& x : z) x = rng.uniform(-1, 1);
  k::circcorr_rows_serial(h.data(), z.data(), o1.data(), rows, d);
  k::circcorr_rows_omp(h.data(), z.data(), o2.data(), rows, d);
  CHECK(std::memcmp(o1.data(), o2.data(), o1.size() * sizeof(double)) == 0);
}

TEST_CASE("matmul transpose variants agree with plain matmul") {
  Rng rng(11);
  const int m = 5, kk = 7, n = 4;
  std::vector<double> a(m * kk), b(kk * n);
  for (auto& x : a) x = rng.uniform(-1, 1);
  for (auto& x : b) x = rng.uniform(-1, 1);

  std::vector<double> c_ref(m * n);
  k::matmul_nn_serial(a.data(), b.data(), c_ref.data(), m, kk, n);

  // bt = b^T, then nt path
  std::vector<double> bt(n * kk);
  for (int i = 0; i < kk; ++i)
    for (int j = 0; j < n; ++j) bt[j * kk + i] = b[i * n + j];
  std::vector<double> c(m * n);
  k::matmul_nt_serial(a.data(), bt.data(), c.data(), m, kk, n);
  for (int i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(c_ref[i]).epsilon(1e-14));

  // at = a^T, then tn path
  std::vector<double> at(kk * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < kk; ++j) at[j * m + i] = a[i * kk + j];
  k::matmul_tn_serial(at.data(), b.data(), c.data(), m, kk, n);
  for (int i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(c_ref[i]).epsilon(1e-14));
}
