// Compares the serial reference kernels against the OpenMP variants:
// verifies bitwise-identical output, then reports throughput for both.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "clkcrec/kernels.hpp"
#include "clkcrec/rng.hpp"

using clk::Rng;
namespace k = clk::kernels;

namespace {

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

template <typename F>
double time_ms(F&& f, int reps) {
  f();  // warmup
  double t0 = now_ms();
  for (int i = 0; i < reps; ++i) f();
  return (now_ms() - t0) / reps;
}

}  // namespace

int main(int argc, char** argv) {
  int n = 512;
  int reps = 5;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--size") && i + 1 < argc) n = std::atoi(argv[++i]);
    if (!std::strcmp(argv[i], "--reps") && i + 1 < argc) reps = std::atoi(argv[++i]);
  }

  Rng rng(12345);
  std::vector<double> a(static_cast<size_t>(n) * n), b(a.size()), c1(a.size()), c2(a.size());
  for (auto& x : a) x = rng.uniform(-1, 1);
  for (auto& x : b) x = rng.uniform(-1, 1);

  std::printf("kernel benchmark, n=%d, reps=%d\n", n, reps);

  double ts = time_ms([&] { k::matmul_nn_serial(a.data(), b.data(), c1.data(), n, n, n); }, reps);
  double tp = time_ms([&] { k::matmul_nn_omp(a.data(), b.data(), c2.data(), n, n, n); }, reps);
  bool same = std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(double)) == 0;
  std::printf("matmul_nn      serial %8.2f ms   omp %8.2f ms   speedup %5.2fx   bitwise %s\n",
              ts, tp, ts / tp, same ? "equal" : "DIFFER");

  int rows = n, d = 128;
  std::vector<double> h(static_cast<size_t>(rows) * d), z(d), o1(h.size()), o2(h.size());
  for (auto& x : h) x = rng.uniform(-1, 1);
  for (auto& x : z) x = rng.uniform(-1, 1);
  ts = time_ms([&] { k::circcorr_rows_serial(h.data(), z.data(), o1.data(), rows, d); }, reps);
  tp = time_ms([&] { k::circcorr_rows_omp(h.data(), z.data(), o2.data(), rows, d); }, reps);
  same = std::memcmp(o1.data(), o2.data(), o1.size() * sizeof(double)) == 0;
  std::printf("circcorr_rows  serial %8.2f ms   omp %8.2f ms   speedup %5.2fx   bitwise %s\n",
              ts, tp, ts / tp, same ? "equal" : "DIFFER");

  // random sparse matrix, ~16 nnz per row
  std::vector<int> rowptr(n + 1, 0), colidx;
  std::vector<double> vals;
  for (int i = 0; i < n; ++i) {
    for (int e = 0; e < 16; ++e) {
      colidx.push_back(static_cast<int>(rng.below(n)));
      vals.push_back(rng.uniform(0, 1));
    }
    rowptr[i + 1] = static_cast<int>(vals.size());
  }
  std::vector<double> x(static_cast<size_t>(n) * d), y1(x.size()), y2(x.size());
  for (auto& v : x) v = rng.uniform(-1, 1);
  ts = time_ms([&] { k::spmm_csr_serial(rowptr.data(), colidx.data(), vals.data(), n, x.data(), y1.data(), d); }, reps);
  tp = time_ms([&] { k::spmm_csr_omp(rowptr.data(), colidx.data(), vals.data(), n, x.data(), y2.data(), d); }, reps);
  same = std::memcmp(y1.data(), y2.data(), y1.size() * sizeof(double)) == 0;
  std::printf("spmm_csr       serial %8.2f ms   omp %8.2f ms   speedup %5.2fx   bitwise %s\n",
              ts, tp, ts / tp, same ? "equal" : "DIFFER");

  return 0;
}
