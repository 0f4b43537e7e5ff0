#include <cmath>

#include "clkcrec/errors.hpp"
#include "clkcrec/rng.hpp"
#include "clkcrec/tape.hpp"
#include "doctest.h"
#include "fd_check.hpp"

using namespace clk;

namespace {

DenseMatrix random_mat(int r, int c, Rng& rng, double lo = -1, double hi = 1) {
  DenseMatrix m(r, c);
  for (auto& x : m.values()) x = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("d/dx sum(x^2) = 2x") {
  Rng rng(1);
  Param x("x", random_mat(3, 4, rng));
  Tape t;
  auto xi = t.leaf(x);
  auto loss = t.reduce_sum(t.ew_mul(xi, xi));
  x.zero_grad();
  t.backward(loss);
  for (std::size_t i = 0; i < x.value.values().size(); ++i)
    CHECK(x.grad.values()[i] == doctest::Approx(2.0 * x.value.values()[i]).epsilon(1e-14));
}

TEST_CASE("loss independent of parameter gives zero gradient") {
  Rng rng(2);
  Param w("w", random_mat(2, 2, rng));
  Param unused("u", random_mat(2, 2, rng));
  Tape t;
  auto wi = t.leaf(w);
  t.leaf(unused);
  auto loss = t.reduce_sum(wi);
  w.zero_grad();
  unused.zero_grad();
  t.backward(loss);
  for (double g : unused.grad.values()) CHECK(g == 0.0);
  for (double g : w.grad.values()) CHECK(g == 1.0);
}

TEST_CASE("backward rejects non-scalar loss") {
  Rng rng(3);
  Param w("w", random_mat(2, 2, rng));
  Tape t;
  auto wi = t.leaf(w);
  CHECK_THROWS_AS(t.backward(wi), UsageError);
  CHECK_THROWS_AS(t.backward(9999), UsageError);
}

TEST_CASE("gradient of sigmoid(w.x) matches central finite differences") {
  Rng rng(4);
  Param w("w", random_mat(1, 6, rng));
  DenseMatrix x = random_mat(6, 1, rng);
  auto build = [&](bool back) {
    Tape t;
    auto wi = t.leaf(w);
    auto xi = t.constant(x);
    auto loss = t.reduce_sum(t.sigmoid_(t.matmul(wi, xi)));
    if (back) t.backward(loss);
    return t.scalar(loss);
  };
  double err = fd::max_rel_error({&w}, [&] { return build(false); }, [&] { build(true); });
  CHECK(err <= 1e-6);
}

TEST_CASE("every primitive passes the finite-difference oracle, 10 seeds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    Param a("a", random_mat(4, 5, rng));
    Param b("b", random_mat(4, 5, rng, 0.5, 1.5));  // positive: feeds div/log/sqrt
    Param w("w", random_mat(5, 3, rng));
    Param z("z", random_mat(1, 5, rng));
    Param v("v", random_mat(4, 1, rng, 0.5, 1.5));
    Param bias("bias", random_mat(1, 5, rng));
    SparseMatrix sp = SparseMatrix::from_coo(
        4, 4, {{0, 1, 1.0}, {1, 2, 0.5}, {2, 0, 2.0}, {3, 3, 1.0}, {0, 3, 0.25}});
    DenseMatrix cmat = random_mat(2, 3, rng);

    auto build = [&](bool back) {
      Tape t;
      auto ai = t.leaf(a);
      auto bi = t.leaf(b);
      auto wi = t.leaf(w);
      auto zi = t.leaf(z);
      auto vi = t.leaf(v);
      auto bbi = t.leaf(bias);

      auto s1 = t.add(ai, bi);
      auto s2 = t.sub(s1, t.scale(ai, 0.3));
      auto s3 = t.ew_mul(s2, bi);
      auto s4 = t.ew_div(s3, bi);
      auto s5 = t.tanh_(s4);
      auto s6 = t.sigmoid_(s5);
      auto s7 = t.leaky_relu(s6, 0.2);
      auto s8 = t.add_row_bias(s7, bbi);
      auto s9 = t.rows_scale(s8, vi);
      auto s10 = t.row_softmax(s9);
      auto s11 = t.circcorr_rows(s10, zi);
      auto s12 = t.matmul(s11, wi);                       // 4x3
      auto s13 = t.matmul_nt(s12, t.constant(cmat));  // 4x2
      auto s14 = t.matmul_tn(s13, s13);                   // 2x2
      auto s15 = t.concat_cols(s14, t.exp_(t.scale(s14, 0.1)));
      auto s16 = t.gather_rows(s15, {1, 0, 1});
      auto s17 = t.select_col(s16, 2);
      auto s18 = t.log_(t.add(t.ew_mul(s17, s17), t.constant(DenseMatrix(3, 1, 1.0))));
      auto s19 = t.sqrt_(t.add(t.ew_mul(s18, s18), t.constant(DenseMatrix(3, 1, 0.5))));
      auto s20 = t.softplus(s19);
      auto sp1 = t.spmm_const(&sp, t.row_sum(s11));  // 4x1
      auto loss = t.add(t.reduce_sum(s20), t.reduce_sum(sp1));
      if (back) t.backward(loss);
      return t.scalar(loss);
    };

    std::vector<Param*> params{&a, &b, &w, &z, &v, &bias};
    double err = fd::max_rel_error(params, [&] { return build(false); }, [&] { build(true); });
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("sparse-variable ops pass the finite-difference oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(200 + seed);
    const int n = 6;
    // three random adjacency-like matrices plus identity
    std::vector<SparseMatrix> mats;
    for (int m = 0; m < 3; ++m) {
      std::vector<std::tuple<int, int, double>> e;
      for (int k = 0; k < 8; ++k)
        e.emplace_back(static_cast<int>(rng.below(n)), static_cast<int>(rng.below(n)), 1.0);
      mats.push_back(SparseMatrix::from_coo(n, n, e));
    }
    mats.push_back(SparseMatrix::identity(n));
    std::vector<const SparseMatrix*> mp;
    for (auto& m : mats) mp.push_back(&m);

    Param logits0("l0", random_mat(1, 4, rng));
    Param logits1("l1", random_mat(1, 4, rng));
    Param feat("f", random_mat(n, 3, rng));

    auto build = [&](bool back) {
      Tape t;
      auto w0 = t.row_softmax(t.leaf(logits0));
      auto w1 = t.row_softmax(t.leaf(logits1));
      auto a0 = t.sp_combine(mp, w0);
      auto a1 = t.sp_matmul_v(t.sp_row_normalize_v(a0), t.sp_combine(mp, w1));
      auto ah = t.sp_add_identity_v(a1);
      auto an = t.sp_row_normalize_v(ah);
      auto h = t.spmm_v(an, t.leaf(feat));
      auto loss = t.reduce_sum(t.tanh_(h));
      if (back) t.backward(loss);
      return t.scalar(loss);
    };

    std::vector<Param*> params{&logits0, &logits1, &feat};
    double err = fd::max_rel_error(params, [&] { return build(false); }, [&] { build(true); });
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("tape softmax sums to one and is shift invariant") {
  Rng rng(300);
  Tape t;
  DenseMatrix m = random_mat(5, 7, rng, -3, 3);
  auto s = t.row_softmax(t.constant(m));
  for (int i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 7; ++j) sum += t.value(s).at(i, j);
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
  DenseMatrix shifted = m;
  for (auto& x : shifted.values()) x += 11.25;
  auto s2 = t.row_softmax(t.constant(shifted));
  for (std::size_t i = 0; i < t.value(s).values().size(); ++i)
    CHECK(t.value(s).values()[i] == doctest::Approx(t.value(s2).values()[i]).epsilon(1e-12));
}
