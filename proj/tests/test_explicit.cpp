#include <cmath>

#include "clkcrec/explicit_rel.hpp"
#include "clkcrec/rng.hpp"
#include "doctest.h"
#include "fd_check.hpp"

using namespace clk;

namespace {

// small two-type network: 3 "a" nodes, 3 "b" nodes, one edge type
Hin toy_hin() {
  Schema s = Schema::parse("node a\nnode b\nedge ab a b\n");
  return build_hin(s, {3, 3},
                   {{0, 0, 0, -1}, {0, 1, 0, -1}, {0, 1, 1, -1}, {0, 2, 2, -1}});
}

DenseMatrix random_mat(int r, int c, Rng& rng) {
  DenseMatrix m(r, c);
  for (auto& x : m.values()) x = rng.uniform(-1, 1);
  return m;
}

}  // namespace

TEST_CASE("relation embeddings come from the shared basis") {
  auto p = ExplicitParams::init(4, 6, 2, 1, 7);
  Tape t;
  auto z = relation_embed(t, p);
  CHECK(t.value(z).rows() == 4);
  CHECK(t.value(z).cols() == 6);
  // parameter cost is R*B + B*d, not R*d
  CHECK(p.coeff.value.size() == 4 * 2);
  CHECK(p.basis.value.size() == 2 * 6);
  // row r is the coeff[r]-weighted sum of basis rows
  for (int r = 0; r < 4; ++r)
    for (int j = 0; j < 6; ++j) {
      double want = p.coeff.value.at(r, 0) * p.basis.value.at(0, j) +
                    p.coeff.value.at(r, 1) * p.basis.value.at(1, j);
      CHECK(t.value(z).at(r, j) == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("adjacency rows are scaled by total in-degree over all relations") {
  Hin hin = toy_hin();
  auto adj = explicit_adjacency(hin);
  REQUIRE(static_cast<int>(adj.size()) == hin.relation_count());
  const int n = hin.total_nodes();
  // summed over relations, every nonzero row of the stack sums to 1
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    int nnz = 0;
    for (const auto& a : adj)
      for (int e = a.rowptr()[i]; e < a.rowptr()[i + 1]; ++e) {
        row += a.vals()[e];
        ++nnz;
      }
    if (nnz > 0) CHECK(std::abs(row - 1.0) <= 1e-12);
  }
}

TEST_CASE("one-dimensional hand oracle") {
  // 2 nodes, single relation with one edge 1 -> 0, d = 1. With d = 1 the
  // circular correlation of h and z is the scalar product h*z, so
  // h0' = tanh(a01*h1*z*w + h0*ws + c), h1' = tanh(h1*ws + c).
  SparseMatrix a = SparseMatrix::from_coo(2, 2, {{0, 1, 1.0}});
  std::vector<SparseMatrix> adj{a};
  ExplicitParams p = ExplicitParams::init(1, 1, 1, 1, 3);
  p.basis.value.at(0, 0) = 0.5;
  p.coeff.value.at(0, 0) = 2.0;  // z = 1.0
  auto& lp = p.layers[0];
  lp.w_msg[0].value.at(0, 0) = 0.7;
  lp.w_self.value.at(0, 0) = -0.2;
  lp.bias.value.at(0, 0) = 0.1;

  DenseMatrix h0(2, 1);
  h0.at(0, 0) = 0.3;
  h0.at(1, 0) = -0.8;
  Tape t;
  auto h = explicit_forward(t, adj, t.constant(h0), p);
  double want0 = std::tanh(1.0 * (-0.8) * 1.0 * 0.7 + 0.3 * -0.2 + 0.1);
  double want1 = std::tanh(-0.8 * -0.2 + 0.1);
  CHECK(t.value(h).at(0, 0) == doctest::Approx(want0).epsilon(1e-14));
  CHECK(t.value(h).at(1, 0) == doctest::Approx(want1).epsilon(1e-14));
}

TEST_CASE("permutation equivariance") {
  // relabeling nodes permutes output rows the same way
  Rng rng(21);
  const int n = 5, d = 4;
  std::vector<std::tuple<int, int, double>> edges{
      {0, 1, 1.0}, {1, 2, 1.0}, {3, 0, 1.0}, {4, 2, 1.0}, {2, 4, 1.0}};
  std::vector<int> perm{2, 0, 4, 1, 3};  // new id of old node i

  auto scale_rows = [&](SparseMatrix m) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int e = m.rowptr()[i]; e < m.rowptr()[i + 1]; ++e) s += m.vals()[e];
      for (int e = m.rowptr()[i]; e < m.rowptr()[i + 1]; ++e) m.vals()[e] /= s;
    }
    return m;
  };
  SparseMatrix a1 = scale_rows(SparseMatrix::from_coo(n, n, edges));
  std::vector<std::tuple<int, int, double>> pedges;
  for (auto [i, j, v] : edges) pedges.emplace_back(perm[i], perm[j], v);
  SparseMatrix a2 = scale_rows(SparseMatrix::from_coo(n, n, pedges));

  DenseMatrix h = random_mat(n, d, rng);
  DenseMatrix hp(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) hp.at(perm[i], j) = h.at(i, j);

  ExplicitParams p = ExplicitParams::init(1, d, 2, 2, 9);
  std::vector<SparseMatrix> adj1{a1}, adj2{a2};
  Tape t1, t2;
  auto o1 = explicit_forward(t1, adj1, t1.constant(h), p);
  auto o2 = explicit_forward(t2, adj2, t2.constant(hp), p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      CHECK(std::abs(t1.value(o1).at(i, j) - t2.value(o2).at(perm[i], j)) <= 1e-10);
}

TEST_CASE("whole branch passes the finite-difference oracle and trains everywhere") {
  Hin hin = toy_hin();
  auto adj = explicit_adjacency(hin);
  const int d = 4;
  Rng rng(31);
  Param feat("feat", random_mat(hin.total_nodes(), d, rng));
  ExplicitParams p = ExplicitParams::init(hin.relation_count(), d, 2, 2, 17);
  std::vector<Param*> params{&feat};
  p.collect(params);

  auto build = [&](bool back) {
    Tape t;
    auto h = explicit_forward(t, adj, t.leaf(feat), p);
    auto loss = t.reduce_sum(t.ew_mul(h, h));
    if (back) t.backward(loss);
    return t.scalar(loss);
  };

  double err = fd::max_rel_error(params, [&] { return build(false); }, [&] { build(true); });
  CHECK(err <= 1e-4);

  for (Param* q : params) q->zero_grad();
  build(true);
  for (Param* q : params) CHECK(q->grad_norm() > 0.0);
}
