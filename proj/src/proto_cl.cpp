#include "clkcrec/proto_cl.hpp"

#include <cmath>
#include <limits>

#include "clkcrec/errors.hpp"
#include "clkcrec/rng.hpp"

namespace clk {

namespace {

double sqdist(const DenseMatrix& a, int i, const DenseMatrix& b, int j) {
  double s = 0.0;
  for (int c = 0; c < a.cols(); ++c) {
    double d = a.at(i, c) - b.at(j, c);
    s += d * d;
  }
  return s;
}

DenseMatrix glorot(int r, int c, Rng& rng) {
  double s = std::sqrt(6.0 / (r + c));
  DenseMatrix m(r, c);
  for (auto& x : m.values()) x = rng.uniform(-s, s);
  return m;
}

// x scaled so each row has unit L2 norm; zero rows rejected upstream of here
Tape::Id row_unit(Tape& t, Tape::Id x) {
  auto n = t.value(x).rows();
  auto norms = t.sqrt_(t.row_sum(t.ew_mul(x, x)));
  auto recip = t.ew_div(t.constant(DenseMatrix(n, 1, 1.0)), norms);
  return t.rows_scale(x, recip);
}

}  // namespace

Prototypes kmeans_prototypes(const DenseMatrix& data, int k, int max_iters) {
  const int n = data.rows(), d = data.cols();
  if (k < 1 || k > n) throw UsageError("kmeans: k must be in [1, rows]");
  if (!data.all_finite()) throw NumericError("kmeans: non-finite input");

  Prototypes out;
  out.centers = DenseMatrix(k, d);
  out.assign.assign(n, 0);

  // farthest-from-mean seed, then farthest-point traversal (deterministic)
  DenseMatrix mean(1, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) mean.at(0, c) += data.at(i, c) / n;
  std::vector<int> seeds;
  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  int first = 0;
  double best = -1.0;
  for (int i = 0; i < n; ++i) {
    double dd = sqdist(data, i, mean, 0);
    if (dd > best) {
      best = dd;
      first = i;
    }
  }
  seeds.push_back(first);
  while (static_cast<int>(seeds.size()) < k) {
    int last = seeds.back();
    int far = 0;
    double fb = -1.0;
    for (int i = 0; i < n; ++i) {
      mind[i] = std::min(mind[i], sqdist(data, i, data, last));
      if (mind[i] > fb) {
        fb = mind[i];
        far = i;
      }
    }
    seeds.push_back(far);
  }
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < d; ++j) out.centers.at(c, j) = data.at(seeds[c], j);

  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int bc = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double dd = sqdist(data, i, out.centers, c);
        if (dd < bd) {
          bd = dd;
          bc = c;
        }
      }
      if (bc != out.assign[i]) changed = true;
      out.assign[i] = bc;
    }
    if (!changed && it > 0) break;

    DenseMatrix sums(k, d);
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      ++counts[out.assign[i]];
      for (int j = 0; j < d; ++j) sums.at(out.assign[i], j) += data.at(i, j);
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (int j = 0; j < d; ++j) out.centers.at(c, j) = sums.at(c, j) / counts[c];
      } else {
        // reseed an empty cluster to the point farthest from its center
        int far = 0;
        double fb = -1.0;
        for (int i = 0; i < n; ++i) {
          double dd = sqdist(data, i, out.centers, out.assign[i]);
          if (dd > fb) {
            fb = dd;
            far = i;
          }
        }
        for (int j = 0; j < d; ++j) out.centers.at(c, j) = data.at(far, j);
        out.assign[far] = c;
      }
    }
  }

  out.inertia = 0.0;
  for (int i = 0; i < n; ++i) out.inertia += sqdist(data, i, out.centers, out.assign[i]);
  return out;
}

GatParams GatParams::init(int dim, const std::string& prefix, std::uint64_t seed) {
  GatParams g;
  Rng rw = Rng::substream(seed, prefix + ".w");
  g.w = Param(prefix + ".w", glorot(dim, dim, rw));
  Rng r1 = Rng::substream(seed, prefix + ".a1");
  g.a1 = Param(prefix + ".a1", glorot(1, dim, r1));
  Rng r2 = Rng::substream(seed, prefix + ".a2");
  g.a2 = Param(prefix + ".a2", glorot(1, dim, r2));
  return g;
}

void GatParams::collect(std::vector<Param*>& out) {
  out.push_back(&w);
  out.push_back(&a1);
  out.push_back(&a2);
}

Tape::Id gat_encode(Tape& t, GatParams& g, Tape::Id x, const DenseMatrix& prototypes) {
  const int k = prototypes.rows();
  auto wi = t.leaf(g.w);
  auto tx = t.matmul_nt(x, wi);                          // n x d
  auto tp = t.matmul_nt(t.constant(prototypes), wi);     // k x d
  auto s1 = t.matmul_nt(tx, t.leaf(g.a1));               // n x 1
  auto s2 = t.matmul_nt(t.leaf(g.a2), tp);               // 1 x k
  auto e = t.add_row_bias(t.matmul(s1, t.constant(DenseMatrix(1, k, 1.0))), s2);
  auto alpha = t.row_softmax(t.leaky_relu(e, g.leaky_slope));
  return t.matmul(alpha, tp);
}

Tape::Id infonce_per_anchor(Tape& t, Tape::Id anchor, Tape::Id other, double tau) {
  if (tau <= 0.0) throw UsageError("infonce: tau must be positive");
  auto an = row_unit(t, anchor);
  auto on = row_unit(t, other);
  auto sims = t.scale(t.matmul_nt(an, on), 1.0 / tau);   // n x n
  auto pos = t.scale(t.row_sum(t.ew_mul(an, on)), 1.0 / tau);  // n x 1, diagonal
  auto lse = t.log_(t.row_sum(t.exp_(sims)));
  return t.sub(lse, pos);
}

Tape::Id combined_cl_loss(Tape& t, Tape::Id z_a, Tape::Id z_b, double tau) {
  auto fwd = t.reduce_sum(infonce_per_anchor(t, z_a, z_b, tau));
  auto bwd = t.reduce_sum(infonce_per_anchor(t, z_b, z_a, tau));
  // per-anchor average keeps the term comparable across graph sizes
  return t.scale(t.add(fwd, bwd), 0.5 / t.value(z_a).rows());
}

}  // namespace clk
