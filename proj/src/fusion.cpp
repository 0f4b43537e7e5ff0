#include "clkcrec/fusion.hpp"

#include <cmath>

#include "clkcrec/errors.hpp"
#include "clkcrec/rng.hpp"

namespace clk {

namespace {

DenseMatrix glorot(int r, int c, Rng& rng) {
  double s = std::sqrt(6.0 / (r + c));
  DenseMatrix m(r, c);
  for (auto& x : m.values()) x = rng.uniform(-s, s);
  return m;
}

// identity plus small noise: the view transform starts as a near pass-through
// so the dot-product ranking signal survives the extra depth at init
DenseMatrix noisy_identity(int n, Rng& rng) {
  DenseMatrix m = glorot(n, n, rng);
  for (auto& x : m.values()) x *= 0.1;
  for (int i = 0; i < n; ++i) m.at(i, i) += 1.0;
  return m;
}

// value map starts as a pass-through of the h half of [h | z]; the z half
// begins near zero so the enhanced encoding is phased in by training
DenseMatrix noisy_halves(int f, int dim, Rng& rng) {
  DenseMatrix m = glorot(f, 2 * dim, rng);
  for (auto& x : m.values()) x *= 0.1;
  for (int j = 0; j < f && j < dim; ++j) m.at(j, j) += 1.0;
  return m;
}

}  // namespace

FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "dual_head") return FusionMode::DualHead;
  if (s == "concat") return FusionMode::Concat;
  if (s == "add") return FusionMode::Add;
  throw ConfigError("unknown fusion mode: " + s);
}

std::string to_string(FusionMode m) {
  switch (m) {
    case FusionMode::DualHead: return "dual_head";
    case FusionMode::Concat: return "concat";
    default: return "add";
  }
}

FusionParams FusionParams::init(int dim, int fusion_dim, FusionMode mode, std::uint64_t seed) {
  if (dim < 1 || fusion_dim < 1) throw ConfigError("fusion needs positive dims");
  FusionParams p;
  p.mode = mode;
  p.dim = dim;
  p.fusion_dim = fusion_dim;
  if (mode == FusionMode::Concat) {
    Rng rc = Rng::substream(seed, "fuse.cat");
    p.w_cat = Param("fuse.w_cat", glorot(fusion_dim, 4 * dim, rc));
    p.b_cat = Param("fuse.b_cat", DenseMatrix(1, fusion_dim));
    return p;
  }
  Rng ra = Rng::substream(seed, "fuse.a");
  p.w_a = Param("fuse.w_a", noisy_identity(2 * dim, ra));
  p.b_a = Param("fuse.b_a", DenseMatrix(1, 2 * dim));
  Rng rb = Rng::substream(seed, "fuse.b");
  p.w_b = Param("fuse.w_b", noisy_identity(2 * dim, rb));
  p.b_b = Param("fuse.b_b", DenseMatrix(1, 2 * dim));
  Rng rv = Rng::substream(seed, "fuse.v");
  p.w_v = Param("fuse.w_v", noisy_halves(fusion_dim, dim, rv));
  p.b_v = Param("fuse.b_v", DenseMatrix(1, fusion_dim));
  if (mode == FusionMode::DualHead) {
    Rng rs = Rng::substream(seed, "fuse.s");
    p.w_s = Param("fuse.w_s", glorot(1, 2 * dim, rs));
    p.b_s = Param("fuse.b_s", DenseMatrix(1, 1));
  }
  return p;
}

FusionParams FusionParams::init_single(int dim, int fusion_dim, std::uint64_t seed) {
  if (dim < 1 || fusion_dim < 1) throw ConfigError("fusion needs positive dims");
  FusionParams p;
  p.views = 1;
  p.dim = dim;
  p.fusion_dim = fusion_dim;
  Rng ra = Rng::substream(seed, "fuse.a");
  p.w_a = Param("fuse.w_a", noisy_identity(2 * dim, ra));
  p.b_a = Param("fuse.b_a", DenseMatrix(1, 2 * dim));
  Rng rv = Rng::substream(seed, "fuse.v");
  p.w_v = Param("fuse.w_v", noisy_halves(fusion_dim, dim, rv));
  p.b_v = Param("fuse.b_v", DenseMatrix(1, fusion_dim));
  return p;
}

void FusionParams::collect(std::vector<Param*>& out) {
  if (views == 1) {
    out.push_back(&w_a);
    out.push_back(&b_a);
    out.push_back(&w_v);
    out.push_back(&b_v);
    return;
  }
  if (mode == FusionMode::Concat) {
    out.push_back(&w_cat);
    out.push_back(&b_cat);
    return;
  }
  out.push_back(&w_a);
  out.push_back(&b_a);
  out.push_back(&w_b);
  out.push_back(&b_b);
  out.push_back(&w_v);
  out.push_back(&b_v);
  if (mode == FusionMode::DualHead) {
    out.push_back(&w_s);
    out.push_back(&b_s);
  }
}

FusedViews fuse_views(Tape& t, FusionParams& p, Tape::Id h_a, Tape::Id z_a, Tape::Id h_b,
                      Tape::Id z_b) {
  auto va = t.concat_cols(h_a, z_a);  // n x 2d
  auto vb = t.concat_cols(h_b, z_b);
  if (p.mode == FusionMode::Concat) {
    auto both = t.concat_cols(va, vb);  // n x 4d
    return {t.add_row_bias(t.matmul_nt(both, t.leaf(p.w_cat)), t.leaf(p.b_cat)), -1};
  }
  auto ua = t.tanh_(t.add_row_bias(t.matmul_nt(va, t.leaf(p.w_a)), t.leaf(p.b_a)));
  auto ub = t.tanh_(t.add_row_bias(t.matmul_nt(vb, t.leaf(p.w_b)), t.leaf(p.b_b)));
  auto mapped = [&](Tape::Id u) {
    return t.add_row_bias(t.matmul_nt(u, t.leaf(p.w_v)), t.leaf(p.b_v));  // n x f
  };
  if (p.mode == FusionMode::Add) return {t.add(mapped(ua), mapped(ub)), -1};
  auto score = [&](Tape::Id u) {
    return t.add_row_bias(t.matmul_nt(u, t.leaf(p.w_s)), t.leaf(p.b_s));  // n x 1
  };
  auto alpha = t.row_softmax(t.concat_cols(score(ua), score(ub)));  // n x 2
  auto fused = t.add(t.rows_scale(mapped(ua), t.select_col(alpha, 0)),
                     t.rows_scale(mapped(ub), t.select_col(alpha, 1)));
  return {fused, alpha};
}

Tape::Id fuse_single(Tape& t, FusionParams& p, Tape::Id h, Tape::Id z) {
  auto v = t.concat_cols(h, z);
  auto u = t.tanh_(t.add_row_bias(t.matmul_nt(v, t.leaf(p.w_a)), t.leaf(p.b_a)));
  return t.add_row_bias(t.matmul_nt(u, t.leaf(p.w_v)), t.leaf(p.b_v));
}

Tape::Id predict_scores(Tape& t, Tape::Id fused, const std::vector<int>& user_rows,
                        const std::vector<int>& concept_rows) {
  if (user_rows.size() != concept_rows.size())
    throw ShapeError("predict: user/concept index counts differ");
  auto hu = t.gather_rows(fused, user_rows);
  auto hk = t.gather_rows(fused, concept_rows);
  return t.row_sum(t.ew_mul(hu, hk));
}

}  // namespace clk
