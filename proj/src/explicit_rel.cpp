#include "clkcrec/explicit_rel.hpp"

#include <cmath>
#include <string>

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

}  // namespace

ExplicitParams ExplicitParams::init(int num_relations, int dim, int num_bases, int num_layers,
                                    std::uint64_t seed) {
  if (num_relations < 1 || dim < 1 || num_bases < 1 || num_layers < 1)
    throw ConfigError("explicit branch needs positive relation/dim/basis/layer counts");
  ExplicitParams p;
  p.dim = dim;
  p.num_relations = num_relations;
  p.num_bases = num_bases;
  Rng rb = Rng::substream(seed, "er.basis");
  p.basis = Param("er.basis", glorot(num_bases, dim, rb));
  Rng rc = Rng::substream(seed, "er.coeff");
  p.coeff = Param("er.coeff", glorot(num_relations, num_bases, rc));
  for (int l = 0; l < num_layers; ++l) {
    ExplicitLayerParams lp;
    std::string pre = "er.l" + std::to_string(l) + ".";
    for (int r = 0; r < num_relations; ++r) {
      Rng rw = Rng::substream(seed, pre + "w" + std::to_string(r));
      lp.w_msg.emplace_back(pre + "w" + std::to_string(r), glorot(dim, dim, rw));
    }
    Rng rs = Rng::substream(seed, pre + "self");
    lp.w_self = Param(pre + "self", glorot(dim, dim, rs));
    lp.bias = Param(pre + "bias", DenseMatrix(1, dim));
    if (l + 1 < num_layers) {
      // the final layer never advances the relation embeddings
      Rng rr = Rng::substream(seed, pre + "rel");
      lp.w_rel = Param(pre + "rel", glorot(dim, dim, rr));
    }
    p.layers.push_back(std::move(lp));
  }
  return p;
}

void ExplicitParams::collect(std::vector<Param*>& out) {
  out.push_back(&basis);
  out.push_back(&coeff);
  for (auto& lp : layers) {
    for (auto& w : lp.w_msg) out.push_back(&w);
    out.push_back(&lp.w_self);
    out.push_back(&lp.bias);
    if (lp.w_rel.value.size() > 0) out.push_back(&lp.w_rel);
  }
}

std::vector<SparseMatrix> explicit_adjacency(const Hin& hin) {
  const int n = hin.total_nodes();
  const int rc = hin.relation_count();
  std::vector<double> indeg(n, 0.0);
  for (int r = 0; r < rc; ++r) {
    const SparseMatrix& a = hin.relations[r].adj;
    for (int i = 0; i < n; ++i)
      for (int e = a.rowptr()[i]; e < a.rowptr()[i + 1]; ++e) indeg[i] += a.vals()[e];
  }
  std::vector<SparseMatrix> out;
  out.reserve(rc);
  for (int r = 0; r < rc; ++r) {
    SparseMatrix a = hin.relations[r].adj;
    for (int i = 0; i < n; ++i)
      for (int e = a.rowptr()[i]; e < a.rowptr()[i + 1]; ++e)
        a.vals()[e] /= indeg[i];  // indeg > 0 wherever a row has entries
    out.push_back(std::move(a));
  }
  return out;
}

Tape::Id relation_embed(Tape& t, ExplicitParams& p) {
  return t.matmul(t.leaf(p.coeff), t.leaf(p.basis));
}

Tape::Id explicit_layer(Tape& t, const std::vector<SparseMatrix>& adj, Tape::Id h, Tape::Id z,
                        ExplicitLayerParams& lp) {
  if (adj.size() != lp.w_msg.size())
    throw ShapeError("explicit layer: adjacency count does not match weight count");
  Tape::Id acc = t.add_row_bias(t.matmul_nt(h, t.leaf(lp.w_self)), t.leaf(lp.bias));
  for (std::size_t r = 0; r < adj.size(); ++r) {
    auto zr = t.gather_rows(z, {static_cast<int>(r)});
    auto msg = t.spmm_const(&adj[r], t.circcorr_rows(h, zr));
    acc = t.add(acc, t.matmul_nt(msg, t.leaf(lp.w_msg[r])));
  }
  return t.tanh_(acc);
}

Tape::Id explicit_forward(Tape& t, const std::vector<SparseMatrix>& adj, Tape::Id h0,
                          ExplicitParams& p) {
  Tape::Id h = h0;
  Tape::Id z = relation_embed(t, p);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    h = explicit_layer(t, adj, h, z, p.layers[l]);
    if (l + 1 < p.layers.size()) z = t.matmul_nt(z, t.leaf(p.layers[l].w_rel));
  }
  return h;
}

}  // namespace clk
