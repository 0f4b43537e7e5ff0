#include "clkcrec/implicit_rel.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

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

ImplicitParams ImplicitParams::init(int collection_size, int channels, int hops, int gnn_layers,
                                    int dim, std::uint64_t seed) {
  if (collection_size < 1 || channels < 1 || hops < 1 || gnn_layers < 1 || dim < 1)
    throw ConfigError("implicit branch needs positive collection/channel/hop/layer/dim counts");
  ImplicitParams p;
  p.channels = channels;
  p.hops = hops;
  p.dim = dim;
  p.collection_size = collection_size;
  for (int c = 0; c < channels; ++c) {
    std::vector<Param> row;
    for (int h = 0; h < hops; ++h) {
      std::string name = "ir.c" + std::to_string(c) + ".hop" + std::to_string(h);
      Rng rng = Rng::substream(seed, name);
      DenseMatrix logits(1, collection_size);
      // small random logits so channels start near-uniform but distinct
      for (auto& x : logits.values()) x = rng.uniform(-0.1, 0.1);
      row.emplace_back(name, std::move(logits));
    }
    p.hop_logits.push_back(std::move(row));
  }
  for (int l = 0; l < gnn_layers; ++l) {
    std::string name = "ir.gnn" + std::to_string(l);
    Rng rng = Rng::substream(seed, name);
    p.gnn.emplace_back(name, glorot(dim, dim, rng));
  }
  Rng ra = Rng::substream(seed, "ir.agg");
  p.agg_w = Param("ir.agg_w", glorot(dim, channels * dim, ra));
  p.agg_b = Param("ir.agg_b", DenseMatrix(1, dim));
  return p;
}

void ImplicitParams::collect(std::vector<Param*>& out) {
  for (auto& row : hop_logits)
    for (auto& l : row) out.push_back(&l);
  for (auto& w : gnn) out.push_back(&w);
  out.push_back(&agg_w);
  out.push_back(&agg_b);
}

std::vector<const SparseMatrix*> adjacency_collection(const Hin& hin) {
  std::vector<const SparseMatrix*> out;
  out.reserve(hin.relations.size());
  for (const auto& r : hin.relations) out.push_back(&r.adj);
  return out;
}

Tape::Id soft_select(Tape& t, const std::vector<const SparseMatrix*>& mats, Tape::Id logits) {
  return t.sp_combine(mats, t.row_softmax(logits));
}

Tape::Id stack_hops(Tape& t, const std::vector<const SparseMatrix*>& mats,
                    std::vector<Param>& channel_logits) {
  if (channel_logits.empty()) throw UsageError("stack_hops needs at least one hop");
  Tape::Id a = soft_select(t, mats, t.leaf(channel_logits[0]));
  for (std::size_t h = 1; h < channel_logits.size(); ++h)
    a = t.sp_matmul_v(t.sp_row_normalize_v(a),
                      soft_select(t, mats, t.leaf(channel_logits[h])));
  return a;
}

Tape::Id implicit_forward(Tape& t, const std::vector<const SparseMatrix*>& mats, Tape::Id h0,
                          ImplicitParams& p) {
  if (static_cast<int>(mats.size()) != p.collection_size)
    throw ShapeError("implicit branch: collection size does not match logits width");
  Tape::Id cat = -1;
  for (int c = 0; c < p.channels; ++c) {
    auto a = stack_hops(t, mats, p.hop_logits[c]);
    auto an = t.sp_row_normalize_v(t.sp_add_identity_v(a));
    Tape::Id h = h0;
    for (auto& w : p.gnn) h = t.tanh_(t.matmul(t.spmm_v(an, h), t.leaf(w)));
    cat = (c == 0) ? h : t.concat_cols(cat, h);
  }
  return t.tanh_(t.add_row_bias(t.matmul_nt(cat, t.leaf(p.agg_w)), t.leaf(p.agg_b)));
}

std::string MetaPathReport::serialize() const {
  std::ostringstream os;
  os << "metapaths v1\n";
  for (const auto& e : entries) {
    os << e.channel << '\t' << e.rank << '\t' << format_double(e.weight);
    for (const auto& n : e.relation_names) os << '\t' << n;
    os << '\n';
  }
  return os.str();
}

MetaPathReport explain_metapaths(const ImplicitParams& p,
                                 const std::vector<std::string>& relation_names, int top_k) {
  if (static_cast<int>(relation_names.size()) != p.collection_size)
    throw UsageError("explain: relation name count does not match collection size");
  if (top_k < 1) throw UsageError("explain: top_k must be positive");

  MetaPathReport rep;
  for (int c = 0; c < p.channels; ++c) {
    // per-hop selection distributions from the trained logits
    std::vector<std::vector<double>> w(p.hops);
    for (int h = 0; h < p.hops; ++h) w[h] = softmax(p.hop_logits[c][h].value.values());

    // best-first over partial sequences; products only shrink with depth, so
    // the first top_k completed paths are the global best
    struct Partial {
      double weight;
      std::vector<int> seq;
    };
    auto names_of = [&](const std::vector<int>& seq) {
      std::vector<std::string> out;
      for (int i : seq) out.push_back(relation_names[i]);
      return out;
    };
    auto better = [&](const Partial& a, const Partial& b) {
      if (a.weight != b.weight) return a.weight > b.weight;
      return names_of(a.seq) < names_of(b.seq);  // ties break lexicographically
    };
    auto worse = [&](const Partial& a, const Partial& b) { return better(b, a); };
    std::priority_queue<Partial, std::vector<Partial>, decltype(worse)> heap(worse);
    heap.push({1.0, {}});
    int emitted = 0;
    while (!heap.empty() && emitted < top_k) {
      Partial cur = heap.top();
      heap.pop();
      if (static_cast<int>(cur.seq.size()) == p.hops) {
        MetaPathEntry e;
        e.channel = c;
        e.rank = ++emitted;
        e.weight = cur.weight;
        e.relation_names = names_of(cur.seq);
        rep.entries.push_back(std::move(e));
        continue;
      }
      int h = static_cast<int>(cur.seq.size());
      for (int i = 0; i < p.collection_size; ++i) {
        Partial nxt = cur;
        nxt.weight *= w[h][i];
        nxt.seq.push_back(i);
        heap.push(std::move(nxt));
      }
    }
  }
  return rep;
}

}  // namespace clk
