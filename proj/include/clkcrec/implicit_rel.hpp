#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clkcrec/hin.hpp"
#include "clkcrec/tape.hpp"

namespace clk {

// Implicit-relation branch: each channel learns a soft selection over the
// adjacency collection at every hop, composes the hops into one reachability
// matrix, and runs a small GCN over it; channel outputs are concatenated and
// mixed down to d.
struct ImplicitParams {
  // hop_logits[c][t]: 1 x |collection| selection logits for channel c, hop t
  std::vector<std::vector<Param>> hop_logits;
  std::vector<Param> gnn;  // d x d per GCN layer, shared across channels
  Param agg_w;             // d x (C*d)
  Param agg_b;             // 1 x d
  int channels = 0;
  int hops = 0;
  int dim = 0;
  int collection_size = 0;

  static ImplicitParams init(int collection_size, int channels, int hops, int gnn_layers,
                             int dim, std::uint64_t seed);
  void collect(std::vector<Param*>& out);
};

// softmax(logits)-weighted sum of the collection (one hop)
Tape::Id soft_select(Tape& t, const std::vector<const SparseMatrix*>& mats, Tape::Id logits);

// A(0) = select(0); A(t) = rownorm(A(t-1)) * select(t); returns A(hops-1)
Tape::Id stack_hops(Tape& t, const std::vector<const SparseMatrix*>& mats,
                    std::vector<Param>& channel_logits);

// full branch output, n x d
Tape::Id implicit_forward(Tape& t, const std::vector<const SparseMatrix*>& mats, Tape::Id h0,
                          ImplicitParams& p);

// pointers into hin.relations (forward..., inverse..., identity)
std::vector<const SparseMatrix*> adjacency_collection(const Hin& hin);

struct MetaPathEntry {
  int channel = 0;
  int rank = 0;
  double weight = 0.0;  // product of per-hop selection weights
  std::vector<std::string> relation_names;
};

struct MetaPathReport {
  std::vector<MetaPathEntry> entries;
  std::string serialize() const;
};

// top_k most probable hop sequences per channel, from trained logits
MetaPathReport explain_metapaths(const ImplicitParams& p,
                                 const std::vector<std::string>& relation_names, int top_k);

}  // namespace clk
