#pragma once

#include <cstdint>
#include <vector>

#include "clkcrec/hin.hpp"
#include "clkcrec/tape.hpp"

namespace clk {

// One explicit-branch layer: a mixing matrix per relation, a self transform,
// a bias, and an update for the relation embeddings.
struct ExplicitLayerParams {
  std::vector<Param> w_msg;  // per relation, d x d
  Param w_self;              // d x d
  Param bias;                // 1 x d
  Param w_rel;               // d x d, advances relation embeddings
};

// Explicit-relation branch. Relation embeddings come from a shared basis:
// Z = coeff * basis, so R relations cost R*B + B*d parameters instead of R*d.
struct ExplicitParams {
  Param basis;  // B x d
  Param coeff;  // R x B
  std::vector<ExplicitLayerParams> layers;
  int dim = 0;
  int num_relations = 0;
  int num_bases = 0;

  static ExplicitParams init(int num_relations, int dim, int num_bases, int num_layers,
                             std::uint64_t seed);
  void collect(std::vector<Param*>& out);
};

// Message-passing adjacency per non-identity relation: each row of every
// forward/inverse matrix is scaled by 1 / (total in-degree of that node
// across all relations), so a node's incoming messages average rather than
// grow with degree.
std::vector<SparseMatrix> explicit_adjacency(const Hin& hin);

// Z = coeff * basis (R x d)
Tape::Id relation_embed(Tape& t, ExplicitParams& p);

// h' = tanh(sum_r adj_r * circcorr(h, z_r) * w_r^T + h * w_self^T + bias)
Tape::Id explicit_layer(Tape& t, const std::vector<SparseMatrix>& adj, Tape::Id h, Tape::Id z,
                        ExplicitLayerParams& lp);

// full branch: runs every layer, advancing z between layers; returns final h
Tape::Id explicit_forward(Tape& t, const std::vector<SparseMatrix>& adj, Tape::Id h0,
                          ExplicitParams& p);

}  // namespace clk
