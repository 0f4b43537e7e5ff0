#pragma once

#include <cstdint>
#include <vector>

#include "clkcrec/tape.hpp"

namespace clk {

// k-means result; also the node set of the prototypical graph, where every
// embedding attends over all k prototypes.
struct Prototypes {
  DenseMatrix centers;      // k x d
  std::vector<int> assign;  // nearest center per row
  double inertia = 0.0;
};

// Deterministic Lloyd iteration: seeds with the point farthest from the data
// mean, then farthest-point traversal; empty clusters are reseeded to the
// point farthest from its current center; at most max_iters rounds.
Prototypes kmeans_prototypes(const DenseMatrix& data, int k, int max_iters = 100);

// Single attention layer over the prototypes.
struct GatParams {
  Param w;   // d x d
  Param a1;  // 1 x d, scores the transformed query
  Param a2;  // 1 x d, scores the transformed prototype
  double leaky_slope = 0.2;

  static GatParams init(int dim, const std::string& prefix, std::uint64_t seed);
  void collect(std::vector<Param*>& out);
};

// Attention readout of x (n x d) against fixed prototypes (k x d):
// alpha = softmax(leakyrelu(x W a1^T + (P W a2^T)^T)), out = alpha (P W^T).
// Prototypes enter as tape constants, so no gradient reaches them.
Tape::Id gat_encode(Tape& t, GatParams& g, Tape::Id x, const DenseMatrix& prototypes);

// Per-anchor contrastive terms (n x 1). Anchor i is scored against every row
// of `other` with cosine similarity at temperature tau; the positive is the
// matching row and sits in the denominator, so a batch with uniform
// similarities scores exactly log n per anchor.
Tape::Id infonce_per_anchor(Tape& t, Tape::Id anchor, Tape::Id other, double tau);

// Symmetric contrastive loss between the two view encodings: the per-anchor
// average of both directions.
Tape::Id combined_cl_loss(Tape& t, Tape::Id z_a, Tape::Id z_b, double tau);

}  // namespace clk
