#pragma once

#include <vector>

#include "clkcrec/config.hpp"
#include "clkcrec/explicit_rel.hpp"
#include "clkcrec/fusion.hpp"
#include "clkcrec/hin.hpp"
#include "clkcrec/implicit_rel.hpp"
#include "clkcrec/proto_cl.hpp"

namespace clk {

// The whole recommender: input projection, the two relation branches, the
// contrastive encoders, and the fusion head. Which pieces exist depends on
// cfg.variant; params() lists exactly the trainable ones.
struct Model {
  RunConfig cfg;
  Hin hin;
  DenseMatrix features;                 // |V| x d0, fixed
  std::vector<SparseMatrix> er_adj;     // degree-scaled message adjacency
  Param w_in;  // dim x d0, shared feature projection
  // free per-node embeddings, one per branch so their gradients stay apart
  Param node_emb;     // |V| x dim, explicit branch
  Param node_emb_ir;  // |V| x dim, implicit branch
  ExplicitParams er;
  ImplicitParams ir;
  GatParams gat_er, gat_ir;
  FusionParams fuse;
  // current prototype centers (not trainable; refreshed from the embeddings)
  DenseMatrix proto_er, proto_ir;

  static Model init(Hin hin, DenseMatrix features, const RunConfig& cfg);

  bool has_er() const { return cfg.variant != "only_ir"; }
  bool has_ir() const { return cfg.variant != "only_er"; }
  bool has_fusion() const { return has_er() && has_ir(); }
  bool cl_enabled() const { return cfg.variant == "full" && cfg.beta > 0; }

  std::vector<Param*> params();
  std::vector<const SparseMatrix*> collection() const;
};

struct ForwardOut {
  Tape::Id h_er = -1;
  Tape::Id h_ir = -1;
  Tape::Id z_er = -1;  // enhanced encodings; equal to h_* without prototypes
  Tape::Id z_ir = -1;
  Tape::Id fused = -1;
  Tape::Id att_weights = -1;  // n x 2 when the dual-head path ran
};

// recompute the prototype centers from the current branch embeddings
// (no gradient); required before forward passes on contrastive variants
void refresh_prototypes(Model& m);

ForwardOut model_forward(Tape& t, Model& m);

// contrastive term between the two enhanced view encodings; rows, when
// given, restricts the anchors to that node subset
Tape::Id model_cl_loss(Tape& t, Model& m, const ForwardOut& f,
                       const std::vector<int>* rows = nullptr);

}  // namespace clk
