#include "clkcrec/model.hpp"

#include <cmath>

#include "clkcrec/errors.hpp"
#include "clkcrec/rng.hpp"

namespace clk {

Model Model::init(Hin hin_in, DenseMatrix features_in, const RunConfig& cfg) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  m.hin = std::move(hin_in);
  m.features = std::move(features_in);
  if (m.features.rows() != m.hin.total_nodes())
    throw ShapeError("model: feature rows do not match node count");

  const int d0 = m.features.cols();
  Rng rin = Rng::substream(cfg.seed, "w_in");
  double s = std::sqrt(6.0 / (cfg.dim + d0));
  DenseMatrix win(cfg.dim, d0);
  for (auto& x : win.values()) x = rin.uniform(-s, s);
  m.w_in = Param("w_in", std::move(win));

  auto free_emb = [&](const char* name) {
    Rng rem = Rng::substream(cfg.seed, name);
    DenseMatrix emb(m.hin.total_nodes(), cfg.dim);
    for (auto& x : emb.values()) x = 0.1 * rem.normal();
    return Param(name, std::move(emb));
  };
  if (m.has_er()) m.node_emb = free_emb("node_emb");
  if (m.has_ir()) m.node_emb_ir = free_emb("node_emb_ir");

  if (m.has_er()) {
    m.er_adj = explicit_adjacency(m.hin);
    m.er = ExplicitParams::init(m.hin.relation_count(), cfg.dim, cfg.er_bases, cfg.er_layers,
                                cfg.seed);
  }
  if (m.has_ir())
    m.ir = ImplicitParams::init(static_cast<int>(m.hin.relations.size()), cfg.ir_channels,
                                cfg.ir_hops, cfg.ir_gnn_layers, cfg.dim, cfg.seed);
  if (m.cl_enabled()) {
    m.gat_er = GatParams::init(cfg.dim, "gat_er", cfg.seed);
    m.gat_ir = GatParams::init(cfg.dim, "gat_ir", cfg.seed);
  }
  if (m.has_fusion())
    m.fuse = FusionParams::init(cfg.dim, cfg.fusion_dim, fusion_mode_from_string(cfg.fusion_mode),
                                cfg.seed);
  else
    m.fuse = FusionParams::init_single(cfg.dim, cfg.fusion_dim, cfg.seed);
  return m;
}

std::vector<Param*> Model::params() {
  std::vector<Param*> out{&w_in};
  if (has_er()) {
    out.push_back(&node_emb);
    er.collect(out);
  }
  if (has_ir()) {
    out.push_back(&node_emb_ir);
    ir.collect(out);
  }
  if (cl_enabled()) {
    gat_er.collect(out);
    gat_ir.collect(out);
  }
  fuse.collect(out);
  return out;
}

std::vector<const SparseMatrix*> Model::collection() const {
  std::vector<const SparseMatrix*> out;
  for (const auto& r : hin.relations) out.push_back(&r.adj);
  return out;
}

void refresh_prototypes(Model& m) {
  if (!m.cl_enabled()) return;
  Tape t;
  auto base = t.matmul_nt(t.constant(m.features), t.leaf(m.w_in));
  auto h_er = explicit_forward(t, m.er_adj, t.add(base, t.leaf(m.node_emb)), m.er);
  auto mats = m.collection();
  auto h_ir = implicit_forward(t, mats, t.add(base, t.leaf(m.node_emb_ir)), m.ir);
  m.proto_er = kmeans_prototypes(t.value(h_er), m.cfg.clusters).centers;
  m.proto_ir = kmeans_prototypes(t.value(h_ir), m.cfg.clusters).centers;
}

ForwardOut model_forward(Tape& t, Model& m) {
  ForwardOut f;
  auto base = t.matmul_nt(t.constant(m.features), t.leaf(m.w_in));  // n x dim
  if (m.has_er())
    f.h_er = explicit_forward(t, m.er_adj, t.add(base, t.leaf(m.node_emb)), m.er);
  if (m.has_ir()) {
    auto mats = m.collection();
    f.h_ir = implicit_forward(t, mats, t.add(base, t.leaf(m.node_emb_ir)), m.ir);
  }
  if (m.cl_enabled()) {
    if (m.proto_er.rows() == 0) refresh_prototypes(m);
    f.z_er = gat_encode(t, m.gat_er, f.h_er, m.proto_er);
    f.z_ir = gat_encode(t, m.gat_ir, f.h_ir, m.proto_ir);
  } else {
    f.z_er = f.h_er;
    f.z_ir = f.h_ir;
  }
  if (m.has_fusion()) {
    auto out = fuse_views(t, m.fuse, f.h_er, f.z_er, f.h_ir, f.z_ir);
    f.fused = out.fused;
    f.att_weights = out.weights;
  } else {
    // single-branch variants run the same readout depth with one view
    f.fused = m.has_er() ? fuse_single(t, m.fuse, f.h_er, f.z_er)
                         : fuse_single(t, m.fuse, f.h_ir, f.z_ir);
  }
  return f;
}

Tape::Id model_cl_loss(Tape& t, Model& m, const ForwardOut& f, const std::vector<int>* rows) {
  if (!m.cl_enabled()) throw UsageError("contrastive loss requested on a variant without it");
  Tape::Id z_er = f.z_er, z_ir = f.z_ir;
  if (rows) {
    z_er = t.gather_rows(z_er, *rows);
    z_ir = t.gather_rows(z_ir, *rows);
  }
  return combined_cl_loss(t, z_er, z_ir, m.cfg.tau);
}

}  // namespace clk
