#pragma once

#include <cstdint>
#include <string>

namespace clk {

// Every tunable in one flat struct. Serialized as sorted key=value lines;
// the digest of that canonical text ties checkpoints to the settings that
// produced them.
struct RunConfig {
  // embedding sizes
  int dim = 64;
  int fusion_dim = 64;

  // explicit branch
  int er_layers = 2;
  int er_bases = 10;

  // implicit branch
  int ir_channels = 2;
  int ir_hops = 4;
  int ir_gnn_layers = 2;

  // contrastive objective
  int clusters = 10;
  double tau = 0.5;
  double beta = 0.25;
  int cl_batch = 0;  // >0: contrastive loss uses a sampled node subset of this size

  // fusion / model variant
  std::string fusion_mode = "dual_head";  // dual_head | concat | add
  std::string variant = "full";  // full | only_er | only_ir | no_cl

  // optimization
  double lr = 0.003;
  double lambda = 1e-4;
  int epochs = 150;
  int batch_size = 8192;
  int patience = 40;

  // data handling
  std::string split = "leave_one_out";  // leave_one_out | ratio | temporal
  double split_param = 0.8;
  int eval_negatives = 99;
  std::uint64_t seed = 7;

  void validate() const;
  std::string to_string() const;          // canonical key=value text
  std::uint64_t digest() const;           // of the canonical text
  void set(const std::string& key, const std::string& value);

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
};

}  // namespace clk
