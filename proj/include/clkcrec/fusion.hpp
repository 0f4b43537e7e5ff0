#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clkcrec/tape.hpp"

namespace clk {

// How the two branch views are merged into one node embedding.
enum class FusionMode { DualHead, Concat, Add };

FusionMode fusion_mode_from_string(const std::string& s);
std::string to_string(FusionMode m);

// Each view enters as [h | z]: the branch embedding concatenated with its
// enhanced encoding (n x 2d). Per view, u = tanh([h|z] W_view + b_view);
// the shared W_v maps u to the fused width and the shared W_s scores it.
// DualHead softmaxes the two scores and takes the convex combination of the
// mapped views; Add sums the mapped views; Concat is one linear map over
// both raw view pairs.
struct FusionParams {
  Param w_a, b_a;  // view transforms, 2d x 2d and 1 x 2d
  Param w_b, b_b;
  Param w_v, b_v;  // shared value map, f x 2d and 1 x f
  Param w_s, b_s;  // shared scorer, 1 x 2d and 1 x 1
  Param w_cat, b_cat;  // concat merge, f x 4d and 1 x f
  FusionMode mode = FusionMode::DualHead;
  int dim = 0;
  int fusion_dim = 0;

  int views = 2;

  static FusionParams init(int dim, int fusion_dim, FusionMode mode, std::uint64_t seed);
  // one-view head for single-branch variants: same transform and value map,
  // no second view and no scorer
  static FusionParams init_single(int dim, int fusion_dim, std::uint64_t seed);
  void collect(std::vector<Param*>& out);
};

struct FusedViews {
  Tape::Id fused;    // n x f
  Tape::Id weights;  // n x 2 attention weights (DualHead) or -1
};

// h_a/z_a and h_b/z_b are the two views' branch embeddings and enhanced
// encodings (all n x d); callers without an enhanced encoding pass h twice
FusedViews fuse_views(Tape& t, FusionParams& p, Tape::Id h_a, Tape::Id z_a, Tape::Id h_b,
                      Tape::Id z_b);

// single-view readout: the mapped view W_v tanh([h|z] W_a + b_a) + b_v
Tape::Id fuse_single(Tape& t, FusionParams& p, Tape::Id h, Tape::Id z);

// n x 1 interaction scores: row-wise dot product of user and concept rows
Tape::Id predict_scores(Tape& t, Tape::Id fused, const std::vector<int>& user_rows,
                        const std::vector<int>& concept_rows);

}  // namespace clk
