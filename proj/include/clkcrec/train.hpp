#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "clkcrec/model.hpp"

namespace clk {

struct Triple {
  int user;  // local user id
  int pos;   // observed concept
  int neg;   // sampled unobserved concept
};

// One pass worth of ranking triples: every train interaction appears once in
// a seeded shuffle, each with a uniform negative outside the user's
// positives. Users whose positives cover every concept are skipped and
// counted in skipped_users.
std::vector<Triple> sample_triples(const InteractionSplit& split, std::uint64_t seed, int epoch,
                                   int& skipped_users);

// mean softplus(-(score_pos - score_neg)) over the batch
Tape::Id bpr_loss(Tape& t, const Model& m, Tape::Id fused, const std::vector<Triple>& batch);

// lambda * sum of squared parameter entries
Tape::Id l2_penalty(Tape& t, std::vector<Param*>& params, double lambda);

struct TrainResult {
  std::vector<double> loss_trace;  // mean total loss per epoch
  int epochs_run = 0;
  int best_epoch = 0;
  double best_loss = 0.0;

  std::string trace_text() const;  // "epoch<TAB>loss" lines
};

// Full optimization loop: per-epoch prototype refresh for the contrastive
// term, Adam updates, early stop after cfg.patience epochs without
// improvement. Throws NumericError with diagnostics if the loss leaves the
// finite range.
TrainResult train_model(Model& m, const InteractionSplit& split, std::ostream* log = nullptr);

}  // namespace clk
