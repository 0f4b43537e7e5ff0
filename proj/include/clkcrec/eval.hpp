#pragma once

#include <string>
#include <vector>

#include "clkcrec/model.hpp"
#include "clkcrec/train.hpp"

namespace clk {

struct Metrics {
  double hr5 = 0, hr10 = 0, hr20 = 0;
  double ndcg5 = 0, ndcg10 = 0, ndcg20 = 0;
  double mrr = 0;
  int cases = 0;
  int skipped = 0;  // test users with no candidate pool
};

struct RankedCase {
  int user = 0;
  int positive = 0;
  int rank = 0;  // 1-based among 1 + eval_negatives candidates
};

struct RankingReport {
  Metrics metrics;
  std::vector<RankedCase> cases;
  std::string serialize() const;
};

// Held-out ranking protocol: each test positive is scored against
// cfg.eval_negatives sampled unobserved concepts (with replacement when the
// pool is smaller); ties resolve toward the lower concept id.
RankingReport evaluate(Model& m, const InteractionSplit& split);

// rank positions 1..n for one case, from raw candidate scores
int rank_of_positive(double pos_score, int pos_id, const std::vector<double>& neg_scores,
                     const std::vector<int>& neg_ids);

struct AblationRow {
  std::string variant;
  Metrics metrics;
};

// trains and evaluates every model variant on the same data and split
std::vector<AblationRow> ablation_suite(const Hin& hin, const DenseMatrix& features,
                                        const InteractionSplit& split, const RunConfig& base);

std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace clk
