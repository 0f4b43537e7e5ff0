#include "clkcrec/eval.hpp"

#include <cmath>
#include <sstream>

#include "clkcrec/errors.hpp"
#include "clkcrec/rng.hpp"

namespace clk {

int rank_of_positive(double pos_score, int pos_id, const std::vector<double>& neg_scores,
                     const std::vector<int>& neg_ids) {
  int rank = 1;
  for (std::size_t i = 0; i < neg_scores.size(); ++i)
    if (neg_scores[i] > pos_score || (neg_scores[i] == pos_score && neg_ids[i] < pos_id)) ++rank;
  return rank;
}

RankingReport evaluate(Model& m, const InteractionSplit& split) {
  refresh_prototypes(m);  // derive them from the final parameters
  Tape t;
  auto f = model_forward(t, m);
  const DenseMatrix& fused = t.value(f.fused);
  const int d = fused.cols();

  auto score = [&](int user, int concept_id) {
    double s = 0.0;
    int ur = m.hin.user_global(user), kr = m.hin.concept_global(concept_id);
    for (int j = 0; j < d; ++j) s += fused.at(ur, j) * fused.at(kr, j);
    return s;
  };

  RankingReport rep;
  const int want = m.cfg.eval_negatives;
  for (const auto& it : split.test) {
    const auto& pos = split.user_positives.at(it.user);
    std::vector<int> pool;
    for (int k = 0; k < split.num_concepts; ++k)
      if (!pos.count(k)) pool.push_back(k);
    if (pool.empty()) {
      ++rep.metrics.skipped;
      continue;
    }
    // per-case substream so any one ranking reproduces in isolation
    Rng rng = Rng::substream(m.cfg.seed,
                             "eval.u" + std::to_string(it.user) + ".k" +
                                 std::to_string(it.concept_id));
    std::vector<int> negs;
    if (static_cast<int>(pool.size()) >= want) {
      std::vector<int> shuffled = pool;
      rng.shuffle(shuffled);
      negs.assign(shuffled.begin(), shuffled.begin() + want);
    } else {
      // small pool: draw with replacement to keep the candidate count fixed
      for (int i = 0; i < want; ++i) negs.push_back(pool[rng.below(pool.size())]);
    }
    std::vector<double> neg_scores;
    for (int k : negs) neg_scores.push_back(score(it.user, k));
    int rank = rank_of_positive(score(it.user, it.concept_id), it.concept_id, neg_scores, negs);
    rep.cases.push_back({it.user, it.concept_id, rank});

    auto hit = [&](int k) { return rank <= k ? 1.0 : 0.0; };
    auto ndcg = [&](int k) { return rank <= k ? 1.0 / std::log2(rank + 1.0) : 0.0; };
    rep.metrics.hr5 += hit(5);
    rep.metrics.hr10 += hit(10);
    rep.metrics.hr20 += hit(20);
    rep.metrics.ndcg5 += ndcg(5);
    rep.metrics.ndcg10 += ndcg(10);
    rep.metrics.ndcg20 += ndcg(20);
    rep.metrics.mrr += 1.0 / rank;
    ++rep.metrics.cases;
  }
  if (rep.metrics.cases > 0) {
    double n = rep.metrics.cases;
    rep.metrics.hr5 /= n;
    rep.metrics.hr10 /= n;
    rep.metrics.hr20 /= n;
    rep.metrics.ndcg5 /= n;
    rep.metrics.ndcg10 /= n;
    rep.metrics.ndcg20 /= n;
    rep.metrics.mrr /= n;
  }
  return rep;
}

std::string RankingReport::serialize() const {
  std::ostringstream os;
  os << "report v1\n"
     << "cases\t" << metrics.cases << '\n'
     << "skipped\t" << metrics.skipped << '\n'
     << "hr@5\t" << format_double(metrics.hr5) << '\n'
     << "hr@10\t" << format_double(metrics.hr10) << '\n'
     << "hr@20\t" << format_double(metrics.hr20) << '\n'
     << "ndcg@5\t" << format_double(metrics.ndcg5) << '\n'
     << "ndcg@10\t" << format_double(metrics.ndcg10) << '\n'
     << "ndcg@20\t" << format_double(metrics.ndcg20) << '\n'
     << "mrr\t" << format_double(metrics.mrr) << '\n';
  for (const auto& c : cases) os << c.user << '\t' << c.positive << '\t' << c.rank << '\n';
  return os.str();
}

std::vector<AblationRow> ablation_suite(const Hin& hin, const DenseMatrix& features,
                                        const InteractionSplit& split, const RunConfig& base) {
  struct Setting {
    const char* name;
    const char* variant;
    const char* fusion;
  };
  // full model first, then single-branch, no-contrast, and merge ablations
  const Setting settings[] = {
      {"full", "full", "dual_head"},   {"only_er", "only_er", "dual_head"},
      {"only_ir", "only_ir", "dual_head"}, {"no_cl", "no_cl", "dual_head"},
      {"att_concat", "full", "concat"},    {"att_add", "full", "add"},
  };
  std::vector<AblationRow> rows;
  for (const auto& s : settings) {
    RunConfig cfg = base;
    cfg.variant = s.variant;
    cfg.fusion_mode = s.fusion;
    Model m = Model::init(hin, features, cfg);
    train_model(m, split);
    rows.push_back({s.name, evaluate(m, split).metrics});
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "variant\thr@5\thr@10\thr@20\tndcg@5\tndcg@10\tndcg@20\tmrr\n";
  for (const auto& r : rows)
    os << r.variant << '\t' << format_double(r.metrics.hr5) << '\t'
       << format_double(r.metrics.hr10) << '\t' << format_double(r.metrics.hr20) << '\t'
       << format_double(r.metrics.ndcg5) << '\t' << format_double(r.metrics.ndcg10) << '\t'
       << format_double(r.metrics.ndcg20) << '\t' << format_double(r.metrics.mrr) << '\n';
  return os.str();
}

}  // namespace clk
