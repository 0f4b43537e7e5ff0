#include "clkcrec/train.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "clkcrec/adam.hpp"
#include "clkcrec/errors.hpp"
#include "clkcrec/rng.hpp"

namespace clk {

std::vector<Triple> sample_triples(const InteractionSplit& split, std::uint64_t seed, int epoch,
                                   int& skipped_users) {
  Rng rng = Rng::substream(seed, "triples.e" + std::to_string(epoch));
  skipped_users = 0;
  std::set<int> skipped;
  std::vector<Triple> out;
  out.reserve(split.train.size());
  for (const auto& it : split.train) {
    const auto& pos = split.user_positives.at(it.user);
    int pool = split.num_concepts - static_cast<int>(pos.size());
    if (pool <= 0) {
      skipped.insert(it.user);
      continue;
    }
    // uniform over non-positives: draw an index into the complement
    int idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(pool)));
    int neg = 0;
    for (int k = 0;; ++k) {
      if (pos.count(k)) continue;
      if (idx == 0) {
        neg = k;
        break;
      }
      --idx;
    }
    out.push_back({it.user, it.concept_id, neg});
  }
  rng.shuffle(out);
  skipped_users = static_cast<int>(skipped.size());
  return out;
}

Tape::Id bpr_loss(Tape& t, const Model& m, Tape::Id fused, const std::vector<Triple>& batch) {
  if (batch.empty()) throw UsageError("bpr: empty batch");
  std::vector<int> users, pos, neg;
  for (const auto& tr : batch) {
    users.push_back(m.hin.user_global(tr.user));
    pos.push_back(m.hin.concept_global(tr.pos));
    neg.push_back(m.hin.concept_global(tr.neg));
  }
  auto sp = predict_scores(t, fused, users, pos);
  auto sn = predict_scores(t, fused, users, neg);
  auto margins = t.sub(sp, sn);
  return t.scale(t.reduce_sum(t.softplus(t.scale(margins, -1.0))),
                 1.0 / static_cast<double>(batch.size()));
}

Tape::Id l2_penalty(Tape& t, std::vector<Param*>& params, double lambda) {
  Tape::Id acc = -1;
  for (Param* p : params) {
    auto pi = t.leaf(*p);
    auto sq = t.reduce_sum(t.ew_mul(pi, pi));
    acc = (acc == -1) ? sq : t.add(acc, sq);
  }
  return t.scale(acc, lambda);
}

std::string TrainResult::trace_text() const {
  std::ostringstream os;
  os << "trace v1\n";
  for (std::size_t e = 0; e < loss_trace.size(); ++e)
    os << e << '\t' << format_double(loss_trace[e]) << '\n';
  return os.str();
}

TrainResult train_model(Model& m, const InteractionSplit& split, std::ostream* log) {
  const RunConfig& cfg = m.cfg;
  auto params = m.params();
  AdamState adam(cfg.lr);
  TrainResult res;
  res.best_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    refresh_prototypes(m);

    int skipped = 0;
    auto triples = sample_triples(split, cfg.seed, epoch, skipped);
    if (triples.empty()) throw DataError("training split produced no usable triples");
    if (log && epoch == 0 && skipped > 0)
      *log << "note: " << skipped << " users cover every concept; their triples were skipped\n";

    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < triples.size(); start += cfg.batch_size) {
      std::vector<Triple> batch(
          triples.begin() + start,
          triples.begin() + std::min(triples.size(), start + cfg.batch_size));
      Tape t;
      auto f = model_forward(t, m);
      auto loss = bpr_loss(t, m, f.fused, batch);
      if (m.cl_enabled()) {
        std::vector<int> rows;
        const std::vector<int>* sub = nullptr;
        int n = m.hin.total_nodes();
        if (cfg.cl_batch > 0 && cfg.cl_batch < n) {
          // seeded anchor subset, resampled per batch
          Rng rs = Rng::substream(cfg.seed, "cl.e" + std::to_string(epoch) + ".b" +
                                                std::to_string(batches));
          rows.resize(n);
          for (int i = 0; i < n; ++i) rows[i] = i;
          rs.shuffle(rows);
          rows.resize(cfg.cl_batch);
          sub = &rows;
        }
        loss = t.add(loss, t.scale(model_cl_loss(t, m, f, sub), cfg.beta));
      }
      if (cfg.lambda > 0) loss = t.add(loss, l2_penalty(t, params, cfg.lambda));

      double lv = t.scalar(loss);
      if (!std::isfinite(lv)) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << " batch " << batches << "; param norms:";
        for (Param* p : params) {
          double n = 0;
          for (double x : p->value.values()) n += x * x;
          os << ' ' << p->name << '=' << format_double(std::sqrt(n));
        }
        throw NumericError(os.str());
      }

      for (Param* p : params) p->zero_grad();
      t.backward(loss);
      adam.step(params);
      epoch_loss += lv;
      ++batches;
    }
    epoch_loss /= batches;
    res.loss_trace.push_back(epoch_loss);
    res.epochs_run = epoch + 1;
    if (log) *log << "epoch " << epoch << " loss " << format_double(epoch_loss) << '\n';

    if (epoch_loss < res.best_loss - 1e-6) {
      res.best_loss = epoch_loss;
      res.best_epoch = epoch;
    } else if (epoch - res.best_epoch >= cfg.patience) {
      break;  // plateau
    }
  }
  return res;
}

}  // namespace clk
