#include <cmath>
#include <fstream>
#include <set>

#include "clkcrec/checkpoint.hpp"
#include "clkcrec/eval.hpp"
#include "clkcrec/rng.hpp"
#include "doctest.h"

using namespace clk;

namespace {

// small planted dataset shared by the tests below
struct Fixture {
  Hin hin;
  DenseMatrix features;
  InteractionSplit split;
  RunConfig cfg;
};

Fixture make_fixture(std::uint64_t seed) {
  SynthConfig sc;
  sc.groups = 2;
  sc.users_per_group = 8;
  sc.concepts_per_group = 6;
  sc.p_in = 0.5;
  sc.p_out = 0.02;
  sc.seed = seed;
  std::vector<int> counts;
  auto [schema, edges] = synth_edges(sc, counts);
  Fixture fx;
  fx.hin = build_hin(schema, counts, edges);
  fx.cfg.dim = 6;
  fx.cfg.fusion_dim = 6;
  fx.cfg.er_layers = 1;
  fx.cfg.er_bases = 3;
  fx.cfg.ir_channels = 2;
  fx.cfg.ir_hops = 2;
  fx.cfg.ir_gnn_layers = 1;
  fx.cfg.clusters = 3;
  fx.cfg.epochs = 4;
  fx.cfg.batch_size = 64;
  fx.cfg.seed = seed;
  fx.features = random_features(fx.hin.total_nodes(), fx.cfg.dim, seed);
  fx.split = split_interactions(fx.hin, SplitPolicy::LeaveOneOut, 0, seed);
  return fx;
}

}  // namespace

TEST_CASE("config round-trips through its canonical text") {
  RunConfig a;
  a.dim = 24;
  a.tau = 0.25;
  a.variant = "no_cl";
  RunConfig b = RunConfig::parse(a.to_string());
  CHECK(b.to_string() == a.to_string());
  CHECK(b.digest() == a.digest());
  RunConfig c;
  CHECK(c.digest() != a.digest());

  CHECK_THROWS_AS(RunConfig::parse("nonsense\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("bogus_key=1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("dim=abc\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("dim=-3\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("variant=sideways\n"), ConfigError);
}

TEST_CASE("triples cover every train positive with a valid negative") {
  Fixture fx = make_fixture(5);
  int skipped = 0;
  auto triples = sample_triples(fx.split, 9, 0, skipped);
  CHECK(triples.size() + 0 <= fx.split.train.size());
  std::multiset<std::pair<int, int>> want, got;
  for (const auto& it : fx.split.train) want.insert({it.user, it.concept_id});
  for (const auto& tr : triples) {
    got.insert({tr.user, tr.pos});
    CHECK(!fx.split.user_positives.at(tr.user).count(tr.neg));
    CHECK(tr.neg >= 0);
    CHECK(tr.neg < fx.split.num_concepts);
  }
  if (skipped == 0) CHECK(want == got);

  // deterministic per (seed, epoch), different across epochs
  int s2 = 0;
  auto again = sample_triples(fx.split, 9, 0, s2);
  CHECK(again.size() == triples.size());
  bool same = true, diff = false;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    same &= triples[i].user == again[i].user && triples[i].neg == again[i].neg;
  }
  CHECK(same);
  auto other = sample_triples(fx.split, 9, 1, s2);
  for (std::size_t i = 0; i < std::min(triples.size(), other.size()); ++i)
    diff |= triples[i].user != other[i].user || triples[i].neg != other[i].neg;
  CHECK(diff);
}

TEST_CASE("pairwise ranking loss oracle") {
  // score(pos) - score(neg) known by construction
  Fixture fx = make_fixture(6);
  Model m = Model::init(fx.hin, fx.features, fx.cfg);
  Tape t;
  auto f = model_forward(t, m);
  std::vector<Triple> batch{{0, 0, 1}, {1, 2, 3}};
  auto loss = bpr_loss(t, m, f.fused, batch);

  const DenseMatrix& fused = t.value(f.fused);
  double want = 0.0;
  for (const auto& tr : batch) {
    double sp = 0, sn = 0;
    for (int j = 0; j < fused.cols(); ++j) {
      sp += fused.at(m.hin.user_global(tr.user), j) * fused.at(m.hin.concept_global(tr.pos), j);
      sn += fused.at(m.hin.user_global(tr.user), j) * fused.at(m.hin.concept_global(tr.neg), j);
    }
    want += std::log1p(std::exp(-(sp - sn)));
  }
  want /= batch.size();
  CHECK(t.scalar(loss) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("rank identities over every position") {
  // candidate scores 100 > 99 > ... ; positive placed at each position r
  for (int r = 1; r <= 100; ++r) {
    std::vector<double> negs;
    std::vector<int> ids;
    for (int i = 0; i < 99; ++i) {
      // r-1 negatives above the positive, rest below
      negs.push_back(i < r - 1 ? 1000.0 - i : -1000.0 - i);
      ids.push_back(i + 1);
    }
    CHECK(rank_of_positive(0.0, 0, negs, ids) == r);
  }
  // ties go to the lower concept id
  CHECK(rank_of_positive(1.0, 5, {1.0, 1.0, 0.5}, {2, 9, 1}) == 2);
  CHECK(rank_of_positive(1.0, 1, {1.0, 1.0, 0.5}, {2, 9, 3}) == 1);
}

TEST_CASE("random scores rank the positive uniformly") {
  Rng rng(777);
  int hits10 = 0;
  const int cases = 2000;
  for (int c = 0; c < cases; ++c) {
    std::vector<double> negs;
    std::vector<int> ids;
    for (int i = 0; i < 99; ++i) {
      negs.push_back(rng.uniform());
      ids.push_back(i + 1);
    }
    if (rank_of_positive(rng.uniform(), 0, negs, ids) <= 10) ++hits10;
  }
  CHECK(std::abs(hits10 / static_cast<double>(cases) - 0.10) <= 0.03);
}

TEST_CASE("short training run lowers the loss and stays finite") {
  Fixture fx = make_fixture(8);
  Model m = Model::init(fx.hin, fx.features, fx.cfg);
  TrainResult res = train_model(m, fx.split);
  REQUIRE(res.epochs_run >= 2);
  for (double l : res.loss_trace) CHECK(std::isfinite(l));
  CHECK(res.loss_trace.back() < res.loss_trace.front());
  CHECK(res.trace_text().rfind("trace v1\n", 0) == 0);

  // evaluation produces a sane report over the held-out cases
  RankingReport rep = evaluate(m, fx.split);
  CHECK(rep.metrics.cases == static_cast<int>(fx.split.test.size()));
  CHECK(rep.metrics.hr5 <= rep.metrics.hr10);
  CHECK(rep.metrics.hr10 <= rep.metrics.hr20);
  CHECK(rep.metrics.mrr > 0.0);
  CHECK(rep.metrics.mrr <= 1.0);
  for (const auto& c : rep.cases) {
    CHECK(c.rank >= 1);
    CHECK(c.rank <= 1 + fx.cfg.eval_negatives);
  }
}

TEST_CASE("contrastive sub-batch trains, differs from the full-anchor run, repeats exactly") {
  Fixture fx = make_fixture(8);
  auto run = [&](int cl_batch) {
    RunConfig cfg = fx.cfg;
    cfg.cl_batch = cl_batch;
    cfg.epochs = 2;
    Model m = Model::init(fx.hin, fx.features, cfg);
    return train_model(m, fx.split).loss_trace;
  };
  auto full = run(0), sub = run(4), sub2 = run(4);
  CHECK(sub == sub2);
  CHECK(sub != full);
  for (double l : sub) CHECK(std::isfinite(l));

  // a subset at least as large as the graph is the same as no subset
  auto big = run(fx.hin.total_nodes());
  CHECK(big == full);
}

TEST_CASE("each variant trains with only its own parameters") {
  Fixture fx = make_fixture(9);
  for (const char* variant : {"only_er", "only_ir", "no_cl"}) {
    RunConfig cfg = fx.cfg;
    cfg.variant = variant;
    cfg.epochs = 2;
    Model m = Model::init(fx.hin, fx.features, cfg);
    TrainResult res = train_model(m, fx.split);
    CHECK(res.epochs_run == 2);
    for (double l : res.loss_trace) CHECK(std::isfinite(l));
    for (Param* p : m.params()) CHECK(p->value.all_finite());
  }
}

TEST_CASE("checkpoint round-trip restores parameters bit-exactly") {
  Fixture fx = make_fixture(10);
  Model m = Model::init(fx.hin, fx.features, fx.cfg);
  train_model(m, fx.split);
  std::string before = evaluate(m, fx.split).serialize();
  std::string path = "/tmp/clk_ckpt_test.bin";
  save_checkpoint(m, path);

  Model m2 = Model::init(fx.hin, fx.features, fx.cfg);
  load_checkpoint(m2, path);
  auto pa = m.params();
  auto pb = m2.params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
    CHECK(pa[i]->value.values() == pb[i]->value.values());
  CHECK(evaluate(m2, fx.split).serialize() == before);
}

TEST_CASE("checkpoint refuses a mismatched configuration and corrupt bytes") {
  Fixture fx = make_fixture(11);
  Model m = Model::init(fx.hin, fx.features, fx.cfg);
  std::string path = "/tmp/clk_ckpt_bad.bin";
  save_checkpoint(m, path);

  RunConfig other = fx.cfg;
  other.dim = fx.cfg.dim;
  other.tau = fx.cfg.tau * 2;  // digest changes without shape changes
  Model m2 = Model::init(fx.hin, fx.features, other);
  CHECK_THROWS_AS(load_checkpoint(m2, path), DataError);

  // truncation is reported with the failing byte offset
  {
    std::ifstream f(path, std::ios::binary);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    std::ofstream g(path, std::ios::binary | std::ios::trunc);
    g.write(buf.data(), static_cast<std::streamsize>(buf.size() / 2));
  }
  Model m3 = Model::init(fx.hin, fx.features, fx.cfg);
  try {
    load_checkpoint(m3, path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("two identical runs produce identical traces, checkpoints, and reports") {
  auto run = [](std::string* trace, std::string* report, std::string path) {
    Fixture fx = make_fixture(12);
    Model m = Model::init(fx.hin, fx.features, fx.cfg);
    TrainResult res = train_model(m, fx.split);
    *trace = res.trace_text();
    *report = evaluate(m, fx.split).serialize();
    save_checkpoint(m, path);
  };
  std::string t1, r1, t2, r2;
  run(&t1, &r1, "/tmp/clk_det_a.bin");
  run(&t2, &r2, "/tmp/clk_det_b.bin");
  CHECK(t1 == t2);
  CHECK(r1 == r2);
  std::ifstream fa("/tmp/clk_det_a.bin", std::ios::binary), fb("/tmp/clk_det_b.bin", std::ios::binary);
  std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(ba == bb);
  CHECK(!ba.empty());
}
