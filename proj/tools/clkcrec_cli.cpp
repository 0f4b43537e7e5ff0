#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "clkcrec/checkpoint.hpp"
#include "clkcrec/eval.hpp"
#include "clkcrec/kernels.hpp"
#include "clkcrec/rng.hpp"

using namespace clk;
namespace fs = std::filesystem;

namespace {

struct DataArgs {
  std::string edges, schema;
  std::string features;  // optional
  std::string config;    // optional, defaults apply
  std::vector<std::string> overrides;
};

void add_data_args(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--edges", a.edges, "edge list file (type<TAB>src<TAB>dst[<TAB>ts])")
      ->required();
  cmd->add_option("--schema", a.schema, "schema file (node/edge declarations)")->required();
  cmd->add_option("--features", a.features, "node feature file (type<TAB>id<TAB>values...)");
  cmd->add_option("--config", a.config, "key=value settings file");
  cmd->add_option("--set", a.overrides, "override one setting, e.g. --set dim=32");
}

RunConfig make_config(const DataArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig() : RunConfig::load(a.config);
  for (const auto& kv : a.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

struct Loaded {
  Model model;
  InteractionSplit split;
};

SplitPolicy policy_of(const RunConfig& cfg) {
  if (cfg.split == "ratio") return SplitPolicy::Ratio;
  if (cfg.split == "temporal") return SplitPolicy::Temporal;
  return SplitPolicy::LeaveOneOut;
}

Loaded load_all(const DataArgs& a, const RunConfig& cfg) {
  std::optional<std::string> feats;
  if (!a.features.empty()) feats = a.features;
  auto hf = load_hin(a.edges, a.schema, feats, cfg.dim, cfg.seed);
  auto split = split_interactions(hf.hin, policy_of(cfg), cfg.split_param, cfg.seed);
  Model m = Model::init(std::move(hf.hin), std::move(hf.features), cfg);
  return {std::move(m), std::move(split)};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write: " + path);
  f << text;
  if (!f) throw DataError("short write: " + path);
}

int run(int argc, char** argv) {
  CLI::App app{"heterogeneous-graph concept recommender"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a planted-structure dataset");
  SynthConfig sc;
  std::string out_dir;
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--groups", sc.groups, "interest groups");
  synth->add_option("--users-per-group", sc.users_per_group);
  synth->add_option("--concepts-per-group", sc.concepts_per_group);
  synth->add_option("--courses-per-group", sc.courses_per_group);
  synth->add_option("--videos-per-group", sc.videos_per_group);
  synth->add_option("--teachers-per-group", sc.teachers_per_group);
  synth->add_option("--p-in", sc.p_in, "in-group click probability");
  synth->add_option("--p-out", sc.p_out, "cross-group click probability");
  synth->add_option("--seed", sc.seed);

  // train
  auto* train = app.add_subcommand("train", "fit the model and write a checkpoint");
  DataArgs ta;
  add_data_args(train, ta);
  std::string ckpt_out, trace_out;
  train->add_option("--out", ckpt_out, "checkpoint output path")->required();
  train->add_option("--trace", trace_out, "write the per-epoch loss trace here");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "rank held-out positives against negatives");
  DataArgs ea;
  add_data_args(eval, ea);
  std::string ckpt_in, report_out;
  eval->add_option("--ckpt", ckpt_in, "checkpoint to evaluate")->required();
  eval->add_option("--report", report_out, "write the full report here (default: stdout)");

  // recommend
  auto* rec = app.add_subcommand("recommend", "top concepts for one user");
  DataArgs ra;
  add_data_args(rec, ra);
  std::string rec_ckpt;
  int rec_user = 0, rec_k = 10;
  rec->add_option("--ckpt", rec_ckpt, "trained checkpoint")->required();
  rec->add_option("--user", rec_user, "local user id")->required();
  rec->add_option("--top-k", rec_k, "how many concepts to list");

  // explain
  auto* expl = app.add_subcommand("explain", "most probable relation sequences per channel");
  DataArgs xa;
  add_data_args(expl, xa);
  std::string expl_ckpt;
  int expl_k = 5;
  expl->add_option("--ckpt", expl_ckpt, "trained checkpoint")->required();
  expl->add_option("--top-k", expl_k, "sequences per channel");

  // bench
  auto* bench = app.add_subcommand("bench", "compare serial and parallel kernels");
  int bench_n = 256, bench_reps = 5;
  bench->add_option("--size", bench_n, "square matrix size");
  bench->add_option("--reps", bench_reps, "repetitions per kernel");

  // ablate
  auto* abl = app.add_subcommand("ablate", "train and evaluate every model variant");
  DataArgs aa;
  add_data_args(abl, aa);
  std::string abl_out;
  abl->add_option("--out", abl_out, "write the table here (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 2;
  }

  if (*synth) {
    sc.validate();
    fs::create_directories(out_dir);
    synth_generate(sc, out_dir);
    std::cout << "wrote " << out_dir << "/schema.txt and " << out_dir << "/edges.tsv\n";
    return 0;
  }

  if (*train) {
    RunConfig cfg = make_config(ta);
    Loaded l = load_all(ta, cfg);
    TrainResult res = train_model(l.model, l.split, &std::cout);
    save_checkpoint(l.model, ckpt_out);
    if (!trace_out.empty()) write_file(trace_out, res.trace_text());
    std::cout << "trained " << res.epochs_run << " epochs, best loss "
              << format_double(res.best_loss) << " at epoch " << res.best_epoch << '\n'
              << "checkpoint: " << ckpt_out << '\n';
    return 0;
  }

  if (*eval) {
    RunConfig cfg = make_config(ea);
    Loaded l = load_all(ea, cfg);
    load_checkpoint(l.model, ckpt_in);
    RankingReport rep = evaluate(l.model, l.split);
    if (report_out.empty())
      std::cout << rep.serialize();
    else {
      write_file(report_out, rep.serialize());
      std::cout << "hr@10 " << format_double(rep.metrics.hr10) << " over " << rep.metrics.cases
                << " cases; report: " << report_out << '\n';
    }
    return 0;
  }

  if (*rec) {
    RunConfig cfg = make_config(ra);
    Loaded l = load_all(ra, cfg);
    load_checkpoint(l.model, rec_ckpt);
    if (rec_user < 0 || rec_user >= l.model.hin.num_users())
      throw UsageError("user id out of range: " + std::to_string(rec_user));
    Tape t;
    auto f = model_forward(t, l.model);
    const DenseMatrix& fused = t.value(f.fused);
    const auto it = l.split.user_positives.find(rec_user);
    std::vector<std::pair<double, int>> scored;
    for (int k = 0; k < l.model.hin.num_concepts(); ++k) {
      if (it != l.split.user_positives.end() && it->second.count(k)) continue;
      double s = 0.0;
      for (int j = 0; j < fused.cols(); ++j)
        s += fused.at(l.model.hin.user_global(rec_user), j) *
             fused.at(l.model.hin.concept_global(k), j);
      scored.push_back({s, k});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    int shown = std::min<int>(rec_k, static_cast<int>(scored.size()));
    for (int i = 0; i < shown; ++i)
      std::cout << (i + 1) << '\t' << scored[i].second << '\t'
                << format_double(scored[i].first) << '\n';
    return 0;
  }

  if (*expl) {
    RunConfig cfg = make_config(xa);
    Loaded l = load_all(xa, cfg);
    load_checkpoint(l.model, expl_ckpt);
    if (!l.model.has_ir())
      throw UsageError("the " + cfg.variant + " variant has no relation-selection channels");
    std::vector<std::string> names;
    for (const auto& r : l.model.hin.relations) names.push_back(r.name);
    std::cout << explain_metapaths(l.model.ir, names, expl_k).serialize();
    return 0;
  }

  if (*bench) {
    Rng rng(1);
    DenseMatrix a(bench_n, bench_n), b(bench_n, bench_n);
    for (auto& x : a.values()) x = rng.uniform(-1, 1);
    for (auto& x : b.values()) x = rng.uniform(-1, 1);
    auto time_one = [&](bool parallel) {
      kernels::set_parallel(parallel);
      auto t0 = std::chrono::steady_clock::now();
      DenseMatrix c;
      for (int r = 0; r < bench_reps; ++r) c = matmul(a, b);
      auto t1 = std::chrono::steady_clock::now();
      kernels::set_parallel(true);
      return std::make_pair(std::chrono::duration<double>(t1 - t0).count() / bench_reps, c);
    };
    auto [ts, cs] = time_one(false);
    auto [tp, cp] = time_one(true);
    bool same = cs.values() == cp.values();
    std::cout << "matmul " << bench_n << "x" << bench_n << ": serial "
              << format_double(ts) << "s, parallel " << format_double(tp)
              << "s, bitwise match: " << (same ? "yes" : "no") << '\n';
    if (!same) throw NumericError("parallel kernel diverged from the serial reference");
    return 0;
  }

  if (*abl) {
    RunConfig cfg = make_config(aa);
    Loaded l = load_all(aa, cfg);
    auto rows = ablation_suite(l.model.hin, l.model.features, l.split, cfg);
    std::string table = ablation_table(rows);
    if (abl_out.empty())
      std::cout << table;
    else {
      write_file(abl_out, table);
      std::cout << "table: " << abl_out << '\n';
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {  // data, schema, shape, degenerate
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  }
}
