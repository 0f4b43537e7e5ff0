#include <fstream>
#include <sstream>

#include "clkcrec/errors.hpp"
#include "clkcrec/hin.hpp"
#include "clkcrec/rng.hpp"

namespace clk {

void SynthConfig::validate() const {
  if (groups < 1 || users_per_group < 1 || concepts_per_group < 1 || courses_per_group < 1 ||
      videos_per_group < 1 || teachers_per_group < 1)
    throw ConfigError("synth: all counts must be >= 1");
  if (!(p_in > p_out)) throw ConfigError("synth: p_in must exceed p_out");
  if (p_in < 0.0 || p_in > 1.0 || p_out < 0.0 || p_out > 1.0)
    throw ConfigError("synth: probabilities must lie in [0, 1]");
}

std::pair<Schema, std::vector<std::tuple<int, int, int, long long>>> synth_edges(
    const SynthConfig& cfg, std::vector<int>& type_counts) {
  cfg.validate();
  Schema schema = Schema::parse(
      "node user\n"
      "node concept\n"
      "node course\n"
      "node video\n"
      "node teacher\n"
      "edge uk user concept\n"
      "edge uv user video\n"
      "edge uc user course\n"
      "edge vk video concept\n"
      "edge ck course concept\n"
      "edge cv course video\n"
      "edge ct course teacher\n");

  const int g = cfg.groups;
  const int nu = g * cfg.users_per_group;
  const int nk = g * cfg.concepts_per_group;
  const int nc = g * cfg.courses_per_group;
  const int nv = g * cfg.videos_per_group;
  const int nt = g * cfg.teachers_per_group;
  type_counts = {nu, nk, nc, nv, nt};

  Rng rng = Rng::substream(cfg.seed, "synth");
  std::vector<std::tuple<int, int, int, long long>> edges;
  long long ts = 0;

  // structural wiring inside each group
  for (int grp = 0; grp < g; ++grp) {
    for (int c = 0; c < cfg.courses_per_group; ++c) {
      const int course = grp * cfg.courses_per_group + c;
      for (int k = 0; k < cfg.concepts_per_group; ++k)
        edges.emplace_back(4, course, grp * cfg.concepts_per_group + k, -1);  // ck
      for (int v = 0; v < cfg.videos_per_group; ++v)
        edges.emplace_back(5, course, grp * cfg.videos_per_group + v, -1);  // cv
      for (int t = 0; t < cfg.teachers_per_group; ++t)
        edges.emplace_back(6, course, grp * cfg.teachers_per_group + t, -1);  // ct
    }
    // each video covers a contiguous slice of the group's concepts
    for (int v = 0; v < cfg.videos_per_group; ++v) {
      const int video = grp * cfg.videos_per_group + v;
      const int lo = v * cfg.concepts_per_group / cfg.videos_per_group;
      const int hi = (v + 1) * cfg.concepts_per_group / cfg.videos_per_group;
      for (int k = lo; k < hi; ++k)
        edges.emplace_back(3, video, grp * cfg.concepts_per_group + k, -1);  // vk
    }
  }

  // user behavior
  for (int u = 0; u < nu; ++u) {
    const int grp = u / cfg.users_per_group;
    for (int c = 0; c < cfg.courses_per_group; ++c)
      edges.emplace_back(2, u, grp * cfg.courses_per_group + c, -1);  // uc
    for (int v = 0; v < cfg.videos_per_group; ++v)
      if (rng.uniform() < 0.5)
        edges.emplace_back(1, u, grp * cfg.videos_per_group + v, -1);  // uv
    for (int k = 0; k < nk; ++k) {
      const bool in_group = (k / cfg.concepts_per_group) == grp;
      if (rng.uniform() < (in_group ? cfg.p_in : cfg.p_out))
        edges.emplace_back(0, u, k, ts++);  // uk, timestamped in emission order
    }
  }
  return {schema, std::move(edges)};
}

void synth_generate(const SynthConfig& cfg, const std::string& out_dir) {
  std::vector<int> type_counts;
  auto [schema, edges] = synth_edges(cfg, type_counts);

  const std::string schema_path = out_dir + "/schema.txt";
  const std::string edge_path = out_dir + "/edges.tsv";
  std::ofstream sf(schema_path);
  if (!sf) throw DataError("cannot write to output directory: " + out_dir);
  sf << schema.serialize();

  std::ofstream ef(edge_path);
  if (!ef) throw DataError("cannot write to output directory: " + out_dir);
  for (const auto& [et, src, dst, ts] : edges) {
    ef << schema.edge_types[et].name << '\t' << src << '\t' << dst;
    if (ts >= 0) ef << '\t' << ts;
    ef << '\n';
  }
}

}  // namespace clk
