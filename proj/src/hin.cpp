#include "clkcrec/hin.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "clkcrec/errors.hpp"
#include "clkcrec/rng.hpp"

namespace clk {

int Schema::node_type_index(const std::string& name) const {
  for (std::size_t i = 0; i < node_types.size(); ++i)
    if (node_types[i] == name) return static_cast<int>(i);
  return -1;
}

int Schema::edge_type_index(const std::string& name) const {
  for (std::size_t i = 0; i < edge_types.size(); ++i)
    if (edge_types[i].name == name) return static_cast<int>(i);
  return -1;
}

Schema Schema::parse(const std::string& text) {
  Schema s;
  std::istringstream is(text);
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind) || kind[0] == '#') continue;
    if (kind == "node") {
      std::string name;
      if (!(ls >> name)) throw SchemaError("node declaration missing name", line_no);
      if (s.node_type_index(name) >= 0)
        throw SchemaError("duplicate node type \"" + name + "\"", line_no);
      s.node_types.push_back(name);
    } else if (kind == "edge") {
      EdgeTypeDecl e;
      if (!(ls >> e.name >> e.src_type >> e.dst_type))
        throw SchemaError("edge declaration needs name, src type, dst type", line_no);
      if (s.edge_type_index(e.name) >= 0)
        throw SchemaError("duplicate edge type \"" + e.name + "\"", line_no);
      if (s.node_type_index(e.src_type) < 0)
        throw SchemaError("edge \"" + e.name + "\" references undeclared node type \"" +
                              e.src_type + "\"",
                          line_no);
      if (s.node_type_index(e.dst_type) < 0)
        throw SchemaError("edge \"" + e.name + "\" references undeclared node type \"" +
                              e.dst_type + "\"",
                          line_no);
      s.edge_types.push_back(std::move(e));
    } else {
      throw SchemaError("unknown declaration \"" + kind + "\"", line_no);
    }
  }
  if (s.node_types.empty()) throw DataError("schema declares no node types");
  if (s.edge_types.empty()) throw DataError("schema declares no edge types");
  return s;
}

Schema Schema::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open schema file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string Schema::serialize() const {
  std::ostringstream os;
  for (const auto& n : node_types) os << "node " << n << '\n';
  for (const auto& e : edge_types)
    os << "edge " << e.name << ' ' << e.src_type << ' ' << e.dst_type << '\n';
  return os.str();
}

Hin build_hin(const Schema& schema, const std::vector<int>& type_counts,
              const std::vector<std::tuple<int, int, int, long long>>& edges) {
  if (type_counts.size() != schema.node_types.size())
    throw ShapeError("build_hin: type count vector mismatch");
  Hin hin;
  hin.schema = schema;
  hin.type_counts = type_counts;
  hin.type_offsets.resize(type_counts.size());
  int off = 0;
  for (std::size_t t = 0; t < type_counts.size(); ++t) {
    hin.type_offsets[t] = off;
    off += type_counts[t];
  }
  const int n = off;

  // interaction relation = first declared edge type
  hin.user_type = schema.node_type_index(schema.edge_types[0].src_type);
  hin.concept_type = schema.node_type_index(schema.edge_types[0].dst_type);

  const int etypes = static_cast<int>(schema.edge_types.size());
  std::vector<std::vector<std::tuple<int, int, double>>> coo(etypes);
  std::map<std::tuple<int, int, int>, long long> seen;  // (etype, src, dst) -> first ts
  int duplicates = 0;
  for (const auto& [et, src, dst, ts] : edges) {
    if (et < 0 || et >= etypes) throw UsageError("build_hin: edge type index out of range");
    const int st = hin.schema.node_type_index(schema.edge_types[et].src_type);
    const int dt = hin.schema.node_type_index(schema.edge_types[et].dst_type);
    if (src < 0 || src >= type_counts[st] || dst < 0 || dst >= type_counts[dt])
      throw DataError("build_hin: node id out of range for edge type " +
                      schema.edge_types[et].name);
    auto key = std::make_tuple(et, src, dst);
    if (seen.count(key)) {
      ++duplicates;
      continue;
    }
    seen.emplace(key, ts);
    // message flows src -> dst: row = dst global, col = src global
    coo[et].emplace_back(hin.type_offsets[dt] + dst, hin.type_offsets[st] + src, 1.0);
  }
  hin.duplicate_edges = duplicates;

  for (int et = 0; et < etypes; ++et) {
    Relation r;
    r.name = schema.edge_types[et].name;
    r.src_type = hin.schema.node_type_index(schema.edge_types[et].src_type);
    r.dst_type = hin.schema.node_type_index(schema.edge_types[et].dst_type);
    r.adj = SparseMatrix::from_coo(n, n, coo[et]);
    hin.relations.push_back(std::move(r));
  }
  for (int et = 0; et < etypes; ++et) {
    Relation r;
    r.name = schema.edge_types[et].name + "_inv";
    r.src_type = hin.relations[et].dst_type;
    r.dst_type = hin.relations[et].src_type;
    r.adj = sp_transpose(hin.relations[et].adj);
    hin.relations.push_back(std::move(r));
  }
  hin.relations.push_back(Relation{"identity", -1, -1, SparseMatrix::identity(n)});

  // interaction list from the first declared edge type
  for (const auto& [key, ts] : seen) {
    const auto& [et, src, dst] = key;
    if (et != 0) continue;
    hin.interactions.push_back(Interaction{src, dst, ts, ts >= 0});
  }
  std::sort(hin.interactions.begin(), hin.interactions.end(),
            [](const Interaction& a, const Interaction& b) {
              return std::tie(a.user, a.concept_id) < std::tie(b.user, b.concept_id);
            });
  return hin;
}

std::string Hin::serialize_edges() const {
  std::ostringstream os;
  const int etypes = static_cast<int>(schema.edge_types.size());
  for (int et = 0; et < etypes; ++et) {
    const Relation& r = relations[et];
    const SparseMatrix& a = r.adj;
    for (int i = 0; i < a.rows(); ++i)
      for (int e = a.rowptr()[i]; e < a.rowptr()[i + 1]; ++e) {
        const int src = a.colidx()[e] - type_offsets[r.src_type];
        const int dst = i - type_offsets[r.dst_type];
        os << r.name << '\t' << src << '\t' << dst << '\n';
      }
  }
  return os.str();
}

DenseMatrix random_features(int nodes, int d0, std::uint64_t seed) {
  Rng rng = Rng::substream(seed, "features");
  DenseMatrix f(nodes, d0);
  for (auto& x : f.values()) x = rng.uniform(-0.1, 0.1);
  return f;
}

namespace {

struct RawEdge {
  int etype;
  int src, dst;
  long long ts;
};

}  // namespace

HinWithFeatures load_hin(const std::string& edge_path, const std::string& schema_path,
                         const std::optional<std::string>& feature_path, int d0,
                         std::uint64_t seed) {
  Schema schema = Schema::load(schema_path);

  std::ifstream f(edge_path);
  if (!f) throw DataError("cannot open edge file: " + edge_path);
  std::vector<RawEdge> raw;
  std::vector<int> type_counts(schema.node_types.size(), 0);
  std::string line;
  long line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string ename;
    long long src, dst, ts = -1;
    if (!(ls >> ename >> src >> dst))
      throw SchemaError("edge line needs: edge_type src_id dst_id [timestamp]", line_no);
    ls >> ts;
    int et = schema.edge_type_index(ename);
    if (et < 0) throw SchemaError("undeclared edge type \"" + ename + "\"", line_no);
    if (src < 0 || dst < 0) throw SchemaError("negative node id", line_no);
    const int st = schema.node_type_index(schema.edge_types[et].src_type);
    const int dt = schema.node_type_index(schema.edge_types[et].dst_type);
    type_counts[st] = std::max(type_counts[st], static_cast<int>(src) + 1);
    type_counts[dt] = std::max(type_counts[dt], static_cast<int>(dst) + 1);
    raw.push_back(RawEdge{et, static_cast<int>(src), static_cast<int>(dst), ts});
  }

  std::vector<std::tuple<int, int, int, long long>> edges;
  edges.reserve(raw.size());
  for (const auto& e : raw) edges.emplace_back(e.etype, e.src, e.dst, e.ts);

  HinWithFeatures out;
  out.hin = build_hin(schema, type_counts, edges);

  const int n = out.hin.total_nodes();
  if (feature_path) {
    std::ifstream ff(*feature_path);
    if (!ff) throw DataError("cannot open feature file: " + *feature_path);
    // dimension from the first data line
    DenseMatrix feats;
    bool sized = false;
    long fline = 0;
    while (std::getline(ff, line)) {
      ++fline;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string tname;
      int local;
      if (!(ls >> tname >> local)) throw SchemaError("feature line needs: node_type node_id v...", fline);
      int tt = schema.node_type_index(tname);
      if (tt < 0) throw SchemaError("undeclared node type \"" + tname + "\"", fline);
      if (local < 0 || local >= out.hin.type_counts[tt])
        throw SchemaError("feature node id out of range", fline);
      std::vector<double> vals;
      double v;
      while (ls >> v) vals.push_back(v);
      if (!sized) {
        feats = DenseMatrix(n, static_cast<int>(vals.size()));
        sized = true;
      }
      if (static_cast<int>(vals.size()) != feats.cols())
        throw SchemaError("inconsistent feature dimension", fline);
      const int g = out.hin.global_id(tt, local);
      for (std::size_t j = 0; j < vals.size(); ++j) feats.at(g, static_cast<int>(j)) = vals[j];
    }
    if (!sized) throw DataError("feature file is empty: " + *feature_path);
    out.features = std::move(feats);
  } else {
    out.features = random_features(n, d0, seed);
  }
  return out;
}

InteractionSplit split_interactions(const Hin& hin, SplitPolicy policy, double param,
                                    std::uint64_t seed) {
  InteractionSplit split;
  split.num_users = hin.num_users();
  split.num_concepts = hin.num_concepts();
  for (const auto& it : hin.interactions) split.user_positives[it.user].insert(it.concept_id);

  std::vector<Interaction> all = hin.interactions;
  Rng rng = Rng::substream(seed, "split");

  switch (policy) {
    case SplitPolicy::Ratio: {
      if (param <= 0.0 || param >= 1.0) throw ConfigError("ratio split needs 0 < ratio < 1");
      rng.shuffle(all);
      const std::size_t ntrain = static_cast<std::size_t>(param * all.size() + 0.5);
      split.train.assign(all.begin(), all.begin() + ntrain);
      split.test.assign(all.begin() + ntrain, all.end());
      break;
    }
    case SplitPolicy::LeaveOneOut: {
      std::map<int, std::vector<Interaction>> by_user;
      for (const auto& it : all) by_user[it.user].push_back(it);
      for (auto& [u, its] : by_user) {
        if (its.size() < 2) {
          ++split.excluded_users;
          for (const auto& it : its) split.train.push_back(it);
          continue;
        }
        std::size_t held;
        bool timed = std::all_of(its.begin(), its.end(),
                                 [](const Interaction& i) { return i.has_timestamp; });
        if (timed) {
          held = 0;
          for (std::size_t i = 1; i < its.size(); ++i)
            if (its[i].timestamp > its[held].timestamp) held = i;
        } else {
          held = static_cast<std::size_t>(rng.below(its.size()));
        }
        for (std::size_t i = 0; i < its.size(); ++i)
          (i == held ? split.test : split.train).push_back(its[i]);
      }
      break;
    }
    case SplitPolicy::Temporal: {
      const long long cutoff = static_cast<long long>(param);
      for (const auto& it : all) {
        if (!it.has_timestamp)
          throw DataError("temporal split requires timestamps on every interaction");
        (it.timestamp >= cutoff ? split.test : split.train).push_back(it);
      }
      break;
    }
  }
  return split;
}

}  // namespace clk
