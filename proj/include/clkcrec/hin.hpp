#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "clkcrec/matrix.hpp"

namespace clk {

struct EdgeTypeDecl {
  std::string name;
  std::string src_type;
  std::string dst_type;
};

// Typed-graph schema. Text format, one declaration per line:
//   node <name>
//   edge <name> <src_type> <dst_type>
// The first declared edge type is the user->concept interaction relation.
struct Schema {
  std::vector<std::string> node_types;
  std::vector<EdgeTypeDecl> edge_types;

  int node_type_index(const std::string& name) const;
  int edge_type_index(const std::string& name) const;

  static Schema parse(const std::string& text);
  static Schema load(const std::string& path);
  std::string serialize() const;
};

// One member of the adjacency collection: a declared edge type, the inverse
// of one, or the trailing identity.
struct Relation {
  std::string name;
  int src_type;  // message source block (columns); -1 for identity
  int dst_type;  // message destination block (rows); -1 for identity
  SparseMatrix adj;
};

struct Interaction {
  int user;     // local id within the user type
  int concept_id;  // local id within the concept type
  long long timestamp;
  bool has_timestamp;
};

// Heterogeneous information network over a contiguous, type-blocked global
// node index. adjacency()[i,j] != 0 means a message flows j -> i; each
// declared edge type contributes a forward matrix and its exact transpose,
// and the collection ends with the identity, so |collection| = 2E + 1.
class Hin {
 public:
  Schema schema;
  std::vector<int> type_counts;
  std::vector<int> type_offsets;
  std::vector<Relation> relations;  // forward..., inverse..., identity
  std::vector<Interaction> interactions;
  int user_type = 0;
  int concept_type = 0;
  int duplicate_edges = 0;  // collapsed while loading

  int total_nodes() const { return type_offsets.back() + type_counts.back(); }
  int num_users() const { return type_counts[user_type]; }
  int num_concepts() const { return type_counts[concept_type]; }
  int global_id(int type, int local) const { return type_offsets[type] + local; }
  int user_global(int u) const { return global_id(user_type, u); }
  int concept_global(int k) const { return global_id(concept_type, k); }

  // matrices that carry messages (everything except the identity)
  int relation_count() const { return static_cast<int>(relations.size()) - 1; }

  std::string serialize_edges() const;  // canonical edge-file text
};

struct HinWithFeatures {
  Hin hin;
  DenseMatrix features;  // |V| x d0
};

// Loads schema + edge file; features from file when given, else seeded
// uniform in [-0.1, 0.1].
HinWithFeatures load_hin(const std::string& edge_path, const std::string& schema_path,
                         const std::optional<std::string>& feature_path, int d0,
                         std::uint64_t seed);

// Builds a Hin from in-memory edge lists (used by tests and the synthesizer).
// edges: tuples of (edge type index, src local id, dst local id, timestamp or -1).
Hin build_hin(const Schema& schema, const std::vector<int>& type_counts,
              const std::vector<std::tuple<int, int, int, long long>>& edges);

DenseMatrix random_features(int nodes, int d0, std::uint64_t seed);

// row-stochastic normalization (zero rows pass through)
inline SparseMatrix degree_normalize(const SparseMatrix& a) { return sp_row_normalize(a); }

enum class SplitPolicy { Ratio, LeaveOneOut, Temporal };

struct InteractionSplit {
  std::vector<Interaction> train;
  std::vector<Interaction> test;
  std::map<int, std::set<int>> user_positives;  // train + test, per user
  int excluded_users = 0;
  int num_users = 0;
  int num_concepts = 0;
};

// param: train fraction for Ratio, cutoff timestamp for Temporal, unused for
// LeaveOneOut.
InteractionSplit split_interactions(const Hin& hin, SplitPolicy policy, double param,
                                    std::uint64_t seed);

// --- planted-structure synthetic dataset ---
struct SynthConfig {
  int groups = 5;
  int users_per_group = 40;
  int concepts_per_group = 20;
  int courses_per_group = 1;
  int videos_per_group = 4;
  int teachers_per_group = 1;
  double p_in = 0.3;
  double p_out = 0.01;
  std::uint64_t seed = 7;

  void validate() const;
};

// writes <out_dir>/schema.txt and <out_dir>/edges.tsv; out_dir must exist
void synth_generate(const SynthConfig& cfg, const std::string& out_dir);

// in-memory variant backing synth_generate
std::pair<Schema, std::vector<std::tuple<int, int, int, long long>>> synth_edges(
    const SynthConfig& cfg, std::vector<int>& type_counts);

}  // namespace clk
