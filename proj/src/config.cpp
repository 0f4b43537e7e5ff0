#include "clkcrec/config.hpp"

#include <fstream>
#include <sstream>

#include "clkcrec/errors.hpp"
#include "clkcrec/matrix.hpp"
#include "clkcrec/rng.hpp"

namespace clk {

namespace {

int to_int(const std::string& k, const std::string& v) {
  try {
    std::size_t pos = 0;
    int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key " + k + ": not an integer: " + v);
  }
}

double to_dbl(const std::string& k, const std::string& v) {
  try {
    std::size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key " + k + ": not a number: " + v);
  }
}

std::uint64_t to_u64(const std::string& k, const std::string& v) {
  try {
    std::size_t pos = 0;
    std::uint64_t r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key " + k + ": not an unsigned integer: " + v);
  }
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](const char* k, double v) {
    if (v <= 0) throw ConfigError(std::string("config key ") + k + " must be positive");
  };
  positive("dim", dim);
  positive("fusion_dim", fusion_dim);
  positive("er_layers", er_layers);
  positive("er_bases", er_bases);
  positive("ir_channels", ir_channels);
  positive("ir_hops", ir_hops);
  positive("ir_gnn_layers", ir_gnn_layers);
  positive("clusters", clusters);
  positive("tau", tau);
  positive("lr", lr);
  positive("epochs", epochs);
  positive("batch_size", batch_size);
  positive("patience", patience);
  positive("eval_negatives", eval_negatives);
  if (beta < 0) throw ConfigError("config key beta must be non-negative");
  if (cl_batch < 0) throw ConfigError("config key cl_batch must be non-negative");
  if (lambda < 0) throw ConfigError("config key lambda must be non-negative");
  if (fusion_mode != "dual_head" && fusion_mode != "concat" && fusion_mode != "add")
    throw ConfigError("config key fusion_mode: unknown value " + fusion_mode);
  if (variant != "full" && variant != "only_er" && variant != "only_ir" && variant != "no_cl")
    throw ConfigError("config key variant: unknown value " + variant);
  if (split != "leave_one_out" && split != "ratio" && split != "temporal")
    throw ConfigError("config key split: unknown value " + split);
  if (split == "ratio" && (split_param <= 0 || split_param >= 1))
    throw ConfigError("config key split_param: ratio split needs a value in (0, 1)");
}

std::string RunConfig::to_string() const {
  std::ostringstream os;  // alphabetical, one per line
  os << "batch_size=" << batch_size << '\n'
     << "beta=" << format_double(beta) << '\n'
     << "cl_batch=" << cl_batch << '\n'
     << "clusters=" << clusters << '\n'
     << "dim=" << dim << '\n'
     << "epochs=" << epochs << '\n'
     << "er_bases=" << er_bases << '\n'
     << "er_layers=" << er_layers << '\n'
     << "eval_negatives=" << eval_negatives << '\n'
     << "fusion_dim=" << fusion_dim << '\n'
     << "fusion_mode=" << fusion_mode << '\n'
     << "ir_channels=" << ir_channels << '\n'
     << "ir_gnn_layers=" << ir_gnn_layers << '\n'
     << "ir_hops=" << ir_hops << '\n'
     << "lambda=" << format_double(lambda) << '\n'
     << "lr=" << format_double(lr) << '\n'
     << "patience=" << patience << '\n'
     << "seed=" << seed << '\n'
     << "split=" << split << '\n'
     << "split_param=" << format_double(split_param) << '\n'
     << "tau=" << format_double(tau) << '\n'
     << "variant=" << variant << '\n';
  return os.str();
}

std::uint64_t RunConfig::digest() const { return fnv1a64(to_string()); }

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "dim") dim = to_int(key, value);
  else if (key == "fusion_dim") fusion_dim = to_int(key, value);
  else if (key == "er_layers") er_layers = to_int(key, value);
  else if (key == "er_bases") er_bases = to_int(key, value);
  else if (key == "ir_channels") ir_channels = to_int(key, value);
  else if (key == "ir_hops") ir_hops = to_int(key, value);
  else if (key == "ir_gnn_layers") ir_gnn_layers = to_int(key, value);
  else if (key == "clusters") clusters = to_int(key, value);
  else if (key == "tau") tau = to_dbl(key, value);
  else if (key == "beta") beta = to_dbl(key, value);
  else if (key == "cl_batch") cl_batch = to_int(key, value);
  else if (key == "fusion_mode") fusion_mode = value;
  else if (key == "variant") variant = value;
  else if (key == "lr") lr = to_dbl(key, value);
  else if (key == "lambda") lambda = to_dbl(key, value);
  else if (key == "epochs") epochs = to_int(key, value);
  else if (key == "batch_size") batch_size = to_int(key, value);
  else if (key == "patience") patience = to_int(key, value);
  else if (key == "split") split = value;
  else if (key == "split_param") split_param = to_dbl(key, value);
  else if (key == "eval_negatives") eval_negatives = to_int(key, value);
  else if (key == "seed") seed = to_u64(key, value);
  else throw ConfigError("unknown config key: " + key);
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

}  // namespace clk
