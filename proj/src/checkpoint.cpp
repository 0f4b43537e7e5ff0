#include "clkcrec/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "clkcrec/errors.hpp"

namespace clk {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'K', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) {
    if (pos + n > buf.size())
      throw DataError("checkpoint truncated at byte " + std::to_string(pos) + " reading " + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64(const char* what) {
    std::uint64_t bits = u64(what);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string str(const char* what) {
    std::uint32_t n = u32(what);
    need(n, what);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(Model& m, const std::string& path) {
  auto params = m.params();
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, m.cfg.digest());
  put_u32(out, static_cast<std::uint32_t>(m.hin.total_nodes()));
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (Param* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    for (double x : p->value.values()) put_f64(out, x);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("short write to checkpoint: " + path);
}

void load_checkpoint(Model& m, const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r{buf};

  r.need(4, "magic");
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw DataError("checkpoint magic mismatch at byte 0");
  r.pos = 4;
  std::uint32_t ver = r.u32("version");
  if (ver != kVersion)
    throw DataError("checkpoint format version " + std::to_string(ver) + " is not supported");
  std::uint64_t digest = r.u64("config digest");
  if (digest != m.cfg.digest())
    throw DataError("checkpoint was produced with a different configuration");
  std::uint32_t nodes = r.u32("node count");
  if (nodes != static_cast<std::uint32_t>(m.hin.total_nodes()))
    throw DataError("checkpoint graph has " + std::to_string(nodes) + " nodes, model has " +
                    std::to_string(m.hin.total_nodes()));

  auto params = m.params();
  std::uint32_t count = r.u32("parameter count");
  if (count != params.size())
    throw DataError("checkpoint holds " + std::to_string(count) + " parameters, model expects " +
                    std::to_string(params.size()));
  for (Param* p : params) {
    std::string name = r.str("parameter name");
    if (name != p->name)
      throw DataError("checkpoint parameter " + name + " does not match expected " + p->name);
    std::uint32_t rows = r.u32("rows"), cols = r.u32("cols");
    if (rows != static_cast<std::uint32_t>(p->value.rows()) ||
        cols != static_cast<std::uint32_t>(p->value.cols()))
      throw DataError("checkpoint parameter " + name + " has unexpected shape");
    for (auto& x : p->value.values()) x = r.f64("parameter data");
  }
  if (r.pos != buf.size())
    throw DataError("checkpoint has " + std::to_string(buf.size() - r.pos) +
                    " trailing bytes at byte " + std::to_string(r.pos));
}

}  // namespace clk
