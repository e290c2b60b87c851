#include "aligncr/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace aligncr {

namespace {

constexpr char kMagic[4] = {'A', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& path;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("corrupt checkpoint (truncated): " + path);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return x;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return x;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const ModelParams& mp, const std::string& path, const OptState* opt) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  const ModelConfig& c = mp.config;
  for (int x : {c.feat_dim, c.hidden_dim, c.vocab_size, c.embed_dim, c.encoder_layers,
                c.decoder_layers, c.refine_steps, c.pool_window, c.pool_stride})
    put_u32(out, static_cast<std::uint32_t>(x));
  put_u64(out, c.seed);
  put_u32(out, static_cast<std::uint32_t>(mp.params.size()));
  for (const auto& [name, v] : mp.params) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    const Array& a = v.data();
    put_u32(out, static_cast<std::uint32_t>(a.rank()));
    for (int d : a.shape) put_u32(out, static_cast<std::uint32_t>(d));
    const std::size_t pos = out.size();
    out.resize(pos + a.size() * sizeof(double));
    std::memcpy(out.data() + pos, a.v.data(), a.size() * sizeof(double));
  }
  const std::size_t n_opt = opt ? opt->velocity.size() : 0;
  put_u32(out, static_cast<std::uint32_t>(n_opt));
  put_u64(out, opt ? opt->step : 0);
  if (opt)
    for (const auto& [name, a] : opt->velocity) {
      put_u32(out, static_cast<std::uint32_t>(name.size()));
      out += name;
      put_u32(out, static_cast<std::uint32_t>(a.rank()));
      for (int d : a.shape) put_u32(out, static_cast<std::uint32_t>(d));
      const std::size_t pos = out.size();
      out.resize(pos + a.size() * sizeof(double));
      std::memcpy(out.data() + pos, a.v.data(), a.size() * sizeof(double));
    }

  const fs::path tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("checkpoint write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

ModelParams load_checkpoint(const std::string& path, OptState* opt) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r{buf, 0, path};
  r.need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) + ": " + path);

  ModelConfig c;
  c.feat_dim = static_cast<int>(r.u32());
  c.hidden_dim = static_cast<int>(r.u32());
  c.vocab_size = static_cast<int>(r.u32());
  c.embed_dim = static_cast<int>(r.u32());
  c.encoder_layers = static_cast<int>(r.u32());
  c.decoder_layers = static_cast<int>(r.u32());
  c.refine_steps = static_cast<int>(r.u32());
  c.pool_window = static_cast<int>(r.u32());
  c.pool_stride = static_cast<int>(r.u32());
  c.seed = r.u64();

  ModelParams mp;
  mp.config = c;
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 2) throw std::runtime_error("corrupt checkpoint (bad rank): " + path);
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(r.u32()));
    Array a = Array::zeros(shape);
    r.need(a.size() * sizeof(double));
    std::memcpy(a.v.data(), buf.data() + r.pos, a.size() * sizeof(double));
    r.pos += a.size() * sizeof(double);
    mp.params.emplace(name, Value::leaf(std::move(a), true));
  }
  const std::uint32_t n_opt = r.u32();
  const std::uint64_t opt_step = r.u64();
  if (opt) {
    opt->velocity.clear();
    opt->step = opt_step;
  }
  for (std::uint32_t i = 0; i < n_opt; ++i) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 2) throw std::runtime_error("corrupt checkpoint (bad rank): " + path);
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(r.u32()));
    Array a = Array::zeros(shape);
    r.need(a.size() * sizeof(double));
    std::memcpy(a.v.data(), buf.data() + r.pos, a.size() * sizeof(double));
    r.pos += a.size() * sizeof(double);
    if (opt) opt->velocity.emplace(name, std::move(a));
  }
  // Shape cross-check against a fresh init of the same config.
  ModelParams ref = ModelParams::init(c);
  if (ref.params.size() != mp.params.size())
    throw std::runtime_error("checkpoint parameter set does not match its config: " + path);
  for (const auto& [name, v] : ref.params) {
    auto it = mp.params.find(name);
    if (it == mp.params.end() || !it->second.data().same_shape(v.data()))
      throw std::runtime_error("checkpoint parameter '" + name + "' missing or misshaped: " + path);
  }
  return mp;
}

}  // namespace aligncr
