#include "core/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace ts {

namespace {

void put_u32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

struct Cursor {
  const unsigned char* p;
  size_t size;
  size_t off = 0;
  std::string name;

  void need(size_t n) const {
    if (off + n > size) fail(ErrorKind::integrity, "truncated checkpoint: " + name);
  }
  uint32_t u32() {
    need(4);
    const uint32_t v = static_cast<uint32_t>(p[off]) |
                       (static_cast<uint32_t>(p[off + 1]) << 8) |
                       (static_cast<uint32_t>(p[off + 2]) << 16) |
                       (static_cast<uint32_t>(p[off + 3]) << 24);
    off += 4;
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p + off), n);
    off += n;
    return s;
  }
  float f32() {
    const uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
};

}  // namespace

template <class T>
void save_checkpoint(const ParamStore<T>& params, const UNetConfig& config,
                     const std::filesystem::path& path) {
  validate(config);
  std::string buf;
  buf.append(kCheckpointMagic, 4);
  put_u32(buf, kCheckpointVersion);
  put_u32(buf, static_cast<uint32_t>(params.size()));
  put_u32(buf, static_cast<uint32_t>(config.in_channels));
  put_u32(buf, static_cast<uint32_t>(config.out_channels));
  put_u32(buf, static_cast<uint32_t>(config.depth));
  put_u32(buf, static_cast<uint32_t>(config.base_width));
  put_u32(buf, static_cast<uint32_t>(config.img_size));
  for (const auto& [name, tensor] : params) {
    put_u32(buf, static_cast<uint32_t>(name.size()));
    buf.append(name);
    put_u32(buf, static_cast<uint32_t>(tensor.rank()));
    for (int64_t d : tensor.shape) put_u32(buf, static_cast<uint32_t>(d));
    for (T v : tensor.data) {
      const auto f = static_cast<float>(v);
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(buf, bits);
    }
  }

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open for writing: " + tmp.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.flush();
    if (!out) fail(ErrorKind::io, "short write: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::io, "cannot move checkpoint into place: " + path.string() +
                                  " (" + ec.message() + ")");
}

std::pair<ParamStore<float>, UNetConfig> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open checkpoint: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorKind::io, "cannot read checkpoint: " + path.string());

  Cursor cur{reinterpret_cast<const unsigned char*>(data.data()), data.size(), 0,
             path.string()};
  if (cur.bytes(4) != std::string(kCheckpointMagic, 4))
    fail(ErrorKind::format, "not a checkpoint file (bad magic): " + path.string());
  const uint32_t version = cur.u32();
  if (version != kCheckpointVersion)
    fail(ErrorKind::version, "unsupported checkpoint version " + std::to_string(version) +
                                 ": " + path.string());
  const uint32_t tensor_count = cur.u32();
  UNetConfig cfg;
  cfg.in_channels = cur.u32();
  cfg.out_channels = cur.u32();
  cfg.depth = cur.u32();
  cfg.base_width = cur.u32();
  cfg.img_size = cur.u32();
  try {
    validate(cfg);
  } catch (const Error& e) {
    fail(ErrorKind::integrity,
         "checkpoint embeds an invalid model config (" + std::string(e.what()) + "): " +
             path.string());
  }
  const auto expected = param_shapes(cfg);
  if (tensor_count != expected.size())
    fail(ErrorKind::integrity, "checkpoint holds " + std::to_string(tensor_count) +
                                   " tensors, config implies " +
                                   std::to_string(expected.size()) + ": " + path.string());

  // the store iterates lexicographically, matching the on-disk order
  std::vector<std::pair<std::string, Shape>> sorted = expected;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  ParamStore<float> store;
  for (const auto& [want_name, want_shape] : sorted) {
    const uint32_t name_len = cur.u32();
    if (name_len > 4096)
      fail(ErrorKind::integrity, "implausible tensor name length: " + path.string());
    const std::string name = cur.bytes(name_len);
    if (name != want_name)
      fail(ErrorKind::integrity, "unexpected tensor '" + name + "', wanted '" + want_name +
                                     "': " + path.string());
    const uint32_t rank = cur.u32();
    if (rank != want_shape.size())
      fail(ErrorKind::integrity, "tensor " + name + " has rank " + std::to_string(rank) +
                                     ", wanted " + std::to_string(want_shape.size()) + ": " +
                                     path.string());
    Shape shape;
    for (uint32_t i = 0; i < rank; ++i) shape.push_back(cur.u32());
    if (shape != want_shape)
      fail(ErrorKind::integrity, "tensor " + name + " has shape " + shape_str(shape) +
                                     ", wanted " + shape_str(want_shape) + ": " + path.string());
    const int64_t numel = shape_numel(shape);
    cur.need(static_cast<size_t>(numel) * 4);
    TensorT<float> t = TensorT<float>::zeros(shape);
    for (int64_t i = 0; i < numel; ++i) t.data[static_cast<size_t>(i)] = cur.f32();
    store.emplace(name, std::move(t));
  }
  if (cur.off != cur.size)
    fail(ErrorKind::integrity, "trailing bytes after last tensor: " + path.string());
  return {std::move(store), cfg};
}

template void save_checkpoint<float>(const ParamStore<float>&, const UNetConfig&, const std::filesystem::path&);
template void save_checkpoint<double>(const ParamStore<double>&, const UNetConfig&, const std::filesystem::path&);

}  // namespace ts
