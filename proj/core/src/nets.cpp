#include "dwl/nets.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dwl::nn {

namespace {

constexpr char kMagic[8] = {'D', 'W', 'L', 'C', 'K', 'P', 'T', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_str(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    write_str(os, k);
    write_str(os, v);
  }
  write_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& e : ckpt.tensors) {
    write_str(os, e.name);
    write_u32(os, static_cast<std::uint32_t>(e.rows));
    write_u32(os, static_cast<std::uint32_t>(e.cols));
    os.write(reinterpret_cast<const char*>(e.data.data()),
             static_cast<std::streamsize>(e.data.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  Checkpoint c;
  const std::uint32_t n_meta = read_u32(is);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = read_str(is);
    c.meta[k] = read_str(is);
  }
  const std::uint32_t n_tensors = read_u32(is);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    Checkpoint::Entry e;
    e.name = read_str(is);
    e.rows = static_cast<int>(read_u32(is));
    e.cols = static_cast<int>(read_u32(is));
    e.data.resize(static_cast<std::size_t>(e.rows) * e.cols);
    is.read(reinterpret_cast<char*>(e.data.data()),
            static_cast<std::streamsize>(e.data.size() * sizeof(double)));
    c.tensors.push_back(std::move(e));
  }
  if (!is) throw std::runtime_error("checkpoint: truncated file " + path);
  return c;
}

}  // namespace dwl::nn
