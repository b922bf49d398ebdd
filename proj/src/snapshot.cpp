#include "condyn/snapshot.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace condyn::diff {

namespace {

constexpr char kMagic[] = "CONDYN1";
constexpr std::size_t kMagicLen = 7;

void write_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  f.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ofstream& f, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  f.write(reinterpret_cast<const char*>(b), 8);
}

bool read_u32(std::ifstream& f, std::uint32_t& v) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4)) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

bool read_f64(std::ifstream& f, double& v) {
  unsigned char b[8];
  if (!f.read(reinterpret_cast<char*>(b), 8)) return false;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  std::memcpy(&v, &bits, 8);
  return true;
}

}  // namespace

void save_snapshot(const std::string& path, const ParameterSet& ps) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(kMagic, kMagicLen);
  for (const auto& [name, t] : ps) {
    write_u32(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(f, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t i = 0; i < t.rank(); ++i)
      write_u32(f, static_cast<std::uint32_t>(t.dim(i)));
    for (std::size_t i = 0; i < t.size(); ++i) write_f64(f, t[i]);
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

ParameterSet load_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  char magic[kMagicLen];
  if (!f.read(magic, kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0)
    throw IoError("'" + path + "' is not a parameter snapshot (bad magic)");
  ParameterSet ps;
  for (;;) {
    std::uint32_t name_len;
    if (!read_u32(f, name_len)) {
      if (f.eof()) break;
      throw IoError("truncated snapshot '" + path + "'");
    }
    if (name_len == 0 || name_len > 4096)
      throw IoError("corrupt snapshot '" + path + "': name length " +
                    std::to_string(name_len));
    std::string name(name_len, '\0');
    if (!f.read(name.data(), name_len))
      throw IoError("truncated snapshot '" + path + "'");
    std::uint32_t rank;
    if (!read_u32(f, rank) || rank > 8)
      throw IoError("corrupt snapshot '" + path + "': bad rank");
    Shape shape(rank);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      std::uint32_t d;
      if (!read_u32(f, d) || d == 0)
        throw IoError("corrupt snapshot '" + path + "': bad dimension");
      shape[i] = d;
      count *= d;
    }
    std::vector<double> vals(count);
    for (std::size_t i = 0; i < count; ++i)
      if (!read_f64(f, vals[i]))
        throw IoError("truncated snapshot '" + path + "' in parameter '" + name + "'");
    ps.add(name, Tensor(std::move(shape), std::move(vals)));
  }
  return ps;
}

}  // namespace condyn::diff
