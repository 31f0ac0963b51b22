#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "nsf/fluid.hpp"

namespace nsf {

// Binary layout (all little-endian, 8 bytes per scalar):
//   "NSF1"  dim:i64  n:i64  L:f64  time:f64  mu:f64  lambda:f64
//   rho[N]  u_0[N] .. u_{dim-1}[N]  T[N]        (row-major lattice order)

struct Checkpoint {
  FluidState state;
  double mu = 0.0;
  double lambda = 0.0;
};

namespace detail {

inline constexpr char kCheckpointMagic[4] = {'N', 'S', 'F', '1'};
inline constexpr std::size_t kCheckpointHeader = 4 + 6 * 8;

inline void put_u64(std::string& out, std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

inline std::uint64_t get_u64(const char* p) {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  return v;
}

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(const char* p) { return std::bit_cast<double>(get_u64(p)); }

}  // namespace detail

inline std::string encode_checkpoint(const FluidState& s, const FluidParams& p) {
  std::string out(detail::kCheckpointMagic, 4);
  const Grid& g = s.grid;
  out.reserve(detail::kCheckpointHeader + 8 * g.size() * std::size_t(g.dim() + 2));
  detail::put_u64(out, std::uint64_t(g.dim()));
  detail::put_u64(out, std::uint64_t(g.n()));
  detail::put_f64(out, g.box_length());
  detail::put_f64(out, s.time);
  detail::put_f64(out, p.mu);
  detail::put_f64(out, p.lambda);
  auto put_field = [&](const RealField& f) { for (double v : f.values) detail::put_f64(out, v); };
  put_field(s.rho);
  for (const auto& c : s.u.comp) put_field(c);
  put_field(s.temp);
  return out;
}

/// Parse a checkpoint; throws ErrorKind::io on bad magic, bad header or
/// truncation, and never returns a partial state.
inline Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < detail::kCheckpointHeader)
    throw Error(ErrorKind::io, "checkpoint truncated: header needs " +
                                   std::to_string(detail::kCheckpointHeader) + " bytes, got " +
                                   std::to_string(bytes.size()));
  if (std::memcmp(bytes.data(), detail::kCheckpointMagic, 4) != 0)
    throw Error(ErrorKind::io, "checkpoint magic/version mismatch (expected NSF1)");
  const char* p = bytes.data() + 4;
  const std::uint64_t dim = detail::get_u64(p);
  const std::uint64_t n = detail::get_u64(p + 8);
  const double L = detail::get_f64(p + 16);
  if (dim < 1 || dim > 3 || n < 8 || n > (1u << 14) || (n & (n - 1)) != 0 || !(L > 0.0))
    throw Error(ErrorKind::io, "checkpoint header is corrupt (dim/n/L out of range)");
  const Grid g(int(dim), int(n), L);
  const std::size_t need = detail::kCheckpointHeader + 8 * g.size() * std::size_t(dim + 2);
  if (bytes.size() != need)
    throw Error(ErrorKind::io, "checkpoint payload size " + std::to_string(bytes.size()) +
                                   " does not match expected " + std::to_string(need));
  Checkpoint c;
  c.state = FluidState(g);
  c.state.time = detail::get_f64(p + 24);
  c.mu = detail::get_f64(p + 32);
  c.lambda = detail::get_f64(p + 40);
  const char* q = bytes.data() + detail::kCheckpointHeader;
  auto get_field = [&](RealField& f) {
    for (double& v : f.values) {
      v = detail::get_f64(q);
      q += 8;
    }
  };
  get_field(c.state.rho);
  for (auto& comp : c.state.u.comp) get_field(comp);
  get_field(c.state.temp);
  return c;
}

/// Write `bytes` to `path` through a sibling temporary file and a rename.
inline void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::io, "cannot open " + tmp.string() + " for writing");
    os.write(bytes.data(), std::streamsize(bytes.size()));
    if (!os) throw Error(ErrorKind::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io, "rename to " + path.string() + " failed: " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(is), {});
}

inline void write_checkpoint(const std::filesystem::path& path, const FluidState& s,
                             const FluidParams& p) {
  atomic_write(path, encode_checkpoint(s, p));
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace nsf
