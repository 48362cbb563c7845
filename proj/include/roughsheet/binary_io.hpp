#pragma once

// Binary snapshots of noise sheets ("RSHT1") and solution fields ("RSOL1").
// All numbers are little-endian regardless of the host.
//
// RSHT1: magic[5] u32 version f64 H f64 tMax u64 nT f64 xMin f64 xMax u64 nX
//        u64 d u64 seed, then d*nT*nX f64 increments (component, time, space).
// RSOL1: the same envelope (H, grid, d, seed) followed by u32 op u64 jLo
//        u64 jHi u64 nTimes u64 times[nTimes] u32 methodLength method bytes,
//        then d*nTimes*nX f64 values (component, time, space).
//
// An ensemble is one RSOL1 file holding consecutive records, plus a JSONL
// index with one {"replica", "seed", "offset", "bytes"} line per record.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roughsheet/errors.hpp"
#include "roughsheet/noise.hpp"
#include "roughsheet/solver.hpp"

namespace roughsheet {

inline constexpr std::uint32_t kFormatVersion = 1;

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), 8);
}
inline void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), 4);
}
inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw FormatError("truncated snapshot");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}
inline std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw FormatError("truncated snapshot");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

inline void put_f64_array(std::ostream& os, const std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  } else {
    for (double x : v) put_f64(os, x);
  }
}
inline void get_f64_array(std::istream& is, std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double))))
      throw FormatError("truncated snapshot payload");
  } else {
    for (double& x : v) x = get_f64(is);
  }
}

inline void put_envelope(std::ostream& os, const char* magic, double H, const GridSpec& g, std::uint64_t d,
                         std::uint64_t seed) {
  os.write(magic, 5);
  put_u32(os, kFormatVersion);
  put_f64(os, H);
  put_f64(os, g.tMax);
  put_u64(os, g.nT);
  put_f64(os, g.xMin);
  put_f64(os, g.xMax);
  put_u64(os, g.nX);
  put_u64(os, d);
  put_u64(os, seed);
}

struct Envelope {
  double H = 0.0;
  GridSpec grid;
  std::uint64_t d = 0;
  std::uint64_t seed = 0;
};

inline Envelope get_envelope(std::istream& is, const char* magic) {
  char m[5];
  if (!is.read(m, 5)) throw FormatError("truncated snapshot header");
  if (std::memcmp(m, magic, 5) != 0) throw FormatError(std::string("bad magic, expected ") + std::string(magic, 5));
  const std::uint32_t version = get_u32(is);
  if (version != kFormatVersion) throw FormatError("unsupported snapshot version " + std::to_string(version));
  Envelope e;
  e.H = get_f64(is);
  e.grid.tMax = get_f64(is);
  e.grid.nT = get_u64(is);
  e.grid.xMin = get_f64(is);
  e.grid.xMax = get_f64(is);
  e.grid.nX = get_u64(is);
  e.d = get_u64(is);
  e.seed = get_u64(is);
  try {
    e.grid.validate();
  } catch (const DomainError& err) {
    throw FormatError(std::string("snapshot grid invalid: ") + err.what());
  }
  if (e.d == 0 || e.d > 1024) throw FormatError("snapshot component count out of range");
  return e;
}

inline std::ofstream open_out(const std::string& path, std::ios::openmode extra = {}) {
  std::ofstream os(path, std::ios::binary | extra);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  return os;
}
inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return is;
}

}  // namespace detail

inline void write_sheet(std::ostream& os, const NoiseSheet& s) {
  detail::put_envelope(os, "RSHT1", s.H, s.grid, s.d, s.seed);
  detail::put_f64_array(os, s.increments);
}

inline NoiseSheet read_sheet(std::istream& is) {
  const detail::Envelope e = detail::get_envelope(is, "RSHT1");
  NoiseSheet s = NoiseSheet::zeros(e.grid, e.H, e.d);
  s.seed = e.seed;
  detail::get_f64_array(is, s.increments);
  return s;
}

inline void write_sheet(const std::string& path, const NoiseSheet& s) {
  auto os = detail::open_out(path);
  write_sheet(os, s);
  if (!os) throw FormatError("write failed: " + path);
}

inline NoiseSheet read_sheet(const std::string& path) {
  auto is = detail::open_in(path);
  return read_sheet(is);
}

/// H is not part of SolutionField; the caller passes the model's.
inline void write_field(std::ostream& os, const SolutionField& f, OperatorKind op, double H) {
  detail::put_envelope(os, "RSOL1", H, f.grid, f.d, f.seed);
  detail::put_u32(os, op == OperatorKind::Heat ? 0u : 1u);
  detail::put_u64(os, f.jLo);
  detail::put_u64(os, f.jHi);
  detail::put_u64(os, f.times.size());
  for (std::size_t n : f.times) detail::put_u64(os, n);
  detail::put_u32(os, static_cast<std::uint32_t>(f.method.size()));
  os.write(f.method.data(), static_cast<std::streamsize>(f.method.size()));
  detail::put_f64_array(os, f.values);
}

struct StoredField {
  SolutionField field;
  OperatorKind op = OperatorKind::Heat;
  double H = 0.0;
};

inline StoredField read_field(std::istream& is) {
  const detail::Envelope e = detail::get_envelope(is, "RSOL1");
  StoredField out;
  out.H = e.H;
  const std::uint32_t op = detail::get_u32(is);
  if (op > 1) throw FormatError("unknown operator code in field snapshot");
  out.op = op == 0 ? OperatorKind::Heat : OperatorKind::Wave;
  SolutionField& f = out.field;
  f.grid = e.grid;
  f.d = e.d;
  f.seed = e.seed;
  f.jLo = detail::get_u64(is);
  f.jHi = detail::get_u64(is);
  const std::uint64_t nTimes = detail::get_u64(is);
  if (nTimes == 0 || nTimes > e.grid.nT + 1) throw FormatError("field snapshot time count out of range");
  f.times.resize(nTimes);
  for (auto& n : f.times) {
    n = detail::get_u64(is);
    if (n > e.grid.nT) throw FormatError("field snapshot time index out of range");
  }
  if (!(f.jLo < f.jHi && f.jHi <= e.grid.nX)) throw FormatError("field snapshot window out of range");
  const std::uint32_t len = detail::get_u32(is);
  if (len > 256) throw FormatError("field snapshot method name too long");
  f.method.resize(len);
  if (len && !is.read(f.method.data(), len)) throw FormatError("truncated snapshot header");
  f.values.resize(f.d * nTimes * e.grid.nX);
  detail::get_f64_array(is, f.values);
  return out;
}

inline void write_field(const std::string& path, const SolutionField& f, OperatorKind op, double H) {
  auto os = detail::open_out(path);
  write_field(os, f, op, H);
  if (!os) throw FormatError("write failed: " + path);
}

inline StoredField read_field(const std::string& path) {
  auto is = detail::open_in(path);
  return read_field(is);
}

// ---------------------------------------------------------------------------
// ensembles

struct EnsembleEntry {
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  std::uint64_t offset = 0;
  std::uint64_t bytes = 0;
};

/// Appends records in replica order; the index is written by finish().
class EnsembleWriter {
 public:
  EnsembleWriter(std::string dataPath, std::string indexPath, OperatorKind op, double H)
      : dataPath_(std::move(dataPath)), indexPath_(std::move(indexPath)), op_(op), H_(H) {
    os_ = detail::open_out(dataPath_, std::ios::trunc);
  }

  void append(std::size_t replica, const SolutionField& f) {
    const auto start = static_cast<std::uint64_t>(os_.tellp());
    write_field(os_, f, op_, H_);
    if (!os_) throw FormatError("write failed: " + dataPath_);
    const auto end = static_cast<std::uint64_t>(os_.tellp());
    entries_.push_back({replica, f.seed, start, end - start});
  }

  const std::vector<EnsembleEntry>& entries() const { return entries_; }

  void finish() {
    os_.close();
    auto idx = detail::open_out(indexPath_, std::ios::trunc);
    for (const auto& e : entries_) {
      nlohmann::json j = {{"replica", e.replica}, {"seed", e.seed}, {"offset", e.offset}, {"bytes", e.bytes}};
      idx << j.dump() << '\n';
    }
    if (!idx) throw FormatError("write failed: " + indexPath_);
  }

 private:
  std::string dataPath_, indexPath_;
  OperatorKind op_;
  double H_;
  std::ofstream os_;
  std::vector<EnsembleEntry> entries_;
};

inline std::vector<EnsembleEntry> read_ensemble_index(const std::string& indexPath) {
  std::ifstream is(indexPath);
  if (!is) throw FormatError("cannot open ensemble index " + indexPath);
  std::vector<EnsembleEntry> out;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("replica").get<std::size_t>(), j.at("seed").get<std::uint64_t>(),
                     j.at("offset").get<std::uint64_t>(), j.at("bytes").get<std::uint64_t>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("ensemble index line " + std::to_string(lineNo) + ": " + e.what());
    }
  }
  return out;
}

/// Reads every record of an ensemble file in index order and hands it to fn.
template <class Fn>
void for_each_stored_field(const std::string& dataPath, const std::vector<EnsembleEntry>& index, Fn&& fn) {
  auto is = detail::open_in(dataPath);
  for (const auto& e : index) {
    is.seekg(static_cast<std::streamoff>(e.offset));
    if (!is) throw FormatError("ensemble offset out of range");
    fn(e, read_field(is));
  }
}

}  // namespace roughsheet
