#include "vscope/snapshot_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vscope/errors.hpp"

namespace vscope {

namespace {

constexpr std::array<char, 4> kMagic{'V', 'S', 'C', 'P'};

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

template <class T>
void put(unsigned char* dst, T v) {
  v = to_little(v);
  std::memcpy(dst, &v, sizeof(T));
}

template <class T>
T get(const unsigned char* src) {
  T v;
  std::memcpy(&v, src, sizeof(T));
  return to_little(v);
}

void write_payload(std::ofstream& out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) {
      unsigned char b[8];
      put(b, v);
      out.write(reinterpret_cast<const char*>(b), 8);
    }
  }
}

void read_payload(std::ifstream& in, std::span<double> values, const std::filesystem::path& path) {
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(double)))
    throw FormatError(path.string() + ": truncated payload");
  if constexpr (std::endian::native != std::endian::little)
    for (double& v : values) v = to_little(v);
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  return out;
}

void write_header(std::ofstream& out, const Grid& g, FieldKind kind, double time, double viscosity) {
  unsigned char h[kSnapshotHeaderBytes] = {};
  std::memcpy(h, kMagic.data(), 4);
  put<std::uint32_t>(h + 4, kSnapshotVersion);
  put<std::uint32_t>(h + 8, static_cast<std::uint32_t>(g.n()));
  put<std::uint32_t>(h + 12, static_cast<std::uint32_t>(kind));
  put<double>(h + 16, g.length());
  put<double>(h + 24, time);
  put<double>(h + 32, viscosity);
  out.write(reinterpret_cast<const char*>(h), kSnapshotHeaderBytes);
}

SnapshotHeader parse_header(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char h[kSnapshotHeaderBytes];
  in.read(reinterpret_cast<char*>(h), kSnapshotHeaderBytes);
  if (in.gcount() != static_cast<std::streamsize>(kSnapshotHeaderBytes))
    throw FormatError(path.string() + ": truncated header");
  if (std::memcmp(h, kMagic.data(), 4) != 0) throw FormatError(path.string() + ": bad magic, not a snapshot file");
  SnapshotHeader hd;
  hd.version = get<std::uint32_t>(h + 4);
  if (hd.version != kSnapshotVersion)
    throw FormatError(path.string() + ": unsupported version " + std::to_string(hd.version) + " (expected " +
                      std::to_string(kSnapshotVersion) + ")");
  const auto n = get<std::uint32_t>(h + 8);
  const auto kind = get<std::uint32_t>(h + 12);
  if (kind > 2) throw FormatError(path.string() + ": unknown field kind " + std::to_string(kind));
  if (n < 8 || n % 2 != 0 || n > 4096) throw FormatError(path.string() + ": invalid grid size " + std::to_string(n));
  hd.n_points = static_cast<int>(n);
  hd.kind = static_cast<FieldKind>(kind);
  hd.box_length = get<double>(h + 16);
  hd.time = get<double>(h + 24);
  hd.viscosity = get<double>(h + 32);
  if (!(hd.box_length > 0.0) || !std::isfinite(hd.time)) throw FormatError(path.string() + ": invalid header values");
  return hd;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

void check_size(const std::filesystem::path& path, const SnapshotHeader& hd) {
  const std::uintmax_t nodes = std::uintmax_t(hd.n_points) * hd.n_points * hd.n_points;
  const std::uintmax_t expected = kSnapshotHeaderBytes + nodes * hd.components() * sizeof(double);
  const std::uintmax_t actual = std::filesystem::file_size(path);
  if (actual < expected)
    throw FormatError(path.string() + ": truncated payload (" + std::to_string(actual) + " of " +
                      std::to_string(expected) + " bytes)");
  if (actual > expected) throw FormatError(path.string() + ": trailing bytes after payload");
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const VectorField& field, double viscosity, FieldKind kind) {
  if (kind == FieldKind::scalar) throw ValidationError("write_snapshot: vector field written with scalar kind");
  auto out = open_out(path);
  write_header(out, field.grid(), kind, field.time(), viscosity);
  for (int a = 0; a < 3; ++a) write_payload(out, field.component(a));
  if (!out) throw FormatError("write failed for " + path.string());
}

void write_snapshot(const std::filesystem::path& path, const ScalarField& field, double viscosity) {
  auto out = open_out(path);
  write_header(out, field.grid(), FieldKind::scalar, field.time(), viscosity);
  write_payload(out, field.values());
  if (!out) throw FormatError("write failed for " + path.string());
}

SnapshotHeader read_snapshot_header(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_header(in, path);
}

VectorField read_vector_snapshot(const std::filesystem::path& path) {
  auto in = open_in(path);
  const SnapshotHeader hd = parse_header(in, path);
  if (hd.kind == FieldKind::scalar) throw FormatError(path.string() + ": expected a vector field, found scalar");
  check_size(path, hd);
  VectorField f(Grid(hd.n_points, hd.box_length), hd.time);
  for (int a = 0; a < 3; ++a) read_payload(in, f.component(a), path);
  return f;
}

ScalarField read_scalar_snapshot(const std::filesystem::path& path) {
  auto in = open_in(path);
  const SnapshotHeader hd = parse_header(in, path);
  if (hd.kind != FieldKind::scalar) throw FormatError(path.string() + ": expected a scalar field");
  check_size(path, hd);
  ScalarField f(Grid(hd.n_points, hd.box_length), hd.time);
  read_payload(in, f.values(), path);
  return f;
}

std::string snapshot_file_name(std::size_t index) {
  std::ostringstream os;
  os << "snapshot_" << std::setw(6) << std::setfill('0') << index << ".vscp";
  return os.str();
}

SnapshotDirectory::SnapshotDirectory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError(dir.string() + " is not a directory");
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".vscp") continue;
    SnapshotHeader hd = read_snapshot_header(e.path());
    if (hd.kind != FieldKind::velocity) continue;
    entries_.push_back({e.path(), hd});
  }
  if (entries_.empty()) throw ValidationError("no velocity snapshots in " + dir.string());
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) { return a.header.time < b.header.time; });
  const auto& h0 = entries_.front().header;
  grid_ = Grid(h0.n_points, h0.box_length);
  viscosity_ = h0.viscosity;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& h = entries_[i].header;
    if (h.n_points != h0.n_points || h.box_length != h0.box_length)
      throw ValidationError(entries_[i].path.string() + ": grid differs from other snapshots");
    if (i > 0 && !(h.time > entries_[i - 1].header.time))
      throw ValidationError(entries_[i].path.string() + ": duplicate snapshot time");
  }
}

void write_mask(const std::filesystem::path& path, const std::vector<std::uint8_t>& mask) {
  auto out = open_out(path);
  out.write(reinterpret_cast<const char*>(mask.data()), static_cast<std::streamsize>(mask.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace vscope
