#include "nsp/snapshot.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "nsp/errors.hpp"

namespace nsp {

namespace {

constexpr std::array<char, 4> kMagic{'N', 'S', 'P', 'F'};

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  os.write(bytes, sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw InvalidArgument("snapshot truncated");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace

void write_snapshot(std::ostream& os, const SpectralField& f) {
  const auto& g = f.grid();
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, kSnapshotVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  for (int a = 0; a < g.dim(); ++a) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.points(a)));
  for (int a = 0; a < g.dim(); ++a) put_le<double>(os, g.period(a));
  for (double v : f.to_physical()) put_le<double>(os, v);
  if (!os) throw Error("failed writing snapshot");
}

void write_snapshot(const std::filesystem::path& path, const SpectralField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_snapshot(os, f);
}

SpectralField read_snapshot(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic)
    throw InvalidArgument("not an NSPF snapshot (bad magic)");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kSnapshotVersion)
    throw InvalidArgument("unsupported snapshot version " + std::to_string(version));
  const auto dim = get_le<std::uint32_t>(is);
  if (dim < 1 || dim > 3) throw InvalidArgument("snapshot dimension must be 1, 2 or 3");
  IVec3 points{1, 1, 1};
  DVec3 period{1.0, 1.0, 1.0};
  for (std::uint32_t a = 0; a < dim; ++a) {
    const auto n = get_le<std::uint32_t>(is);
    if (n < 4 || n % 2 != 0 || n > (1u << 16)) throw InvalidArgument("snapshot grid size invalid");
    points[a] = static_cast<int>(n);
  }
  for (std::uint32_t a = 0; a < dim; ++a) period[a] = get_le<double>(is);
  const TorusGrid grid(static_cast<int>(dim), points, period);
  std::vector<double> values(grid.size());
  for (auto& v : values) v = get_le<double>(is);
  if (is.peek() != std::char_traits<char>::eof()) throw InvalidArgument("snapshot has trailing data");
  return SpectralField::from_physical(grid, values);
}

SpectralField read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open snapshot " + path.string());
  return read_snapshot(is);
}

}  // namespace nsp
