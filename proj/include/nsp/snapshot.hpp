#pragma once

// Binary field snapshots.
//
// Layout (all little-endian):
//   char[4]  magic "NSPF"
//   u32      format version (1)
//   u32      dim
//   u32      points per axis, dim entries
//   f64      period per axis, dim entries
//   f64      physical-grid values, row-major (last axis fastest)

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "nsp/torus_spectral.hpp"

namespace nsp {

inline constexpr std::uint32_t kSnapshotVersion = 1;

void write_snapshot(std::ostream& os, const SpectralField& f);
void write_snapshot(const std::filesystem::path& path, const SpectralField& f);

/// Throws InvalidArgument on a bad magic, unknown version, inconsistent grid
/// header or truncated payload.
SpectralField read_snapshot(std::istream& is);
SpectralField read_snapshot(const std::filesystem::path& path);

}  // namespace nsp
