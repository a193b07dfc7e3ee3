#pragma once

#include <filesystem>
#include <variant>

#include "mhess/grid.hpp"

namespace mhess {

/// Binary layout: "HLF1", u32 n, u32 N, u8 kind, then little-endian real64
/// payload. Hermitian fields store n*n complex entries per point,
/// interleaved (re, im), row-major.
enum class FieldKind : std::uint8_t { scalar = 0, density = 1, hermitian = 2 };

using AnyField = std::variant<ScalarField, DensityField, HermitianHessianField>;

void write_field(const std::filesystem::path& path, const ScalarField& f);
/// Densities are written clamped to zero.
void write_field(const std::filesystem::path& path, const DensityField& f);
void write_field(const std::filesystem::path& path, const HermitianHessianField& f);

AnyField read_field(const std::filesystem::path& path);
ScalarField read_scalar_field(const std::filesystem::path& path);
DensityField read_density_field(const std::filesystem::path& path);

/// One row per point: 2n lattice coordinates, then the value(s).
void write_csv(const std::filesystem::path& path, const ScalarField& f);
void write_csv(const std::filesystem::path& path, const DensityField& f);

}  // namespace mhess
