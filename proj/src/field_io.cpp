#include "mhess/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <vector>

namespace mhess {

static_assert(std::endian::native == std::endian::little,
              "field files are little-endian; big-endian hosts are not supported");

namespace {

constexpr char kMagic[4] = {'H', 'L', 'F', '1'};

void write_header(std::ofstream& os, const TorusGrid& g, FieldKind kind) {
  const std::uint32_t n = static_cast<std::uint32_t>(g.n());
  const std::uint32_t N = static_cast<std::uint32_t>(g.N());
  const auto k = static_cast<std::uint8_t>(kind);
  os.write(kMagic, 4);
  os.write(reinterpret_cast<const char*>(&n), 4);
  os.write(reinterpret_cast<const char*>(&N), 4);
  os.write(reinterpret_cast<const char*>(&k), 1);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open '" + path.string() + "' for writing");
  return os;
}

void write_values(std::ofstream& os, const double* data, Index count, const std::filesystem::path& path) {
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!os) throw FormatError("write failed for '" + path.string() + "'");
}

void read_values(std::ifstream& is, double* data, Index count, const std::filesystem::path& path) {
  is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (is.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
    throw FormatError("truncated payload in '" + path.string() + "'");
}

}  // namespace

void write_field(const std::filesystem::path& path, const ScalarField& f) {
  auto os = open_out(path);
  write_header(os, f.grid, FieldKind::scalar);
  write_values(os, f.values.data(), f.values.size(), path);
}

void write_field(const std::filesystem::path& path, const DensityField& f) {
  auto os = open_out(path);
  write_header(os, f.grid, FieldKind::density);
  const Field v = f.values.max(0.0);
  write_values(os, v.data(), v.size(), path);
}

void write_field(const std::filesystem::path& path, const HermitianHessianField& f) {
  auto os = open_out(path);
  write_header(os, f.grid, FieldKind::hermitian);
  const int n = f.grid.n();
  std::vector<double> buf(2 * n * n);
  for (Index p = 0; p < f.grid.size(); ++p) {
    const HermitianMatrix a = f.at(p);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        buf[2 * (j * n + k)] = a(j, k).real();
        buf[2 * (j * n + k) + 1] = a(j, k).imag();
      }
    write_values(os, buf.data(), static_cast<Index>(buf.size()), path);
  }
}

AnyField read_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path.string() + "'");
  char magic[4] = {};
  std::uint32_t n = 0, N = 0;
  std::uint8_t kind = 0;
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("bad magic in '" + path.string() + "'");
  is.read(reinterpret_cast<char*>(&n), 4);
  is.read(reinterpret_cast<char*>(&N), 4);
  is.read(reinterpret_cast<char*>(&kind), 1);
  if (!is) throw FormatError("truncated header in '" + path.string() + "'");
  if (n < 1 || n > 3) throw FormatError("unsupported complex dimension " + std::to_string(n));
  if (N < 8 || N % 2 != 0 || N > 4096) throw FormatError("unsupported resolution " + std::to_string(N));
  const TorusGrid g(static_cast<int>(n), static_cast<int>(N));

  switch (static_cast<FieldKind>(kind)) {
    case FieldKind::scalar: {
      ScalarField f(g);
      read_values(is, f.values.data(), g.size(), path);
      return f;
    }
    case FieldKind::density: {
      DensityField f(g);
      read_values(is, f.values.data(), g.size(), path);
      return f;
    }
    case FieldKind::hermitian: {
      HermitianHessianField f(g);
      const int nn = g.n();
      std::vector<double> buf(2 * nn * nn);
      HermitianMatrix a(nn, nn);
      for (Index p = 0; p < g.size(); ++p) {
        read_values(is, buf.data(), static_cast<Index>(buf.size()), path);
        for (int j = 0; j < nn; ++j)
          for (int k = 0; k < nn; ++k) a(j, k) = {buf[2 * (j * nn + k)], buf[2 * (j * nn + k) + 1]};
        f.set(p, a);
      }
      return f;
    }
  }
  throw FormatError("unknown field kind " + std::to_string(kind));
}

ScalarField read_scalar_field(const std::filesystem::path& path) {
  auto any = read_field(path);
  if (auto* s = std::get_if<ScalarField>(&any)) return std::move(*s);
  throw FormatError("'" + path.string() + "' does not hold a scalar field");
}

DensityField read_density_field(const std::filesystem::path& path) {
  auto any = read_field(path);
  if (auto* s = std::get_if<DensityField>(&any)) return std::move(*s);
  throw FormatError("'" + path.string() + "' does not hold a density field");
}

namespace {

void csv_rows(const std::filesystem::path& path, const TorusGrid& g, const Field& v) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open '" + path.string() + "' for writing");
  static const char* names[] = {"x1", "y1", "x2", "y2", "x3", "y3"};
  for (int a = 0; a < g.dims(); ++a) os << names[a] << ',';
  os << "value\n" << std::setprecision(17);
  for (Index p = 0; p < g.size(); ++p) {
    for (int a = 0; a < g.dims(); ++a) os << g.coord(p, a) << ',';
    os << v[p] << '\n';
  }
}

}  // namespace

void write_csv(const std::filesystem::path& path, const ScalarField& f) {
  csv_rows(path, f.grid, f.values);
}

void write_csv(const std::filesystem::path& path, const DensityField& f) {
  csv_rows(path, f.grid, f.values.max(0.0));
}

}  // namespace mhess
