#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "homlab/lattice.hpp"

namespace homlab {

/// A CSV cell: text or a number written with 17 significant digits.
using CsvValue = std::variant<std::string, double, long long>;

std::string format_double(double v);

/// UTF-8 CSV with a header row and comma separators.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  void row(const std::vector<CsvValue>& values);
  void flush();

 private:
  std::filesystem::path path_;
  std::size_t columns_;
  std::string buffer_;
};

struct DumpInfo {
  std::string field;
  std::vector<int> shape;      // slowest axis first (row-major order of the data)
  std::vector<double> spacing;
  double time = 0.0;
  double epsilon = 0.0;
  std::string component;
};

/// Raw little-endian float64 dump `<stem>.bin` plus `<stem>.json` sidecar.
void dump_field(const std::filesystem::path& stem, std::span<const double> data, const DumpInfo& info);

/// Dumps a cell field of a lattice (shape reported as [nz, ny, nx] or [ny, nx]).
void dump_cell_field(const std::filesystem::path& stem, const Lattice& lat, std::span<const double> data,
                     const std::string& field, double time, double epsilon);
/// Dumps each axis block of a face field as `<stem>_<axis>`.
void dump_face_field(const std::filesystem::path& stem, const Lattice& lat, std::span<const double> data,
                     const std::string& field, double time, double epsilon);

}  // namespace homlab
