#include "homlab/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include "json.hpp"

#include "homlab/errors.hpp"

namespace homlab {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : path_(path), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) buffer_ += (i ? "," : "") + header[i];
  buffer_ += "\n";
}

void CsvWriter::row(const std::vector<CsvValue>& values) {
  if (values.size() != columns_) throw DomainError("CSV row width does not match the header of " + path_.string());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) buffer_ += ",";
    if (const auto* s = std::get_if<std::string>(&values[i])) {
      if (s->find_first_of(",\"\n") != std::string::npos) {
        std::string q = "\"";
        for (char c : *s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        buffer_ += q + "\"";
      } else {
        buffer_ += *s;
      }
    } else if (const auto* d = std::get_if<double>(&values[i])) {
      buffer_ += format_double(*d);
    } else {
      buffer_ += std::to_string(std::get<long long>(values[i]));
    }
  }
  buffer_ += "\n";
}

void CsvWriter::flush() {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::binary);
  if (!out) throw DomainError("cannot write " + path_.string());
  out << buffer_;
}

void dump_field(const std::filesystem::path& stem, std::span<const double> data, const DumpInfo& info) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  std::filesystem::path bin = stem, meta = stem;
  bin += ".bin";
  meta += ".json";
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw DomainError("cannot write " + bin.string());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  } else {
    for (double v : data) {
      unsigned char b[8];
      std::memcpy(b, &v, 8);
      for (int i = 7; i >= 0; --i) out.put(static_cast<char>(b[i]));
    }
  }
  nlohmann::json j;
  j["field"] = info.field;
  j["shape"] = info.shape;
  j["spacing"] = info.spacing;
  j["time"] = info.time;
  j["epsilon"] = info.epsilon;
  j["component"] = info.component;
  std::ofstream(meta) << j.dump(2) << "\n";
}

namespace {

std::vector<int> row_major_shape(int dim, const Index3& s) {
  std::vector<int> shape;
  for (int a = dim - 1; a >= 0; --a) shape.push_back(s[a]);
  return shape;
}

}  // namespace

void dump_cell_field(const std::filesystem::path& stem, const Lattice& lat, std::span<const double> data,
                     const std::string& field, double time, double epsilon) {
  DumpInfo info{field, row_major_shape(lat.dim, lat.n), std::vector<double>(lat.dim, lat.h), time, epsilon, "scalar"};
  dump_field(stem, data, info);
}

void dump_face_field(const std::filesystem::path& stem, const Lattice& lat, std::span<const double> data,
                     const std::string& field, double time, double epsilon) {
  const auto off = lat.face_offsets();
  static const char* names[] = {"x", "y", "z"};
  for (int a = 0; a < lat.dim; ++a) {
    DumpInfo info{field, row_major_shape(lat.dim, lat.face_shape(a)), std::vector<double>(lat.dim, lat.h), time,
                  epsilon, names[a]};
    std::filesystem::path s = stem;
    s += std::string("_") + names[a];
    dump_field(s, data.subspan(off[a], off[a + 1] - off[a]), info);
  }
}

}  // namespace homlab
