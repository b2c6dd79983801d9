#include "pcac/geometry_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "pcac/errors.hpp"

namespace pcac {
namespace {

namespace fs = std::filesystem;

struct PlyProperty {
  std::string name;
  std::string type;  // scalar type name as written in the header
};

std::size_t scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64" || type == "int64" || type == "uint64") return 8;
  return 0;
}

struct PlyHeader {
  bool binary = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> vertex_props;  // in file order
  std::size_t header_bytes = 0;           // offset of first payload byte
  int xyz_index[3] = {-1, -1, -1};        // property indices of x, y, z
};

[[noreturn]] void parse_fail(const fs::path& path, const std::string& what) {
  throw FormatError(path.string() + ": " + what);
}

PlyHeader read_ply_header(std::ifstream& in, const fs::path& path) {
  PlyHeader h;
  std::string line;
  int line_no = 0;
  bool in_vertex_element = false;
  bool saw_format = false;

  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || line != "ply")
    parse_fail(path, "line 1: not a PLY file (missing 'ply' magic)");

  while (next_line()) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt == "ascii")
        h.binary = false;
      else if (fmt == "binary_little_endian")
        h.binary = true;
      else
        parse_fail(path, "line " + std::to_string(line_no) + ": unsupported format '" + fmt + "'");
      saw_format = true;
    } else if (tok == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      if (!ls) parse_fail(path, "line " + std::to_string(line_no) + ": bad element line");
      if (name == "vertex") {
        h.vertex_count = count;
        in_vertex_element = true;
      } else {
        if (in_vertex_element) in_vertex_element = false;
        if (h.vertex_count == 0 || !h.vertex_props.empty()) {
          // Non-vertex elements after vertex are fine; before vertex we would
          // have to skip payloads of unknown layout.
          if (h.vertex_props.empty() && h.vertex_count == 0)
            parse_fail(path, "line " + std::to_string(line_no) +
                                 ": element '" + name + "' precedes vertex element");
        }
      }
    } else if (tok == "property") {
      std::string type;
      ls >> type;
      if (type == "list") {
        if (in_vertex_element)
          parse_fail(path, "line " + std::to_string(line_no) +
                               ": list property on vertex element is unsupported");
        continue;
      }
      std::string name;
      ls >> name;
      if (!ls) parse_fail(path, "line " + std::to_string(line_no) + ": bad property line");
      if (in_vertex_element) {
        if (scalar_size(type) == 0)
          parse_fail(path, "line " + std::to_string(line_no) + ": unknown type '" + type + "'");
        if (name == "x") h.xyz_index[0] = static_cast<int>(h.vertex_props.size());
        if (name == "y") h.xyz_index[1] = static_cast<int>(h.vertex_props.size());
        if (name == "z") h.xyz_index[2] = static_cast<int>(h.vertex_props.size());
        h.vertex_props.push_back({name, type});
      }
    } else if (tok == "end_header") {
      if (!saw_format) parse_fail(path, "header has no format line");
      if (h.vertex_count == 0) parse_fail(path, "header declares no vertices");
      for (int a = 0; a < 3; ++a)
        if (h.xyz_index[a] < 0) parse_fail(path, "vertex element lacks x/y/z properties");
      for (int a = 0; a < 3; ++a) {
        const std::string& t = h.vertex_props[h.xyz_index[a]].type;
        if (t != "float" && t != "float32" && t != "double" && t != "float64")
          parse_fail(path, "coordinate property has non-float type '" + t + "'");
      }
      h.header_bytes = static_cast<std::size_t>(in.tellg());
      return h;
    } else {
      parse_fail(path, "line " + std::to_string(line_no) + ": unexpected token '" + tok + "'");
    }
  }
  parse_fail(path, "header has no end_header");
}

double read_scalar_le(const unsigned char* p, const std::string& type) {
  if (type == "float" || type == "float32") {
    float f;
    std::memcpy(&f, p, 4);
    return static_cast<double>(f);
  }
  double d;
  std::memcpy(&d, p, 8);
  return d;
}

PointCloud read_ply(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open for reading");
  PlyHeader h = read_ply_header(in, path);

  PointCloud pc;
  pc.points.resize(h.vertex_count);

  if (h.binary) {
    std::size_t record_size = 0;
    std::vector<std::size_t> offsets(h.vertex_props.size());
    for (std::size_t i = 0; i < h.vertex_props.size(); ++i) {
      offsets[i] = record_size;
      record_size += scalar_size(h.vertex_props[i].type);
    }
    std::vector<unsigned char> rec(record_size);
    for (std::size_t v = 0; v < h.vertex_count; ++v) {
      in.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(record_size));
      if (static_cast<std::size_t>(in.gcount()) != record_size)
        parse_fail(path, "truncated payload at byte offset " +
                             std::to_string(h.header_bytes + v * record_size +
                                            static_cast<std::size_t>(in.gcount())));
      for (int a = 0; a < 3; ++a) {
        const auto idx = static_cast<std::size_t>(h.xyz_index[a]);
        const double val = read_scalar_le(rec.data() + offsets[idx], h.vertex_props[idx].type);
        if (!std::isfinite(val))
          parse_fail(path, "non-finite coordinate in vertex " + std::to_string(v));
        pc.points[v][a] = val;
      }
    }
  } else {
    std::string line;
    std::size_t got = 0;
    std::size_t line_no = 0;  // relative to end_header
    while (got < h.vertex_count) {
      if (!std::getline(in, line))
        parse_fail(path, "truncated payload: expected " + std::to_string(h.vertex_count) +
                             " vertices, got " + std::to_string(got));
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream ls(line);
      std::vector<double> vals(h.vertex_props.size());
      for (std::size_t i = 0; i < h.vertex_props.size(); ++i) {
        if (!(ls >> vals[i]))
          parse_fail(path, "bad vertex record on payload line " + std::to_string(line_no));
      }
      for (int a = 0; a < 3; ++a) {
        const double val = vals[static_cast<std::size_t>(h.xyz_index[a])];
        if (!std::isfinite(val))
          parse_fail(path, "non-finite coordinate on payload line " + std::to_string(line_no));
        pc.points[got][a] = val;
      }
      ++got;
    }
  }
  return pc;
}

PointCloud read_xyz(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open for reading");
  PointCloud pc;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Vec3 p;
    if (!(ls >> p[0] >> p[1] >> p[2]))
      parse_fail(path, "line " + std::to_string(line_no) + ": expected three coordinates");
    for (double v : p)
      if (!std::isfinite(v))
        parse_fail(path, "line " + std::to_string(line_no) + ": non-finite coordinate");
    pc.points.push_back(p);
  }
  if (pc.empty()) parse_fail(path, "file contains no points");
  return pc;
}

void write_to_stream(const PointCloud& pc, std::ostream& out, CloudFormat format) {
  char buf[96];
  switch (format) {
    case CloudFormat::kPlyAscii:
    case CloudFormat::kPlyBinaryLE: {
      out << "ply\n";
      out << (format == CloudFormat::kPlyBinaryLE ? "format binary_little_endian 1.0\n"
                                                  : "format ascii 1.0\n");
      out << "element vertex " << pc.size() << "\n";
      // Declared type only matters for binary payloads; ascii is decimal text.
      const char* type_name = format == CloudFormat::kPlyBinaryLE ? "double" : "float";
      out << "property " << type_name << " x\n";
      out << "property " << type_name << " y\n";
      out << "property " << type_name << " z\n";
      out << "end_header\n";
      if (format == CloudFormat::kPlyBinaryLE) {
        for (const Vec3& p : pc.points)
          out.write(reinterpret_cast<const char*>(p.data()), 3 * sizeof(double));
      } else {
        for (const Vec3& p : pc.points) {
          std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p[0], p[1], p[2]);
          out << buf;
        }
      }
      break;
    }
    case CloudFormat::kXyzText:
      for (const Vec3& p : pc.points) {
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p[0], p[1], p[2]);
        out << buf;
      }
      break;
  }
}

}  // namespace

CloudFormat detect_cloud_format(const fs::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".xyz" || ext == ".txt") return CloudFormat::kXyzText;
  if (ext == ".ply") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": cannot open for reading");
    std::string magic, fmt_line;
    std::getline(in, magic);
    std::getline(in, fmt_line);
    if (fmt_line.find("binary_little_endian") != std::string::npos)
      return CloudFormat::kPlyBinaryLE;
    return CloudFormat::kPlyAscii;
  }
  throw DataError(path.string() + ": unknown point cloud extension '" + ext + "'");
}

PointCloud read_point_cloud(const fs::path& path, CloudFormat format) {
  switch (format) {
    case CloudFormat::kPlyAscii:
    case CloudFormat::kPlyBinaryLE:
      return read_ply(path);
    case CloudFormat::kXyzText:
      return read_xyz(path);
  }
  throw DataError("read_point_cloud: bad format enum");
}

PointCloud read_point_cloud(const fs::path& path) {
  return read_point_cloud(path, detect_cloud_format(path));
}

void write_point_cloud(const PointCloud& pc, const fs::path& path, CloudFormat format) {
  if (pc.empty()) throw DataError("write_point_cloud: empty point cloud");
  if (path.empty()) throw DataError("write_point_cloud: empty destination path");

  // Write into a sibling temp file first so failures leave no partial output.
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(path.string() + ": cannot open for writing");
    write_to_stream(pc, out, format);
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DataError(path.string() + ": write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError(path.string() + ": rename failed: " + ec.message());
  }
}

}  // namespace pcac
