#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ipr/types.hpp"

namespace ipr {

// ASCII OBJ, vertices and triangular faces only, 1-based indices.
void save_obj(std::ostream& os, const ConvexMesh& mesh);
ConvexMesh load_obj(std::istream& is);
void save_obj_file(const std::string& path, const ConvexMesh& mesh);
ConvexMesh load_obj_file(const std::string& path);

// ASCII PLY subset: x y z followed by red green blue (uchar or float).
void save_ply(std::ostream& os, const std::vector<ColoredPoint>& cloud);
std::vector<ColoredPoint> load_ply(std::istream& is);
void save_ply_file(const std::string& path, const std::vector<ColoredPoint>& cloud);
std::vector<ColoredPoint> load_ply_file(const std::string& path);

struct Image16 {
  int width = 0;
  int height = 0;
  std::vector<uint16_t> pixels;  // row-major, x + width*y
  uint16_t at(int x, int y) const { return pixels[size_t(x) + size_t(width) * size_t(y)]; }
  uint16_t& at(int x, int y) { return pixels[size_t(x) + size_t(width) * size_t(y)]; }
};

// Binary PGM (P5), maxval 65535, big-endian sample order.
void save_pgm16(std::ostream& os, const Image16& img);
Image16 load_pgm16(std::istream& is);
void save_pgm16_file(const std::string& path, const Image16& img);
Image16 load_pgm16_file(const std::string& path);

struct TraceRow {
  int frame = 0;
  int body_id = 0;
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();
};

// CSV columns: frame,body_id,qx,qy,qz,qw,tx,ty,tz
void save_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows);
std::vector<TraceRow> load_trace_csv(std::istream& is);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace ipr
