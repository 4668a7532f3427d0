#include "ipr/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ipr {

namespace {

ConvexMesh finish_mesh(ConvexMesh mesh) {
  mesh.face_normals.clear();
  mesh.face_normals.reserve(mesh.faces.size());
  for (const auto& tri : mesh.faces) {
    Vec3 n = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                 .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    double len = n.norm();
    mesh.face_normals.push_back(len > 1e-30 ? Vec3(n / len) : Vec3::UnitZ());
  }
  const Vec3 c0 = mesh.centroid();
  double vol6 = 0.0;
  for (const auto& tri : mesh.faces) {
    Vec3 a = mesh.vertices[tri[0]] - c0;
    Vec3 b = mesh.vertices[tri[1]] - c0;
    Vec3 c = mesh.vertices[tri[2]] - c0;
    vol6 += a.dot(b.cross(c));
  }
  mesh.volume = vol6 / 6.0;
  return mesh;
}

}  // namespace

void save_obj(std::ostream& os, const ConvexMesh& mesh) {
  os.precision(17);
  for (const auto& v : mesh.vertices)
    os << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces)
    os << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

ConvexMesh load_obj(std::istream& is) {
  ConvexMesh mesh;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      ls >> v.x() >> v.y() >> v.z();
      if (!ls) throw IoError("obj: bad vertex line");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      std::string tok;
      for (int k = 0; k < 3; ++k) {
        if (!(ls >> tok)) throw IoError("obj: bad face line");
        f[k] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
        if (f[k] < 0) throw IoError("obj: face index out of range");
      }
      mesh.faces.push_back(f);
    }
  }
  for (const auto& f : mesh.faces)
    for (int k : f)
      if (k >= int(mesh.vertices.size())) throw IoError("obj: face index out of range");
  return finish_mesh(std::move(mesh));
}

void save_obj_file(const std::string& path, const ConvexMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for write: " + path);
  save_obj(os, mesh);
}

ConvexMesh load_obj_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  return load_obj(is);
}

void save_ply(std::ostream& os, const std::vector<ColoredPoint>& cloud) {
  os.precision(17);
  os << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
     << "\nproperty float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n";
  for (const auto& p : cloud) {
    auto ch = [](double c) { return int(std::lround(std::clamp(c, 0.0, 1.0) * 255.0)); };
    os << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' '
       << ch(p.color.x()) << ' ' << ch(p.color.y()) << ' ' << ch(p.color.z()) << '\n';
  }
}

std::vector<ColoredPoint> load_ply(std::istream& is) {
  std::string line;
  size_t count = 0;
  bool color_is_uchar = false;
  bool in_header = true;
  std::vector<std::string> props;
  if (!std::getline(is, line) || line.substr(0, 3) != "ply")
    throw IoError("ply: missing magic");
  while (in_header && std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "element") {
      std::string what;
      ls >> what >> count;
      if (what != "vertex") throw IoError("ply: only vertex elements supported");
    } else if (tag == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
      if ((name == "red" || name == "r") && (type == "uchar" || type == "uint8"))
        color_is_uchar = true;
    } else if (tag == "end_header") {
      in_header = false;
    } else if (tag == "format" && line.find("ascii") == std::string::npos) {
      throw IoError("ply: only ascii format supported");
    }
  }
  if (in_header) throw IoError("ply: truncated header");

  std::vector<ColoredPoint> cloud;
  cloud.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    if (!std::getline(is, line)) throw IoError("ply: truncated body");
    std::istringstream ls(line);
    ColoredPoint p;
    double r = 0, g = 0, b = 0;
    ls >> p.position.x() >> p.position.y() >> p.position.z() >> r >> g >> b;
    if (!ls && props.size() > 3) throw IoError("ply: bad vertex line");
    p.color = color_is_uchar ? Vec3(r / 255.0, g / 255.0, b / 255.0) : Vec3(r, g, b);
    cloud.push_back(p);
  }
  return cloud;
}

void save_ply_file(const std::string& path, const std::vector<ColoredPoint>& cloud) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for write: " + path);
  save_ply(os, cloud);
}

std::vector<ColoredPoint> load_ply_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  return load_ply(is);
}

void save_pgm16(std::ostream& os, const Image16& img) {
  os << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  for (uint16_t v : img.pixels) {
    os.put(char(v >> 8));
    os.put(char(v & 0xff));
  }
}

Image16 load_pgm16(std::istream& is) {
  std::string magic;
  is >> magic;
  if (magic != "P5") throw IoError("pgm: expected P5");
  int maxval = 0;
  Image16 img;
  is >> img.width >> img.height >> maxval;
  if (!is || img.width <= 0 || img.height <= 0) throw IoError("pgm: bad dims");
  if (maxval != 65535) throw IoError("pgm: expected 16-bit maxval");
  is.get();  // single whitespace after maxval
  img.pixels.resize(size_t(img.width) * size_t(img.height));
  for (auto& v : img.pixels) {
    int hi = is.get(), lo = is.get();
    if (hi < 0 || lo < 0) throw IoError("pgm: truncated");
    v = uint16_t((hi << 8) | lo);
  }
  return img;
}

void save_pgm16_file(const std::string& path, const Image16& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for write: " + path);
  save_pgm16(os, img);
}

Image16 load_pgm16_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  return load_pgm16(is);
}

void save_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os.precision(17);
  os << "frame,body_id,qx,qy,qz,qw,tx,ty,tz\n";
  for (const auto& r : rows)
    os << r.frame << ',' << r.body_id << ',' << r.rotation.x() << ','
       << r.rotation.y() << ',' << r.rotation.z() << ',' << r.rotation.w() << ','
       << r.translation.x() << ',' << r.translation.y() << ','
       << r.translation.z() << '\n';
}

std::vector<TraceRow> load_trace_csv(std::istream& is) {
  std::vector<TraceRow> rows;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    TraceRow r;
    ls >> r.frame >> r.body_id >> r.rotation.x() >> r.rotation.y() >>
        r.rotation.z() >> r.rotation.w() >> r.translation.x() >>
        r.translation.y() >> r.translation.z();
    if (!ls) throw IoError("trace csv: bad row");
    rows.push_back(r);
  }
  return rows;
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for write: " + path);
  os << content;
}

}  // namespace ipr
