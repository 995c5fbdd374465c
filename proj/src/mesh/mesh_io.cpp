#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "spde/mesh.hpp"

namespace spde::mesh {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void expect_word(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) {
    throw MeshError("mesh file: expected '" + word + "', got '" + got + "'");
  }
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw MeshError(std::string("mesh file: cannot read ") + what);
  return v;
}

}  // namespace

void write_mesh(std::ostream& out, const Mesh& mesh) {
  if (const auto* m1 = std::get_if<Mesh1D>(&mesh)) {
    out << "mesh1d\n";
    out << "nodes " << m1->n_knots() << '\n';
    for (const double x : m1->knots()) out << fmt(x) << '\n';
    return;
  }
  const auto& m2 = std::get<Mesh2D>(mesh);
  out << "mesh2d\n";
  out << "nodes " << m2.n_nodes() << '\n';
  for (const auto& p : m2.nodes()) out << fmt(p.x) << ' ' << fmt(p.y) << '\n';
  out << "triangles " << m2.n_triangles() << '\n';
  for (const auto& t : m2.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void write_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot open for writing: " + path);
  write_mesh(out, mesh);
}

Mesh read_mesh(std::istream& in) {
  std::string kind;
  if (!(in >> kind)) throw MeshError("mesh file: empty");
  if (kind == "mesh1d") {
    expect_word(in, "nodes");
    const auto n = read_value<long>(in, "node count");
    if (n < 0) throw MeshError("mesh file: negative node count");
    std::vector<double> knots(static_cast<std::size_t>(n));
    for (auto& x : knots) x = read_value<double>(in, "node coordinate");
    return Mesh1D(std::move(knots));
  }
  if (kind != "mesh2d") throw MeshError("mesh file: unknown kind '" + kind + "'");
  expect_word(in, "nodes");
  const auto n = read_value<long>(in, "node count");
  if (n < 0) throw MeshError("mesh file: negative node count");
  std::vector<Point2> nodes(static_cast<std::size_t>(n));
  for (auto& p : nodes) {
    p.x = read_value<double>(in, "node x");
    p.y = read_value<double>(in, "node y");
  }
  expect_word(in, "triangles");
  const auto m = read_value<long>(in, "triangle count");
  if (m < 0) throw MeshError("mesh file: negative triangle count");
  std::vector<Triangle> tris(static_cast<std::size_t>(m));
  for (auto& t : tris) {
    for (auto& v : t) v = static_cast<Index>(read_value<long>(in, "triangle vertex"));
  }
  return Mesh2D(std::move(nodes), std::move(tris));
}

Mesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file: " + path);
  return read_mesh(in);
}

}  // namespace spde::mesh
