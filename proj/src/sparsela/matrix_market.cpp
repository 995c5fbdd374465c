#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "spde/matrix_market.hpp"

namespace spde::sparse {
namespace {

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_matrix_market(std::ostream& out, const SparseSymMatrix& m) {
  const auto upper = m.upper_triplets();
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << m.dim() << ' ' << m.dim() << ' ' << upper.size() << '\n';
  // Upper triangle (i <= j) read as (j, i) is the lower triangle the format expects.
  for (const auto& t : upper) {
    out << t.col + 1 << ' ' << t.row + 1 << ' ' << format_value(t.value) << '\n';
  }
}

void write_matrix_market(const std::string& path, const SparseSymMatrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_matrix_market(out, m);
}

void write_matrix_market(std::ostream& out, const SparseMatrix& m) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  for (const auto& t : m.triplets()) {
    out << t.row + 1 << ' ' << t.col + 1 << ' ' << format_value(t.value) << '\n';
  }
}

SparseSymMatrix read_matrix_market_symmetric(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line.rfind("%%MatrixMarket matrix coordinate real symmetric", 0) != 0) {
    throw std::runtime_error("expected a real symmetric coordinate Matrix Market header");
  }
  while (std::getline(in, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream size_line(line);
  long rows = 0;
  long cols = 0;
  long nnz = 0;
  if (!(size_line >> rows >> cols >> nnz) || rows != cols || rows < 0 || nnz < 0) {
    throw std::runtime_error("malformed Matrix Market size line");
  }
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(nnz));
  for (long k = 0; k < nnz; ++k) {
    long i = 0;
    long j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v)) throw std::runtime_error("truncated Matrix Market entries");
    if (i < 1 || i > rows || j < 1 || j > cols) {
      throw std::runtime_error("Matrix Market entry out of range at entry " + std::to_string(k + 1));
    }
    // Symmetric storage keeps only the lower triangle.
    if (j > i) {
      throw std::runtime_error("upper-triangle entry in symmetric Matrix Market file at entry " +
                               std::to_string(k + 1));
    }
    t.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1), v});
  }
  return SparseSymMatrix::from_triplets(t, static_cast<Index>(rows));
}

SparseSymMatrix read_matrix_market_symmetric(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return read_matrix_market_symmetric(in);
}

}  // namespace spde::sparse
