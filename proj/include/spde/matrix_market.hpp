#pragma once

#include <iosfwd>
#include <string>

#include "spde/sparse.hpp"

namespace spde::sparse {

// "%%MatrixMarket matrix coordinate real symmetric", 1-based indices, lower
// triangle entries (row >= col), values printed with 17 significant digits.
void write_matrix_market(std::ostream& out, const SparseSymMatrix& m);
void write_matrix_market(const std::string& path, const SparseSymMatrix& m);

// General (rectangular) variant: "... coordinate real general".
void write_matrix_market(std::ostream& out, const SparseMatrix& m);

SparseSymMatrix read_matrix_market_symmetric(std::istream& in);
SparseSymMatrix read_matrix_market_symmetric(const std::string& path);

}  // namespace spde::sparse
