#pragma once

// Command-line front end: CSV ingestion, the subcommands and the
// verification suite behind `spde check`.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace spde::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNotConverged = 2;

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric CSV with a header row. Blank lines and lines starting with '#'
/// are skipped; errors name the source and 1-based line number.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;

  std::size_t size() const { return rows.size(); }
  bool has(const std::string& name) const { return index_of(name) >= 0; }
  int index_of(const std::string& name) const;
  /// Throws CsvError when the column is absent.
  std::vector<double> column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in, const std::string& source = "<input>");
CsvTable read_csv_file(const std::string& path);

/// Print doubles so they parse back to the same value.
std::string format_double(double v);

struct CheckOptions {
  double grid_step = 1e-3;
  double grid_halfwidth = 20.0;
  int n_samples = 20000;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct CheckRow {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool informational = false;  // reported, never fails the suite
  std::string note;
};

/// Runs the self-checks (precision factorization, Green's function
/// convolution, dense-oracle equivalence, simulation fidelity).
std::vector<CheckRow> run_checks(const CheckOptions& options);

/// Writes C, G1 and G2 (Galerkin and, when it exists, direct) of the default
/// check meshes to `dir` as Matrix Market files; returns the paths written.
std::vector<std::string> dump_fem_matrices(const std::string& dir);

/// Entry point. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spde::cli
