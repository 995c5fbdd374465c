#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <thread>

#include "spde/cli.hpp"
#include "spde/fem.hpp"
#include "spde/fitter.hpp"
#include "spde/matern.hpp"
#include "spde/mesh.hpp"

namespace spde::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using mesh::Point2;
using sparse::Index;

// Thrown for bad input; mapped to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int resolve_threads(int n) {
  if (n > 0) return n;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

int mesh_dim(const mesh::Mesh& m) { return std::holds_alternative<mesh::Mesh1D>(m) ? 1 : 2; }

std::vector<Point2> read_locations(const CsvTable& t, int dim, const std::string& source) {
  if (!t.has("x")) throw InputError(source + ": missing column 'x'");
  if (dim == 2 && !t.has("y")) throw InputError(source + ": 2D mesh needs a 'y' column");
  const auto x = t.column("x");
  const auto y = dim == 2 ? t.column("y") : std::vector<double>(x.size(), 0.0);
  std::vector<Point2> p(x.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = {x[i], y[i]};
  return p;
}

Eigen::MatrixXd read_covariates(const CsvTable& t, const std::vector<std::string>& names,
                                const std::string& source) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (!t.has(names[j])) throw InputError(source + ": missing covariate column '" + names[j] + "'");
    const auto col = t.column(names[j]);
    for (std::size_t i = 0; i < col.size(); ++i) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return c;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  return f;
}

void write_xy(std::ostream& f, const Point2& p, int dim) {
  f << format_double(p.x);
  if (dim == 2) f << ',' << format_double(p.y);
}

std::string xy_header(int dim) { return dim == 2 ? "x,y" : "x"; }

// ---------------------------------------------------------------- mesh

struct MeshArgs {
  std::string points, out;
  double margin = 0.0;
  double spacing = 0.0;
  int intervals = 50;
  double extension = 0.2;
};

int cmd_mesh(const MeshArgs& a, std::ostream& out) {
  const auto t = read_csv_file(a.points);
  if (!t.has("x")) throw InputError(a.points + ": missing column 'x'");
  if (t.size() < 2) throw InputError(a.points + ": need at least two points");
  if (!t.has("y")) {
    const auto x = t.column("x");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const auto m = mesh::build_mesh_1d(*lo, *hi, a.intervals, a.extension);
    mesh::write_mesh(a.out, m);
    out << "mesh1d: " << m.n_knots() << " nodes, " << m.n_intervals() << " intervals\n";
    return kExitOk;
  }
  auto pts = read_locations(t, 2, a.points);
  if (a.margin < 0.0) throw InputError("--margin must be non-negative");
  if (a.margin > 0.0) {
    const double spacing = a.spacing > 0.0 ? a.spacing : a.margin;
    pts = mesh::extend_hull(pts, a.margin, spacing);
  }
  const auto m = mesh::delaunay_triangulate(pts);
  mesh::write_mesh(a.out, m);
  out << "mesh2d: " << m.n_nodes() << " nodes, " << m.n_triangles() << " triangles\n";
  return kExitOk;
}

// ---------------------------------------------------------------- fit

// Largest interval length (1D) or edge length (2D).
double max_spacing(const mesh::Mesh& m) {
  double h = 0.0;
  if (const auto* line = std::get_if<mesh::Mesh1D>(&m)) {
    const auto k = line->knots();
    for (std::size_t i = 1; i < k.size(); ++i) h = std::max(h, k[i] - k[i - 1]);
    return h;
  }
  const auto& tri = std::get<mesh::Mesh2D>(m);
  for (const auto& t : tri.triangles())
    for (int e = 0; e < 3; ++e) {
      const auto& a = tri.nodes()[t[e]];
      const auto& b = tri.nodes()[t[(e + 1) % 3]];
      h = std::max(h, std::hypot(a.x - b.x, a.y - b.y));
    }
  return h;
}

struct FitArgs {
  std::string data, mesh, family = "gaussian", covariates, out;
  int degree = 1;
  bool no_intercept = false;
  bool direct_g2 = false;
  bool verbose = false;
};

struct LoadedModel {
  fitter::Dataset data;
  std::unique_ptr<fitter::Model> model;
};

LoadedModel load_model(const std::string& data_path, const std::string& mesh_path, fitter::Family family,
                       int degree, const std::vector<std::string>& covariates, bool intercept, bool direct_g2) {
  const auto m = mesh::read_mesh(mesh_path);
  const int dim = mesh_dim(m);
  const auto t = read_csv_file(data_path);
  if (!t.has("z")) throw InputError(data_path + ": missing response column 'z'");
  LoadedModel lm;
  lm.data.dim = dim;
  lm.data.family = family;
  lm.data.locations = read_locations(t, dim, data_path);
  lm.data.y = t.column("z");
  lm.data.covariate_names = covariates;
  lm.data.covariates = read_covariates(t, covariates, data_path);
  fitter::ModelOptions opt;
  opt.degree = degree;
  opt.intercept = intercept;
  opt.g2 = direct_g2 ? fem::G2Construction::direct : fem::G2Construction::galerkin;
  lm.model = std::make_unique<fitter::Model>(fem::Basis::on(m, degree), lm.data, opt);
  return lm;
}

json theta_json(const fitter::FitResult& f, int dim) {
  const auto th = f.theta_hat();
  return {{"kappa", f.kappa},       {"tau", f.tau},         {"sigma2", f.sigma2},
          {"log_kappa", th[0]},     {"log_tau", th[1]},     {"log_sigma2", th[2]},
          {"range", matern::MaternParams{f.kappa, f.tau, dim}.range()}};
}

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  if (a.degree != 1 && a.degree != 2) throw InputError("--degree must be 1 or 2");
  const auto family = fitter::parse_family(a.family);
  const auto covs = split_names(a.covariates);
  const auto lm = load_model(a.data, a.mesh, family, a.degree, covs, !a.no_intercept, a.direct_g2);
  const auto& model = *lm.model;
  const auto fit = fitter::optimize_hyperparameters(model);
  if (a.verbose) {
    char line[128];
    for (std::size_t i = 0; i < fit.trace.size(); ++i) {
      const auto& [th, v] = fit.trace[i];
      std::snprintf(line, sizeof line, "eval %4zu  log_kappa %10.6f  log_tau %10.6f  reml %.10g\n", i + 1, th[0], th[1], v);
      err << line;
    }
  }

  json trace = json::array();
  for (const auto& [th, v] : fit.trace) trace.push_back({{"theta", {th[0], th[1]}}, {"reml", v}});
  std::vector<double> field(fit.beta.begin(), fit.beta.begin() + model.n_field());
  json fixed = json::object();
  const auto names = model.fixed_names();
  for (std::size_t j = 0; j < names.size(); ++j) fixed[names[j]] = fit.beta[model.n_field() + j];

  json j = {
      {"data", fs::absolute(a.data).string()},
      {"mesh", fs::absolute(a.mesh).string()},
      {"family", fitter::family_name(family)},
      {"dim", model.basis().dim()},
      {"degree", a.degree},
      {"intercept", !a.no_intercept},
      {"covariates", covs},
      {"g2", a.direct_g2 ? "direct" : "galerkin"},
      {"theta_hat", theta_json(fit, model.basis().dim())},
      {"theta_internal", {fit.theta_internal[0], fit.theta_internal[1]}},
      {"reml_value", fit.reml_value},
      {"converged", fit.converged},
      {"evaluations", fit.evaluations},
      {"n_obs", model.n_obs()},
      {"n_basis", model.n_field()},
      {"beta_hat", fit.beta},
      {"fixed_effects", fixed},
      {"trace", trace},
  };
  auto f = open_out(a.out);
  f << j.dump(2) << '\n';
  if (!f) throw InputError("failed writing " + a.out);

  char buf[256];
  std::snprintf(buf, sizeof buf, "%s fit: kappa = %.6g, tau = %.6g, sigma2 = %.6g, reml = %.10g, %d evaluations\n",
                fitter::family_name(family).c_str(), fit.kappa, fit.tau, fit.sigma2, fit.reml_value,
                fit.evaluations);
  out << buf;
  const double range = matern::MaternParams{fit.kappa, fit.tau, model.basis().dim()}.range();
  const double h = max_spacing(model.basis().mesh());
  if (range < 2.0 * h) {
    err << "warning: fitted range " << range << " is below twice the mesh spacing " << h
        << "; the estimates are limited by the basis resolution\n";
  }
  if (!fit.converged) {
    err << "warning: hyperparameter search did not converge; " << a.out << " is flagged converged=false\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

// ------------------------------------------------ predict / sample

struct StoredFit {
  json j;
  LoadedModel lm;
  fitter::FitResult fit;
};

StoredFit load_fit(const std::string& path, std::ostream& err) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  StoredFit s;
  try {
    in >> s.j;
    const auto& j = s.j;
    s.lm = load_model(j.at("data").get<std::string>(), j.at("mesh").get<std::string>(),
                      fitter::parse_family(j.at("family").get<std::string>()), j.at("degree").get<int>(),
                      j.at("covariates").get<std::vector<std::string>>(), j.at("intercept").get<bool>(),
                      j.at("g2").get<std::string>() == "direct");
    const auto ti = j.at("theta_internal").get<std::vector<double>>();
    if (ti.size() != 2) throw InputError(path + ": theta_internal must have two entries");
    s.fit = fitter::fit_at(*s.lm.model, {ti[0], ti[1]});
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  const auto stored = s.j.at("beta_hat").get<std::vector<double>>();
  if (stored.size() != s.fit.beta.size()) throw InputError(path + ": beta_hat does not match the model size");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < stored.size(); ++i) {
    diff = std::max(diff, std::abs(stored[i] - s.fit.beta[i]));
    scale = std::max(scale, std::abs(stored[i]));
  }
  if (diff > 1e-6 * std::max(1.0, scale)) {
    err << "warning: refit coefficients differ from " << path << " by " << diff
        << " (inputs changed since the fit?)\n";
  }
  return s;
}

struct Targets {
  std::vector<Point2> locations;
  Eigen::MatrixXd covariates;
};

Targets read_targets(const std::string& path, const StoredFit& s) {
  const auto t = read_csv_file(path);
  Targets out;
  out.locations = read_locations(t, s.lm.model->basis().dim(), path);
  out.covariates = read_covariates(t, s.lm.data.covariate_names, path);
  return out;
}

void warn_outside(std::span<const Index> outside, std::ostream& err) {
  if (outside.empty()) return;
  err << "warning: " << outside.size() << " location(s) outside the mesh; the field is taken as 0 there (rows";
  for (std::size_t i = 0; i < std::min<std::size_t>(outside.size(), 10); ++i) err << ' ' << outside[i] + 1;
  if (outside.size() > 10) err << " ...";
  err << ")\n";
}

struct PredictArgs {
  std::string fit, locations, out;
};

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  const auto s = load_fit(a.fit, err);
  const auto tg = read_targets(a.locations, s);
  const auto p = fitter::predict(*s.lm.model, s.fit, tg.locations, tg.covariates);
  warn_outside(p.outside, err);
  const int dim = s.lm.model->basis().dim();
  auto f = open_out(a.out);
  f << xy_header(dim) << ",mean,se,response_mean\n";
  for (std::size_t i = 0; i < tg.locations.size(); ++i) {
    write_xy(f, tg.locations[i], dim);
    f << ',' << format_double(p.mean[i]) << ',' << format_double(p.se[i]) << ','
      << format_double(p.response_mean[i]) << '\n';
  }
  out << "predicted " << tg.locations.size() << " locations\n";
  return kExitOk;
}

struct SampleArgs {
  std::string fit, minus, locations, out;
  int n = 100;
  std::uint64_t seed = 0;
  bool summary = false;
  int threads = 0;
};

int cmd_sample(const SampleArgs& a, std::ostream& out, std::ostream& err) {
  if (a.n < 1) throw InputError("--n must be positive");
  const int threads = resolve_threads(a.threads);
  const auto s = load_fit(a.fit, err);
  const auto tg = read_targets(a.locations, s);
  Eigen::MatrixXd draws = fitter::posterior_samples(*s.lm.model, s.fit, tg.locations, tg.covariates, a.n, a.seed, threads);
  if (!a.minus.empty()) {
    const auto s2 = load_fit(a.minus, err);
    if (s2.lm.model->basis().dim() != s.lm.model->basis().dim()) {
      throw InputError("--minus fit has a different dimension");
    }
    const auto tg2 = read_targets(a.locations, s2);
    // A distinct stream for the second fit so the two draws are independent.
    draws -= fitter::posterior_samples(*s2.lm.model, s2.fit, tg2.locations, tg2.covariates, a.n,
                                       a.seed ^ 0x9e3779b97f4a7c15ULL, threads);
  }
  const int dim = s.lm.model->basis().dim();
  auto f = open_out(a.out);
  if (a.summary) {
    f << xy_header(dim) << ",mean,sd\n";
    for (std::size_t i = 0; i < tg.locations.size(); ++i) {
      const auto col = draws.col(static_cast<Eigen::Index>(i));
      const double m = col.mean();
      const double sd = a.n > 1 ? std::sqrt((col.array() - m).square().sum() / (a.n - 1.0)) : 0.0;
      write_xy(f, tg.locations[i], dim);
      f << ',' << format_double(m) << ',' << format_double(sd) << '\n';
    }
  } else {
    f << "sample_id," << xy_header(dim) << ",value\n";
    for (int k = 0; k < a.n; ++k)
      for (std::size_t i = 0; i < tg.locations.size(); ++i) {
        f << k << ',';
        write_xy(f, tg.locations[i], dim);
        f << ',' << format_double(draws(k, static_cast<Eigen::Index>(i))) << '\n';
      }
  }
  out << "wrote " << a.n << " posterior draw(s) at " << tg.locations.size() << " locations\n";
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string mesh, locations, out;
  double kappa = 1.0, tau = 1.0;
  int n = 1;
  int degree = 1;
  std::uint64_t seed = 0;
  int threads = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.n < 1) throw InputError("--n must be positive");
  if (!(a.kappa > 0.0) || !(a.tau > 0.0)) throw InputError("--kappa and --tau must be positive");
  const auto m = mesh::read_mesh(a.mesh);
  const int dim = mesh_dim(m);
  const auto basis = fem::Basis::on(m, a.degree);
  const auto fem = fem::fem_matrices(basis);
  const auto q = matern::matern_precision(fem, a.kappa, a.tau);
  const auto locs = read_locations(read_csv_file(a.locations), dim, a.locations);
  const auto proj = fem::projection_matrix(basis, locs);
  warn_outside(proj.outside, err);
  const auto s = matern::simulate_field(q, proj.A, a.n, a.seed, resolve_threads(a.threads));
  auto f = open_out(a.out);
  f << "sample_id," << xy_header(dim) << ",value\n";
  for (int k = 0; k < a.n; ++k)
    for (std::size_t i = 0; i < locs.size(); ++i) {
      f << k << ',';
      write_xy(f, locs[i], dim);
      f << ',' << format_double(s.values(k, static_cast<Eigen::Index>(i))) << '\n';
    }
  out << "simulated " << a.n << " field(s) at " << locs.size() << " locations\n";
  return kExitOk;
}

// ---------------------------------------------------------------- check

struct CheckArgs {
  CheckOptions options;
  std::string fem_dir;
  int threads = 0;
};

int cmd_check(CheckArgs a, std::ostream& out) {
  a.options.threads = resolve_threads(a.threads);
  if (!a.fem_dir.empty()) {
    for (const auto& p : dump_fem_matrices(a.fem_dir)) out << "wrote " << p << '\n';
  }
  const auto rows = run_checks(a.options);
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  bool all = true;
  char buf[64];
  for (const auto& r : rows) {
    const char* status = r.informational ? "INFO" : (r.pass ? "PASS" : "FAIL");
    if (!r.informational && !r.pass) all = false;
    out << status << "  " << r.name << std::string(width - r.name.size() + 2, ' ');
    std::snprintf(buf, sizeof buf, "%11.3e", r.measured);
    out << buf;
    if (!r.informational) {
      std::snprintf(buf, sizeof buf, " <= %9.2e", r.tolerance);
      out << buf;
    } else {
      out << std::string(13, ' ');
    }
    if (!r.note.empty()) out << "  " << r.note;
    out << '\n';
  }
  out << (all ? "all checks passed\n" : "some checks FAILED\n");
  return all ? kExitOk : kExitInputError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Matern SPDE smoothing: meshes, fits, predictions, simulations and self-checks", "spde"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Report progress on standard error");

  MeshArgs mesh_args;
  auto* mesh_cmd = app.add_subcommand("mesh", "Build a mesh from a points CSV (x[, y])");
  mesh_cmd->add_option("--points", mesh_args.points, "Points CSV")->required();
  mesh_cmd->add_option("--out", mesh_args.out, "Output mesh file")->required();
  mesh_cmd->add_option("--margin", mesh_args.margin, "2D: width of the extension ring outside the hull");
  mesh_cmd->add_option("--spacing", mesh_args.spacing, "2D: spacing of ring points (default: margin)");
  mesh_cmd->add_option("--intervals", mesh_args.intervals, "1D: intervals over the data range")->capture_default_str();
  mesh_cmd->add_option("--extension", mesh_args.extension, "1D: extension on each side, fraction of the data range")
      ->capture_default_str();

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model with REML-estimated kappa and tau");
  fit_cmd->add_option("--data", fit_args.data, "Data CSV (x[, y], z[, covariates])")->required();
  fit_cmd->add_option("--mesh", fit_args.mesh, "Mesh file")->required();
  fit_cmd->add_option("--family", fit_args.family, "gaussian or poisson")->capture_default_str();
  fit_cmd->add_option("--degree", fit_args.degree, "1D spline degree (1 or 2)")->capture_default_str();
  fit_cmd->add_option("--covariates", fit_args.covariates, "Comma-separated covariate columns");
  fit_cmd->add_option("--out", fit_args.out, "Output fit.json")->required();
  fit_cmd->add_flag("--no-intercept", fit_args.no_intercept, "Drop the intercept column");
  fit_cmd->add_flag("--g2-direct", fit_args.direct_g2, "Use the direct second-derivative G2 (1D degree 2)");

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "Predict from a fit.json at new locations");
  predict_cmd->add_option("--fit", predict_args.fit, "fit.json from `fit`")->required();
  predict_cmd->add_option("--locations", predict_args.locations, "Locations CSV (x[, y][, covariates])")->required();
  predict_cmd->add_option("--out", predict_args.out, "Output CSV")->required();

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Draw Matern fields on a mesh");
  sim_cmd->add_option("--mesh", sim_args.mesh, "Mesh file")->required();
  sim_cmd->add_option("--kappa", sim_args.kappa, "Inverse range parameter")->required();
  sim_cmd->add_option("--tau", sim_args.tau, "Precision scale")->required();
  sim_cmd->add_option("--n", sim_args.n, "Number of fields")->capture_default_str();
  sim_cmd->add_option("--degree", sim_args.degree, "1D spline degree")->capture_default_str();
  sim_cmd->add_option("--seed", sim_args.seed, "Random seed")->capture_default_str();
  sim_cmd->add_option("--locations", sim_args.locations, "Locations CSV (x[, y])")->required();
  sim_cmd->add_option("--out", sim_args.out, "Output CSV")->required();
  sim_cmd->add_option("--threads", sim_args.threads, "Worker threads, 0 = auto")->capture_default_str();

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Posterior draws of the linear predictor from a fit.json");
  sample_cmd->add_option("--fit", sample_args.fit, "fit.json from `fit`")->required();
  sample_cmd->add_option("--minus", sample_args.minus, "Second fit.json; output the difference of draws");
  sample_cmd->add_option("--locations", sample_args.locations, "Locations CSV")->required();
  sample_cmd->add_option("--n", sample_args.n, "Number of draws")->capture_default_str();
  sample_cmd->add_option("--seed", sample_args.seed, "Random seed")->capture_default_str();
  sample_cmd->add_option("--out", sample_args.out, "Output CSV")->required();
  sample_cmd->add_flag("--summary", sample_args.summary, "Write per-location mean and sd instead of draws");
  sample_cmd->add_option("--threads", sample_args.threads, "Worker threads, 0 = auto")->capture_default_str();

  CheckArgs check_args;
  auto* check_cmd = app.add_subcommand("check", "Run the built-in verification suite");
  check_cmd->add_option("--grid-step", check_args.options.grid_step, "Convolution grid step")->capture_default_str();
  check_cmd->add_option("--fem", check_args.fem_dir, "Directory to dump C/G1/G2 as Matrix Market");
  check_cmd->add_option("--seed", check_args.options.seed, "Random seed")->capture_default_str();
  check_cmd->add_option("--threads", check_args.threads, "Worker threads, 0 = auto")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*mesh_cmd) return cmd_mesh(mesh_args, out);
    fit_args.verbose = verbose;
    if (*fit_cmd) return cmd_fit(fit_args, out, err);
    if (*predict_cmd) return cmd_predict(predict_args, out, err);
    if (*sim_cmd) return cmd_simulate(sim_args, out, err);
    if (*sample_cmd) return cmd_sample(sample_args, out, err);
    if (*check_cmd) return cmd_check(check_args, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace spde::cli
