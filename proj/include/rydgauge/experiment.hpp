#pragma once

// Batch experiments driven by an INI-style config: geometry solves, sector
// enumeration, lambda sweeps, adiabatic evolution and the invariant suite.
// Every output file starts with the config hash; a timestamp line follows
// unless disabled.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "rydgauge/adiabatic.hpp"
#include "rydgauge/basis.hpp"
#include "rydgauge/errors.hpp"
#include "rydgauge/gauge.hpp"
#include "rydgauge/geometry.hpp"
#include "rydgauge/hamiltonian.hpp"
#include "rydgauge/lattice.hpp"
#include "rydgauge/observables.hpp"
#include "rydgauge/solver.hpp"

namespace rydgauge {

inline constexpr int kConfigSchema = 1;

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_usage = 2, exit_numerical = 3 };

struct ExperimentConfig {
  std::string command;
  LatticeSpec lattice = LatticeSpec::periodic_ladder(6);

  // geometry
  double eta = 0.38;
  double theta = 0.0;
  double d_y = 0.0;
  double c6 = 1.0;
  std::string geometry_file;

  // model
  std::string model = "dual_rk";
  double J = 1.0;
  double delta = 0.0;
  double pinning = 0.0;
  std::vector<Site> pinning_sites = default_pinning_sites();
  double penalty = 0.0;  ///< > 0: full space plus penalty instead of the sector

  std::vector<double> lambdas;

  LanczosOptions solver{};
  PulseSpec pulse{};
  AdiabaticOptions adiabatic{};

  std::string out_dir = ".";
  int threads = 1;
  bool timestamp = true;

  std::string canonical;  ///< normalized key=value text the hash is taken over
};

// ------------------------------------------------------------- parsing

namespace detail {

using Schema = std::map<std::string, std::set<std::string>>;

inline const Schema& config_schema() {
  static const Schema s = {
      {"", {"schema", "command"}},
      {"lattice", {"kind", "nx", "ny"}},
      {"geometry", {"eta", "theta", "d_y", "c6", "file"}},
      {"model", {"name", "J", "delta", "pinning", "pinning_sites", "penalty"}},
      {"sweep", {"lambda", "lambda_min", "lambda_max", "lambda_step"}},
      {"solver", {"tol", "max_iter", "krylov_dim", "seed", "threads"}},
      {"pulse", {"J", "t_f", "dt", "delta", "record_every", "krylov_dim", "step_tol"}},
      {"output", {"dir", "timestamp"}},
  };
  return s;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (trim(v.substr(pos)).empty()) return i;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

inline std::string config_hash(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << detail::fnv1a(c.canonical);
  return os.str();
}

/// Parses and validates a config. Unknown sections or keys are rejected.
inline ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }

  // flatten and check against the schema
  std::map<std::string, std::string> kv;
  const auto& schema = detail::config_schema();
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      if (!schema.at("").count(name)) throw ConfigError("unknown top-level key '" + name + "'");
      kv[name] = detail::trim(node.data());
      continue;
    }
    auto sec = schema.find(name);
    if (sec == schema.end() || name.empty()) throw ConfigError("unknown section [" + name + "]");
    for (const auto& [key, leaf] : node) {
      if (!sec->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name + "]");
      kv[name + "." + key] = detail::trim(leaf.data());
    }
  }

  ExperimentConfig c;
  auto has = [&](const std::string& k) { return kv.count(k) > 0; };
  auto num = [&](const std::string& k, double def) { return has(k) ? detail::parse_double(k, kv[k]) : def; };
  auto integer = [&](const std::string& k, long long def) { return has(k) ? detail::parse_int(k, kv[k]) : def; };

  if (has("schema"))
    detail::require(detail::parse_int("schema", kv["schema"]) == kConfigSchema,
                    "schema: unsupported version " + kv["schema"]);
  if (has("command")) c.command = kv["command"];

  const std::string kind = has("lattice.kind") ? kv["lattice.kind"] : "ladder";
  const int nx = static_cast<int>(integer("lattice.nx", 6));
  if (kind == "ladder") {
    detail::require(integer("lattice.ny", 2) == 2, "lattice.ny: ladders have ny = 2");
    detail::require(nx >= 2 && nx % 2 == 0 && nx <= 32, "lattice.nx: ladder needs an even nx in [2, 32]");
    c.lattice = LatticeSpec::periodic_ladder(nx);
  } else if (kind == "square") {
    const int ny = static_cast<int>(integer("lattice.ny", nx));
    detail::require(nx >= 1 && ny >= 1 && nx * ny <= 64, "lattice: square needs 1 <= nx*ny <= 64");
    c.lattice = LatticeSpec::open_square(nx, ny);
  } else if (kind == "chain") {
    detail::require(integer("lattice.ny", 1) == 1, "lattice.ny: chains have ny = 1");
    detail::require(nx >= 1 && nx <= 64, "lattice.nx: chain needs 1 <= nx <= 64");
    c.lattice = LatticeSpec::chain(nx);
  } else {
    throw ConfigError("lattice.kind: expected ladder, square or chain, got '" + kind + "'");
  }

  c.eta = num("geometry.eta", c.eta);
  c.theta = num("geometry.theta", c.theta);
  c.d_y = num("geometry.d_y", c.d_y);
  c.c6 = num("geometry.c6", c.c6);
  if (has("geometry.file")) c.geometry_file = kv["geometry.file"];
  detail::require(c.eta > 0.0 && c.eta < 1.0, "geometry.eta: expected 0 < eta < 1");
  detail::require(c.c6 > 0.0, "geometry.c6: must be positive");
  detail::require(c.d_y >= 0.0 && c.d_y < 0.5, "geometry.d_y: expected 0 <= d_y < 0.5");

  if (has("model.name")) c.model = kv["model.name"];
  detail::require(c.model == "dual_rk" || c.model == "original_rk" || c.model == "rydberg_rk" ||
                      c.model == "pxp",
                  "model.name: expected dual_rk, original_rk, rydberg_rk or pxp");
  detail::require((c.model == "pxp") == (kind == "chain"), "model.name: pxp runs on chains, and only pxp does");
  c.J = num("model.J", c.J);
  detail::require(c.J > 0.0, "model.J: must be positive");
  c.delta = num("model.delta", c.delta);
  c.pinning = num("model.pinning", c.pinning);
  c.penalty = num("model.penalty", c.penalty);
  detail::require(c.penalty >= 0.0, "model.penalty: must be non-negative");
  if (has("model.pinning_sites")) {
    c.pinning_sites.clear();
    for (const auto& item : detail::split(kv["model.pinning_sites"], ';')) {
      if (item.empty()) continue;
      const auto xy = detail::split(item, ',');
      detail::require(xy.size() == 2, "model.pinning_sites: expected 'x,y;x,y;...'");
      c.pinning_sites.push_back({static_cast<int>(detail::parse_int("model.pinning_sites", xy[0])),
                                 static_cast<int>(detail::parse_int("model.pinning_sites", xy[1]))});
    }
  }

  if (has("sweep.lambda")) {
    for (const auto& item : detail::split(kv["sweep.lambda"], ','))
      if (!item.empty()) c.lambdas.push_back(detail::parse_double("sweep.lambda", item));
  } else if (has("sweep.lambda_min") || has("sweep.lambda_max") || has("sweep.lambda_step")) {
    const double lo = num("sweep.lambda_min", 0.0), hi = num("sweep.lambda_max", 0.0);
    const double step = num("sweep.lambda_step", 0.0);
    detail::require(step > 0.0 && hi >= lo, "sweep: need lambda_min <= lambda_max and lambda_step > 0");
    const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
    detail::require(n < 100000, "sweep: too many lambda points");
    for (long long i = 0; i <= n; ++i) c.lambdas.push_back(lo + static_cast<double>(i) * step);
  }

  c.solver.tol = num("solver.tol", c.solver.tol);
  c.solver.max_iter = static_cast<int>(integer("solver.max_iter", c.solver.max_iter));
  c.solver.krylov_dim = static_cast<int>(integer("solver.krylov_dim", c.solver.krylov_dim));
  c.solver.seed = static_cast<std::uint64_t>(integer("solver.seed", static_cast<long long>(c.solver.seed)));
  c.threads = static_cast<int>(integer("solver.threads", c.threads));
  detail::require(c.solver.tol > 0.0 && c.solver.tol < 1e-2, "solver.tol: expected 0 < tol < 1e-2");
  detail::require(c.solver.max_iter > 0, "solver.max_iter: must be positive");
  detail::require(c.solver.krylov_dim >= 4, "solver.krylov_dim: must be at least 4");
  detail::require(c.threads >= 1 && c.threads <= 256, "solver.threads: expected 1..256");

  c.pulse.J = num("pulse.J", c.pulse.J);
  c.pulse.t_f = num("pulse.t_f", 40.0 / c.pulse.J);
  c.pulse.dt = num("pulse.dt", 0.01 / c.pulse.J);
  c.adiabatic.delta = num("pulse.delta", c.adiabatic.delta);
  c.adiabatic.record_every = static_cast<int>(integer("pulse.record_every", c.adiabatic.record_every));
  c.adiabatic.evolve.krylov_dim = static_cast<int>(integer("pulse.krylov_dim", c.adiabatic.evolve.krylov_dim));
  c.adiabatic.evolve.step_tol = num("pulse.step_tol", c.adiabatic.evolve.step_tol);
  detail::require(c.pulse.J > 0.0, "pulse.J: must be positive");
  detail::require(c.pulse.t_f > 0.0, "pulse.t_f: must be positive");
  detail::require(c.pulse.dt > 0.0 && c.pulse.dt <= c.pulse.t_f, "pulse.dt: expected 0 < dt <= t_f");
  detail::require(c.adiabatic.record_every >= 1, "pulse.record_every: must be positive");
  detail::require(c.adiabatic.evolve.krylov_dim >= 2, "pulse.krylov_dim: must be at least 2");

  if (has("output.dir")) c.out_dir = kv["output.dir"];
  if (has("output.timestamp")) c.timestamp = detail::parse_bool("output.timestamp", kv["output.timestamp"]);

  std::ostringstream canon;
  for (const auto& [k, v] : kv) canon << k << '=' << v << '\n';
  c.canonical = canon.str();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  return parse_config(in);
}

/// Command-line overrides enter the hash as well.
inline void apply_overrides(ExperimentConfig& c, std::optional<std::string> out,
                            std::optional<std::uint64_t> seed, std::optional<int> threads,
                            bool no_timestamp) {
  if (out) c.out_dir = *out;
  if (seed) {
    c.solver.seed = *seed;
    c.adiabatic.lanczos.seed = *seed;
    c.canonical += "override.seed=" + std::to_string(*seed) + '\n';
  }
  if (threads) {
    if (*threads < 1 || *threads > 256) throw ConfigError("--threads: expected 1..256");
    c.threads = *threads;
  }
  if (no_timestamp) c.timestamp = false;
}

// --------------------------------------------------------------- output

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

namespace detail {

inline std::filesystem::path output_path(const ExperimentConfig& c, const std::string& name) {
  std::filesystem::path dir(c.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + c.out_dir + "': " + ec.message());
  return dir / name;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + p.string() + "'");
  return os;
}

}  // namespace detail

/// CSV with provenance comment lines ahead of the header row.
inline void write_csv_preamble(std::ostream& os, const ExperimentConfig& c) {
  os << "# config_hash=" << config_hash(c) << '\n';
  if (c.timestamp) os << "# generated=" << utc_timestamp() << '\n';
}

inline void add_provenance(nlohmann::json& j, const ExperimentConfig& c) {
  j["config_hash"] = config_hash(c);
  if (c.timestamp) j["generated"] = utc_timestamp();
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  auto os = detail::open_output(p);
  os << j.dump(2) << '\n';
}

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

// -------------------------------------------------------------- runners

struct RunResult {
  int exit_code = exit_ok;
  std::vector<std::string> files;
  std::string summary;
};

namespace detail {

inline ArrayKind array_kind_of(const ExperimentConfig& c) {
  if (c.lattice.kind == LatticeKind::periodic_ladder) return ArrayKind::ladder;
  if (c.lattice.kind == LatticeKind::open_square) return ArrayKind::square;
  throw ConfigError("geometry needs a ladder or square lattice");
}

inline BlockadeSolution solve_geometry(const ExperimentConfig& c) {
  if (array_kind_of(c) == ArrayKind::ladder) return solve_ladder_geometry(c.eta, c.c6);
  return solve_square_geometry(c.eta, c.theta, c.d_y, c.c6);
}

inline BlockadeSolution geometry_for(const ExperimentConfig& c) {
  if (c.geometry_file.empty()) return solve_geometry(c);
  std::ifstream in(c.geometry_file);
  if (!in) throw ConfigError("geometry file '" + c.geometry_file + "' not found");
  nlohmann::json j;
  try {
    in >> j;
    auto sol = blockade_solution_from_json(j);
    if (sol.geometry.kind != array_kind_of(c))
      throw ConfigError("geometry file kind does not match the lattice");
    return sol;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("geometry file '" + c.geometry_file + "': " + e.what());
  }
}

}  // namespace detail

inline RunResult run_geometry(const ExperimentConfig& c) {
  const auto sol = detail::solve_geometry(c);
  auto j = to_json(sol);
  add_provenance(j, c);
  const auto path = detail::output_path(c, "geometry.json");
  write_json(path, j);
  std::ostringstream os;
  os << to_string(sol.geometry.kind) << " |eta|=" << sol.geometry.eta.norm() << ": a_y=" << fmt(sol.a_y)
     << " G=" << fmt(sol.G) << " Lambda=" << fmt(sol.Lambda) << " (C6/a_x^6)";
  return {exit_ok, {path.string()}, os.str()};
}

inline RunResult run_sector(const ExperimentConfig& c) {
  const Lattice lat(c.lattice);
  const Basis b = enumerate_sector(lat);
  const auto bin = detail::output_path(c, "sector.bin");
  write_basis_binary(b, bin.string());
  nlohmann::json j = {{"lattice", to_string(c.lattice)},
                      {"dimension", b.size()},
                      {"reference", b[0]},
                      {"binary", bin.filename().string()}};
  if (lat.has_links()) {
    const Basis lb = enumerate_link_sector(lat);
    j["link_dimension"] = lb.size();
  }
  if (b.size() <= 4096) j["states"] = b.states();
  add_provenance(j, c);
  const auto js = detail::output_path(c, "sector.json");
  write_json(js, j);
  return {exit_ok, {bin.string(), js.string()},
          to_string(c.lattice) + ": sector dimension " + std::to_string(b.size())};
}

struct SweepRow {
  double lambda = 0.0;
  double E0 = 0.0;
  double s00z = 0.0;
  double spipiz = 0.0;
  double spipix = 0.0;
  double flippable = 0.0;
  int degeneracy = 1;
  StructureFactorReport report;
  RvbsDiagnostic rvbs;
};

/// Ground state and observables at one lambda. The sector basis (dual
/// picture) is shared between points.
inline SweepRow sweep_point(const ExperimentConfig& c, const Lattice& lat, const Basis& basis,
                            const Basis* link_basis, double lambda) {
  SparseOperator H;
  const Basis* obs_basis = &basis;
  Basis mapped;
  if (c.model == "original_rk") {
    H = build_original_rk(lat, *link_basis, c.J, lambda);
    std::vector<std::uint64_t> d;
    d.reserve(link_basis->size());
    for (auto s : link_basis->states()) d.push_back(to_dual(lat, LinkConfig{s}).bits);
    mapped = Basis(lat.spec(), BasisPicture::dual, std::move(d));
    obs_basis = &mapped;
  } else if (c.model == "rydberg_rk") {
    // lambda = Lambda / J
    H = build_rydberg_rk(lat, basis, c.J, lambda * c.J, c.delta);
  } else if (c.model == "pxp") {
    H = build_pxp_chain(lat, basis, c.J, lambda);
  } else {
    H = build_dual_rk(lat, basis, c.J, lambda);
  }
  if (c.model != "original_rk") {
    if (c.penalty > 0.0) H = add_penalty(lat, basis, H, c.penalty * c.J);
    if (c.pinning != 0.0) H = add_pinning(lat, basis, H, c.pinning * c.J, c.pinning_sites);
  }
  LanczosOptions opt = c.solver;
  opt.count_degeneracy = false;
  const auto gs = ground_state(H, opt);
  SweepRow r;
  r.lambda = lambda;
  r.E0 = gs.energy;
  r.report = structure_factor_report(lat, *obs_basis, gs.vector);
  r.s00z = r.report.s00(Axis::z);
  r.spipiz = r.report.spipi(Axis::z);
  r.spipix = r.report.spipi(Axis::x);
  r.flippable = flippable_count(lat, *obs_basis, gs.vector);
  r.rvbs = rvbs_signature(r.report);
  return r;
}

/// Points are handed out through a shared counter; rows land in lambda order.
inline std::vector<std::optional<SweepRow>> run_sweep_points(const ExperimentConfig& c,
                                                             std::vector<std::string>& failures) {
  const Lattice lat(c.lattice);
  Basis basis;
  std::optional<Basis> link_basis;
  if (c.model == "original_rk") {
    link_basis = enumerate_link_sector(lat);
  } else if (c.penalty > 0.0) {
    basis = Basis::full(lat.spec(), lat.num_spins());
  } else {
    basis = enumerate_sector(lat);
  }
  const std::size_t n = c.lambdas.size();
  std::vector<std::optional<SweepRow>> rows(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        rows[i] = sweep_point(c, lat, basis, link_basis ? &*link_basis : nullptr, c.lambdas[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int nt = std::max(1, std::min<int>(c.threads, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < n; ++i)
    if (!rows[i]) failures.push_back("lambda=" + fmt(c.lambdas[i]) + ": " + errors[i]);
  return rows;
}

inline RunResult run_sweep(const ExperimentConfig& c) {
  if (c.lambdas.empty()) throw ConfigError("sweep: empty lambda grid ([sweep] lambda or lambda_min/max/step)");
  std::vector<std::string> failures;
  const auto rows = run_sweep_points(c, failures);

  const auto csv_path = detail::output_path(c, "sweep.csv");
  auto csv = detail::open_output(csv_path);
  write_csv_preamble(csv, c);
  csv << "lambda,E0,S00z,Spipiz,Spipix,flippable\n";
  const auto sf_path = detail::output_path(c, "structure_factors.csv");
  auto sf = detail::open_output(sf_path);
  write_csv_preamble(sf, c);
  sf << "lambda,mu,kx,ky,value\n";
  nlohmann::json points = nlohmann::json::array();
  for (const auto& r : rows) {
    if (!r) continue;
    csv << fmt(r->lambda) << ',' << fmt(r->E0) << ',' << fmt(r->s00z) << ',' << fmt(r->spipiz) << ','
        << fmt(r->spipix) << ',' << fmt(r->flippable) << '\n';
    for (const auto& e : r->report.entries)
      if (!e.connected)
        sf << fmt(r->lambda) << ',' << to_char(e.mu) << ',' << fmt(e.k.kx) << ',' << fmt(e.k.ky) << ','
           << fmt(e.value) << '\n';
    points.push_back({{"lambda", r->lambda},
                      {"E0", r->E0},
                      {"rvbs", to_json(r->rvbs)},
                      {"structure_factors", to_json(r->report)}});
  }
  nlohmann::json j = {{"lattice", to_string(c.lattice)}, {"model", c.model}, {"points", points},
                      {"failures", failures}};
  add_provenance(j, c);
  const auto js_path = detail::output_path(c, "sweep.json");
  write_json(js_path, j);
  RunResult res{exit_ok, {csv_path.string(), sf_path.string(), js_path.string()}, ""};
  res.summary = std::to_string(rows.size() - failures.size()) + "/" + std::to_string(rows.size()) +
                " lambda points";
  for (const auto& f : failures) std::cerr << "warning: " << f << '\n';
  if (!failures.empty()) res.exit_code = exit_numerical;
  return res;
}

inline RunResult run_evolve(const ExperimentConfig& c) {
  const Lattice lat(c.lattice);
  if (lat.kind() == LatticeKind::chain) throw ConfigError("evolve: ladder or square lattice required");
  const auto sol = detail::geometry_for(c);
  AdiabaticOptions opt = c.adiabatic;
  opt.lanczos = c.solver;
  AdiabaticResult res;
  bool partial = false;
  std::string error;
  try {
    adiabatic_sweep(lat, sol, c.pulse, opt, res);
  } catch (const Error& e) {
    partial = true;
    error = e.what();
  }
  const auto csv_path = detail::output_path(c, "trajectory.csv");
  auto csv = detail::open_output(csv_path);
  write_csv_preamble(csv, c);
  if (partial) csv << "# partial=true\n";
  write_trajectory_csv(csv, res.trajectory);
  nlohmann::json j = partial ? nlohmann::json{{"partial", true}, {"error", error}} : to_json(res);
  j["t_f"] = c.pulse.t_f;
  j["J"] = c.pulse.J;
  j["delta"] = opt.delta;
  add_provenance(j, c);
  const auto js_path = detail::output_path(c, "evolve.json");
  write_json(js_path, j);
  RunResult r{partial ? exit_numerical : exit_ok, {csv_path.string(), js_path.string()}, ""};
  if (partial)
    r.summary = "evolution failed: " + error;
  else
    r.summary = "final fidelity " + fmt(res.final_fidelity) + ", RVBS verdict " +
                (res.diagnostic.verdict ? "true" : "false");
  return r;
}

// ---------------------------------------------------------------- verify

using DualToLinkMap = std::function<LinkConfig(const Lattice&, const DualConfig&)>;

struct VerifyOptions {
  std::vector<LatticeSpec> lattices;
  std::vector<double> lambdas{-1.0, 0.0, 0.5, 1.0};
  double spectrum_tol = 1e-10;
  double symmetry_tol = 1e-12;
  DualToLinkMap dual_to_link = [](const Lattice& l, const DualConfig& d) { return from_dual(l, d); };

  static VerifyOptions standard() {
    VerifyOptions o;
    for (int a = 1; a <= 3; ++a)
      for (int b = 1; b <= 3; ++b) o.lattices.push_back(LatticeSpec::open_square(a, b));
    for (int nx = 2; nx <= 6; nx += 2) o.lattices.push_back(LatticeSpec::periodic_ladder(nx));
    return o;
  }
};

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

inline nlohmann::json to_json(const VerifyReport& r) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : r.checks) arr.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"passed", r.passed()}, {"checks", arr}};
}

namespace detail {

inline double max_spectrum_gap(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace detail

inline VerifyReport run_verify_suite(const VerifyOptions& opt) {
  VerifyReport rep;
  {
    const auto pats = list_physical_vertex_configs(ChargeBackground::vacuum());
    rep.checks.push_back({"gauss.vertex_patterns", pats.size() == 6,
                          std::to_string(pats.size()) + " of 16 vacuum patterns"});
  }
  for (const auto& spec : opt.lattices) {
    const Lattice lat(spec);
    const std::string tag = to_string(spec);
    const Basis dual = enumerate_sector(lat);
    const Basis link = enumerate_link_sector(lat);

    // duality: images are physical, round trip, and flips intertwine
    {
      CheckResult gauss{"gauss." + tag, true, ""};
      CheckResult roundtrip{"duality.roundtrip." + tag, true, ""};
      CheckResult inter{"duality.intertwining." + tag, true, ""};
      std::size_t bad_g = 0, bad_r = 0, bad_i = 0;
      for (std::size_t i = 0; i < dual.size(); ++i) {
        const DualConfig d{dual[i]};
        const LinkConfig c = opt.dual_to_link(lat, d);
        if (!is_physical(lat, c)) ++bad_g;
        bool rt = true;
        try {
          const auto back = to_dual(lat, c);
          rt = opt.dual_to_link(lat, back) == c;
        } catch (const PhysicalityError&) {
          rt = false;
        }
        if (!rt) ++bad_r;
        for (int p = 0; p < lat.num_spins(); ++p) {
          const auto fd = apply_dual_plaquette(lat, d, p);
          const auto fl = apply_plaquette(lat, c, p);
          const bool ok = fd.has_value() == fl.has_value() && (!fd || opt.dual_to_link(lat, *fd) == *fl);
          if (!ok) ++bad_i;
        }
      }
      gauss.passed = bad_g == 0;
      gauss.detail = std::to_string(bad_g) + " unphysical images of " + std::to_string(dual.size());
      roundtrip.passed = bad_r == 0;
      roundtrip.detail = std::to_string(bad_r) + " failed round trips";
      inter.passed = bad_i == 0;
      inter.detail = std::to_string(bad_i) + " (state, plaquette) mismatches";
      rep.checks.push_back(gauss);
      rep.checks.push_back(roundtrip);
      rep.checks.push_back(inter);
    }

    // sector size versus the link picture
    {
      const std::size_t expect =
          spec.kind == LatticeKind::periodic_ladder ? 2 * link.size() : link.size();
      rep.checks.push_back({"sector.size." + tag, dual.size() == expect,
                            std::to_string(dual.size()) + " dual vs " + std::to_string(link.size()) + " link"});
    }

    // hermiticity and spectrum equivalence
    if (dual.size() <= kDenseLimit) {
      // the ladder dual sector holds both global-flip copies of every link
      // state; its flip-even block is the link model
      const bool ladder = spec.kind == LatticeKind::periodic_ladder;
      for (double lam : opt.lambdas) {
        const auto Hd = build_dual_rk(lat, dual, 1.0, lam);
        const auto Ho = build_original_rk(lat, link, 1.0, lam);
        const std::string l = "lambda=" + fmt(lam);
        rep.checks.push_back({"hermiticity.dual_rk." + tag + "." + l, Hd.is_symmetric(opt.symmetry_tol),
                              "asymmetry " + fmt(Hd.asymmetry())});
        rep.checks.push_back({"hermiticity.original_rk." + tag + "." + l, Ho.is_symmetric(opt.symmetry_tol),
                              "asymmetry " + fmt(Ho.asymmetry())});
        const auto ed = dense_spectrum(ladder ? flip_even_block(dual, Hd, lat.num_spins()) : Hd).values;
        const auto eo = dense_spectrum(Ho).values;
        const double gap = detail::max_spectrum_gap(ed, eo);
        rep.checks.push_back({"spectrum." + tag + "." + l, gap < opt.spectrum_tol, "max |dE| " + fmt(gap)});
      }
    }
  }
  return rep;
}

inline RunResult run_verify(const ExperimentConfig& c, const VerifyOptions& opt = VerifyOptions::standard()) {
  const auto rep = run_verify_suite(opt);
  auto j = to_json(rep);
  add_provenance(j, c);
  const auto path = detail::output_path(c, "verify.json");
  write_json(path, j);
  std::ostringstream os;
  std::size_t failed = 0;
  for (const auto& chk : rep.checks)
    if (!chk.passed) {
      ++failed;
      os << "FAIL " << chk.name << ": " << chk.detail << '\n';
    }
  os << rep.checks.size() - failed << "/" << rep.checks.size() << " checks passed";
  return {rep.passed() ? exit_ok : exit_check_failed, {path.string()}, os.str()};
}

inline RunResult run_command(const std::string& cmd, const ExperimentConfig& c) {
  if (cmd == "geometry") return run_geometry(c);
  if (cmd == "sector") return run_sector(c);
  if (cmd == "sweep") return run_sweep(c);
  if (cmd == "evolve") return run_evolve(c);
  if (cmd == "verify") return run_verify(c);
  throw ConfigError("unknown command '" + cmd + "'");
}

/// Maps library exceptions onto the documented exit codes.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return exit_usage;
  return exit_numerical;
}

}  // namespace rydgauge
