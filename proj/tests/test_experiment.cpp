#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "rydgauge/experiment.hpp"

using namespace rydgauge;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("rydgauge_test_" + std::to_string(::getpid()) + "_" +
                                          std::to_string(counter()++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RYDGAUGE_CLI) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

const char* kSweep = R"(schema = 1
command = sweep
[lattice]
kind = ladder
nx = 4
[model]
name = dual_rk
pinning = 0.01
[sweep]
lambda = -1, 0, 0.5
)";

}  // namespace

TEST(Config, Defaults) {
  const auto c = parse("");
  EXPECT_EQ(c.lattice, LatticeSpec::periodic_ladder(6));
  EXPECT_EQ(c.model, "dual_rk");
  EXPECT_DOUBLE_EQ(c.pulse.t_f, 40.0);
  EXPECT_DOUBLE_EQ(c.pulse.dt, 0.01);
  EXPECT_TRUE(c.timestamp);
}

TEST(Config, ParsesAllSections) {
  const auto c = parse(R"(command = evolve
[lattice]
kind = square
nx = 3
ny = 2
[geometry]
eta = 0.5
theta = 0.85
d_y = 0.07
[model]
name = rydberg_rk
J = 2
delta = 0.1
pinning_sites = 0,0; 2,1
[sweep]
lambda_min = -1
lambda_max = 1
lambda_step = 0.5
[solver]
tol = 1e-9
seed = 7
threads = 2
[pulse]
J = 2
record_every = 5
[output]
dir = /tmp/x
timestamp = false
)");
  EXPECT_EQ(c.command, "evolve");
  EXPECT_EQ(c.lattice, LatticeSpec::open_square(3, 2));
  EXPECT_DOUBLE_EQ(c.theta, 0.85);
  EXPECT_EQ(c.model, "rydberg_rk");
  ASSERT_EQ(c.pinning_sites.size(), 2u);
  EXPECT_EQ(c.pinning_sites[1].x, 2);
  EXPECT_EQ(c.pinning_sites[1].y, 1);
  EXPECT_EQ(c.lambdas, (std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0}));
  EXPECT_EQ(c.solver.seed, 7u);
  EXPECT_EQ(c.threads, 2);
  EXPECT_DOUBLE_EQ(c.pulse.t_f, 20.0);
  EXPECT_DOUBLE_EQ(c.pulse.dt, 0.005);
  EXPECT_EQ(c.adiabatic.record_every, 5);
  EXPECT_EQ(c.out_dir, "/tmp/x");
  EXPECT_FALSE(c.timestamp);
}

TEST(Config, RejectsBadInput) {
  const std::vector<std::string> bad{
      "bogus = 1\n",
      "[nope]\nx = 1\n",
      "[lattice]\nsize = 3\n",
      "[lattice]\nkind = ladder\nnx = 5\n",
      "[lattice]\nkind = cube\n",
      "[lattice]\nkind = chain\nnx = 8\n",                 // chain without pxp
      "[model]\nname = pxp\n",                             // pxp on a ladder
      "[geometry]\neta = abc\n",
      "[geometry]\neta = 0\n",
      "[model]\nJ = -1\n",
      "[solver]\ntol = 0.5\n",
      "[solver]\nthreads = 0\n",
      "[sweep]\nlambda_min = 1\nlambda_max = 0\nlambda_step = 0.1\n",
      "[pulse]\ndt = 100\n",
      "[output]\ntimestamp = maybe\n",
      "schema = 2\n",
      "[model]\npinning_sites = 1;2\n",
      "[lattice\n",
  };
  for (const auto& text : bad) EXPECT_THROW(parse(text), ConfigError) << text;
}

TEST(Config, HashTracksContentAndSeedOverride) {
  auto a = parse(kSweep);
  const auto b = parse(kSweep);
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_NE(config_hash(a), config_hash(parse(std::string(kSweep) + "[solver]\nseed = 3\n")));
  const auto before = config_hash(a);
  apply_overrides(a, std::nullopt, 5, std::nullopt, false);
  EXPECT_NE(config_hash(a), before);
  EXPECT_EQ(a.solver.seed, 5u);
  EXPECT_THROW(apply_overrides(a, std::nullopt, std::nullopt, 0, false), ConfigError);
}

TEST(Config, EmptySweepIsAUsageError) {
  auto c = parse("command = sweep\n[lattice]\nnx = 4\n");
  EXPECT_THROW(run_sweep(c), ConfigError);
  EXPECT_EQ(exit_code_for(ConfigError("x")), exit_usage);
  EXPECT_EQ(exit_code_for(ConvergenceError("x")), exit_numerical);
}

TEST(Runners, SweepOutputs) {
  TempDir dir;
  auto c = parse(kSweep);
  c.out_dir = dir.path().string();
  c.timestamp = false;
  const auto r = run_sweep(c);
  EXPECT_EQ(r.exit_code, exit_ok);
  const auto csv = read_file(dir / "sweep.csv");
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "# config_hash=" + config_hash(c));
  std::getline(is, line);
  EXPECT_EQ(line, "lambda,E0,S00z,Spipiz,Spipix,flippable");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3);
  const auto j = nlohmann::json::parse(read_file(dir / "sweep.json"));
  EXPECT_EQ(j["points"].size(), 3u);
  EXPECT_FALSE(j.contains("generated"));
}

TEST(Runners, ModelsAgreeThroughTheDuality) {
  auto c = parse("[lattice]\nkind = square\nnx = 3\nny = 3\n");
  const Lattice lat(c.lattice);
  const Basis dual = enumerate_sector(lat);
  const Basis link = enumerate_link_sector(lat);
  const auto a = sweep_point(c, lat, dual, nullptr, 0.4);
  c.model = "original_rk";
  const auto b = sweep_point(c, lat, dual, &link, 0.4);
  EXPECT_NEAR(a.E0, b.E0, 1e-9);
  EXPECT_NEAR(a.s00z, b.s00z, 1e-8);
  EXPECT_NEAR(a.spipix, b.spipix, 1e-8);
  EXPECT_NEAR(a.flippable, b.flippable, 1e-8);
  c.model = "dual_rk";
  c.penalty = 40.0;
  const Basis full = Basis::full(c.lattice, 9);
  EXPECT_NEAR(sweep_point(c, lat, full, nullptr, 0.4).E0, a.E0, 1e-8);
}

TEST(Runners, GeometryAndSector) {
  TempDir dir;
  auto c = parse("[lattice]\nkind = ladder\nnx = 6\n[output]\ntimestamp = false\n");
  c.out_dir = dir.path().string();
  run_geometry(c);
  const auto g = blockade_solution_from_json(nlohmann::json::parse(read_file(dir / "geometry.json")));
  EXPECT_NEAR(g.G, solve_ladder_geometry(0.38).G, 1e-12);
  run_sector(c);
  const auto s = nlohmann::json::parse(read_file(dir / "sector.json"));
  EXPECT_EQ(s["dimension"].get<std::size_t>(), 2 * s["link_dimension"].get<std::size_t>());
  EXPECT_EQ(read_basis_binary((dir / "sector.bin").string()).size(), s["dimension"].get<std::size_t>());
}

TEST(Verify, PassesOnTheLibraryMap) {
  VerifyOptions o;
  o.lattices = {LatticeSpec::open_square(2, 2), LatticeSpec::open_square(2, 3), LatticeSpec::periodic_ladder(4)};
  EXPECT_TRUE(run_verify_suite(o).passed());
}

TEST(Verify, CatchesASignFlippedDuality) {
  VerifyOptions o;
  o.lattices = {LatticeSpec::open_square(2, 2), LatticeSpec::periodic_ladder(4)};
  // flip the sign convention of the vertical links only
  o.dual_to_link = [](const Lattice& lat, const DualConfig& d) {
    LinkConfig c = from_dual(lat, d);
    for (int l = 0; l < lat.num_links(); ++l)
      if (lat.links()[l].dir == Dir::y) c.bits ^= std::uint64_t{1} << l;
    return c;
  };
  const auto rep = run_verify_suite(o);
  EXPECT_FALSE(rep.passed());
  std::size_t failed = 0;
  for (const auto& chk : rep.checks) failed += !chk.passed;
  EXPECT_GE(failed, 2u);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  EXPECT_EQ(run_cli(""), exit_usage);
  EXPECT_EQ(run_cli("frobnicate"), exit_usage);
  EXPECT_EQ(run_cli("sweep"), exit_usage);
  EXPECT_EQ(run_cli("sweep --config /nonexistent.ini"), exit_usage);

  write_file(dir / "unknown.ini", "[lattice]\ncolour = red\n");
  EXPECT_EQ(run_cli("geometry --config " + (dir / "unknown.ini").string()), exit_usage);

  write_file(dir / "empty.ini", "command = sweep\n");
  EXPECT_EQ(run_cli("sweep --config " + (dir / "empty.ini").string() + " --out " + dir.path().string()),
            exit_usage);

  write_file(dir / "mismatch.ini", "command = evolve\n");
  EXPECT_EQ(run_cli("sweep --config " + (dir / "mismatch.ini").string()), exit_usage);

  write_file(dir / "evolve.ini", "command = evolve\n[geometry]\nfile = /nonexistent/geometry.json\n");
  EXPECT_EQ(run_cli("evolve --config " + (dir / "evolve.ini").string() + " --out " + dir.path().string()),
            exit_usage);

  write_file(dir / "geom.ini", "command = geometry\n");
  EXPECT_EQ(run_cli("geometry --config " + (dir / "geom.ini").string() + " --threads 0"), exit_usage);
  EXPECT_EQ(run_cli("geometry --config " + (dir / "geom.ini").string() + " --out " + dir.path().string()),
            exit_ok);
  EXPECT_TRUE(fs::exists(dir / "geometry.json"));

  write_file(dir / "degenerate.ini", "command = geometry\n[lattice]\nkind = square\nnx = 2\n[geometry]\neta = 0.5\n");
  EXPECT_EQ(run_cli("geometry --config " + (dir / "degenerate.ini").string() + " --out " + dir.path().string()),
            exit_numerical);
}

TEST(Cli, VerifySucceeds) {
  TempDir dir;
  EXPECT_EQ(run_cli("verify --out " + dir.path().string()), exit_ok);
  const auto j = nlohmann::json::parse(read_file(dir / "verify.json"));
  EXPECT_TRUE(j["passed"].get<bool>());
}

TEST(Cli, DeterministicOutputs) {
  TempDir dir;
  write_file(dir / "sweep.ini", kSweep);
  const auto cfg = (dir / "sweep.ini").string();
  ASSERT_EQ(run_cli("sweep --config " + cfg + " --no-timestamp --out " + (dir / "a").string()), exit_ok);
  ASSERT_EQ(run_cli("sweep --config " + cfg + " --no-timestamp --threads 3 --out " + (dir / "b").string()),
            exit_ok);
  for (const char* f : {"sweep.csv", "structure_factors.csv", "sweep.json"})
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
  EXPECT_EQ(read_file(dir / "a" / "sweep.csv").rfind("# config_hash=", 0), 0u);

  ASSERT_EQ(run_cli("sweep --config " + cfg + " --out " + (dir / "c").string()), exit_ok);
  const auto stamped = read_file(dir / "c" / "sweep.csv");
  EXPECT_NE(stamped.find("\n# generated="), std::string::npos);
}
