#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crowdscale/csv.hpp"
#include "crowdscale/measure.hpp"

namespace fs = std::filesystem;
using namespace crowdscale;

namespace {

const char* cli_path() { return CROWDSCALE_CLI_PATH; }

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd = std::string(cli_path()) + " " + args + " > " +
                          out.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(raw);
  std::ifstream is(out);
  std::stringstream ss;
  ss << is.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Data rows of a CSV file (comments and header skipped).
std::vector<std::vector<double>> csv_rows(const fs::path& p) {
  std::ifstream is(p);
  REQUIRE(is.good());
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    rows.push_back(row);
  }
  return rows;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("cli_test_out") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli: w1 on identical files reports zero") {
  const auto dir = fresh_dir("w1");
  AtomicMeasure<1> m;
  m.positions = {vec1(0.25), vec1(0.5), vec1(1.5)};
  save_measure((dir / "a.csv").string(), m);

  for (const char* method : {"cdf", "lp"}) {
    const auto r = run_cli("w1 " + (dir / "a.csv").string() + " " +
                               (dir / "a.csv").string() + " --method " +
                               method,
                           dir);
    INFO(r.output);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("w1 = 0 ") != std::string::npos);
  }
}

TEST_CASE("cli: w1 between measure kinds") {
  const auto dir = fresh_dir("w1mix");
  const auto atoms = make_lattice<1>(2);
  const auto bumps = make_bumps(atoms, 0.01, bump_profile("indicator"));
  save_measure((dir / "atoms.csv").string(), atoms);
  save_measure((dir / "bumps.csv").string(), bumps);

  const auto r = run_cli("w1 " + (dir / "atoms.csv").string() + " " +
                             (dir / "bumps.csv").string() +
                             " --method semidiscrete",
                         dir);
  INFO(r.output);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("w1 = 0.02") != std::string::npos);

  const auto lp = run_cli("w1 " + (dir / "atoms.csv").string() + " " +
                              (dir / "bumps.csv").string() +
                              " --method lp --cells-per-bump 64",
                          dir);
  CHECK(lp.exit_code == 0);
}

TEST_CASE("cli: speed diagram output and determinism") {
  const auto dir = fresh_dir("diagram");
  const std::string args = "speed-diagram --kernel fig3 --L 2 --N 2:2:64 "
                           "--vd 1 --out " +
                           (dir / "d.csv").string() + " --svg " +
                           (dir / "d.svg").string();
  const auto r1 = run_cli(args, dir);
  INFO(r1.output);
  REQUIRE(r1.exit_code == 0);
  const auto rows = csv_rows(dir / "d.csv");
  REQUIRE(rows.size() == 6);  // N = 2, 4, 8, 16, 32, 64
  for (const auto& row : rows) {
    REQUIRE(row.size() == 5);
    CHECK(row[1] >= row[2]);  // micro at least as fast for this kernel family
    CHECK_THAT(row[3], Catch::Matchers::WithinAbs(row[1] - row[2], 1e-14));
  }
  // N = 4 row carries the hand values
  CHECK_THAT(rows[1][1], Catch::Matchers::WithinAbs(0.85, 1e-12));
  CHECK_THAT(rows[1][2], Catch::Matchers::WithinAbs(11.0 / 15.0, 1e-9));

  const std::string first = slurp(dir / "d.csv");
  const auto r2 = run_cli(args, dir);
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(dir / "d.csv") == first);  // byte-identical rerun

  const std::string svg = slurp(dir / "d.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);

  // more threads: same data rows (the config echo records the new setting)
  const auto r4 = run_cli("--threads 4 " + args, dir);
  REQUIRE(r4.exit_code == 0);
  const auto rows4 = csv_rows(dir / "d.csv");
  REQUIRE(rows4.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows4[i] == rows[i]);
}

TEST_CASE("cli: full speed-diagram sweep settles at dv/K(0+) = 1/2") {
  const auto dir = fresh_dir("diagram_full");
  const auto r = run_cli(
      "speed-diagram --kernel fig3 --L 2 --N 2:2:4096 --vd 1 --out " +
          (dir / "d.csv").string(),
      dir);
  REQUIRE(r.exit_code == 0);
  const auto rows = csv_rows(dir / "d.csv");
  REQUIRE(rows.size() == 12);  // 2, 4, ..., 4096
  CHECK(rows.back()[0] == 4096.0);
  CHECK_THAT(rows.back()[4], Catch::Matchers::WithinAbs(0.5, 0.02));
}

TEST_CASE("cli: converge emits the exact initial column") {
  const auto dir = fresh_dir("converge");
  const auto r = run_cli(
      "converge --d 1 --h 1 --kmin 2 --kmax 4 --T 0.25 --out " +
          (dir / "c.csv").string(),
      dir);
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  const auto rows = csv_rows(dir / "c.csv");
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    const int k = static_cast<int>(row[0]);
    CHECK(row[1] == std::ldexp(1.0, k));           // N = 2^k
    CHECK(row[3] == std::ldexp(1.0, -2 - k));      // w1_initial = 2^{-2-k}
    CHECK(row[4] > 0.0);                           // terminal W1
    CHECK(row[4] <= row[5]);                       // within the ceiling
  }
}

TEST_CASE("cli: tabulated kernels load from csv tables") {
  const auto dir = fresh_dir("table");
  {
    std::ofstream table(dir / "kernel.csv");
    table << "# z,k samples of z(1-z)/2\n";
    for (int i = 0; i <= 40; ++i) {
      const double z = i / 40.0;
      table << format_double(z) << "," << format_double(0.5 * z * (1.0 - z))
            << "\n";
    }
  }
  const auto r = run_cli(
      "speed-diagram --kernel table:" + (dir / "kernel.csv").string() +
          " --L 2 --N 4,8 --vd 1 --out " + (dir / "d.csv").string(),
      dir);
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  const auto rows = csv_rows(dir / "d.csv");
  REQUIRE(rows.size() == 2);
  // the tabulated profile matches fig5 at the lattice nodes, so the micro
  // branch agrees with the closed-path value 1 - K(1/2) at N = 4
  CHECK_THAT(rows[0][1], Catch::Matchers::WithinAbs(1.0 - 0.125, 1e-12));

  const auto bad = run_cli(
      "speed-diagram --kernel table:" + (dir / "missing.csv").string() +
          " --out " + (dir / "x.csv").string(),
      dir);
  CHECK(bad.exit_code == 2);
}

TEST_CASE("cli: stability spectrum run") {
  const auto dir = fresh_dir("stability");
  const auto r = run_cli(
      "stability --model micro --kernel fig3 --N 16 --L 2 --out " +
          (dir / "s.csv").string(),
      dir);
  REQUIRE(r.exit_code == 0);
  const auto rows = csv_rows(dir / "s.csv");
  REQUIRE(rows.size() == 15);
  for (const auto& row : rows) CHECK(row[1] < 0.0);

  const auto rm = run_cli(
      "stability --model macro --kernel fig3 --N 16 --L 2 --kmax 8 --out " +
          (dir / "sm.csv").string(),
      dir);
  REQUIRE(rm.exit_code == 0);
  CHECK(csv_rows(dir / "sm.csv").size() == 8);
}

TEST_CASE("cli: scaling-equiv and stability-bound json reports") {
  const auto dir = fresh_dir("json");
  const auto rs = run_cli(
      "scaling-equiv --kernel fig5 --alpha 1 --beta 0 --alpha2 0 --beta2 1 "
      "--N 8 --T 0.5 --dt 0.002 --out " +
          (dir / "se.json").string(),
      dir);
  INFO(rs.output);
  REQUIRE(rs.exit_code == 0);
  const std::string se = slurp(dir / "se.json");
  CHECK(se.find("\"observed\"") != std::string::npos);
  CHECK(se.find("\"ceiling\"") != std::string::npos);
  CHECK(se.find("\"scale_factor\": 8.0") != std::string::npos);

  const auto rb = run_cli(
      "stability-bound --N 6 --pairs 3 --perturb 1e-3 --T 0.5 --dt 0.01 "
      "--out " +
          (dir / "sb.json").string(),
      dir);
  INFO(rb.output);
  REQUIRE(rb.exit_code == 0);
  const std::string sb = slurp(dir / "sb.json");
  CHECK(sb.find("\"all_satisfied\": true") != std::string::npos);
  CHECK(sb.find("\"ceiling\"") != std::string::npos);
}

TEST_CASE("cli: simulate writes trajectories") {
  const auto dir = fresh_dir("simulate");
  const auto r = run_cli(
      "simulate --model micro --kernel fig3 --equispaced 8 --domain periodic "
      "--L 2 --t_final 0.5 --dt 0.01 --snapshot_stride 10 --out " +
          (dir / "traj.csv").string(),
      dir);
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  const auto rows = csv_rows(dir / "traj.csv");
  REQUIRE(rows.size() >= 5);
  CHECK(rows[0].size() == 9);  // t plus 8 positions

  const auto rf = run_cli(
      "simulate --model fv --kernel fig3 --equispaced 4 --L 2 --cells 50 "
      "--t_final 0.2 --out " +
          (dir / "fv.csv").string(),
      dir);
  REQUIRE(rf.exit_code == 0);
  CHECK(csv_rows(dir / "fv.csv").front().size() == 51);

  const auto rc = run_cli(
      "simulate --model characteristics --kernel fig5 --equispaced 4 "
      "--domain free --L 2 --r 0.1 --profile cosine --t_final 0.2 "
      "--dt 0.01 --snapshot_stride 10 --out " +
          (dir / "cloud.csv").string(),
      dir);
  INFO(rc.output);
  REQUIRE(rc.exit_code == 0);
  const auto cloud_rows = csv_rows(dir / "cloud.csv");
  REQUIRE(cloud_rows.front().size() == 3);  // t, w, x
  double mass = 0.0;
  for (const auto& row : cloud_rows)
    if (row[0] == cloud_rows.front()[0]) mass += row[1];
  CHECK_THAT(mass, Catch::Matchers::WithinAbs(4.0, 1e-12));
}

TEST_CASE("cli: validation failures exit with code 2") {
  const auto dir = fresh_dir("errors");
  CHECK(run_cli("speed-diagram --no-such-flag 1", dir).exit_code == 2);
  CHECK(run_cli("w1 missing_a.csv missing_b.csv", dir).exit_code != 0);
  const auto bad = run_cli(
      "converge --d 2 --h 0.5 --kernel tent --out " + (dir / "x.csv").string(),
      dir);
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("h > d - 1") != std::string::npos);
  // unknown subcommand
  CHECK(run_cli("frobnicate", dir).exit_code == 2);
}

TEST_CASE("measure files round-trip through save and load") {
  const auto dir = fresh_dir("roundtrip");

  const auto atoms = make_lattice<2>(1);
  save_measure((dir / "a.csv").string(), atoms, {"who=test"});
  const auto a2 =
      std::get<AtomicMeasure<2>>(load_measure<2>((dir / "a.csv").string()));
  CHECK(a2.positions == atoms.positions);
  CHECK(measure_file_dim((dir / "a.csv").string()) == 2);

  const auto bumps =
      make_bumps(make_lattice<1>(2), 0.03125, bump_profile("cosine"));
  save_measure((dir / "b.csv").string(), bumps);
  const auto b2 =
      std::get<BumpMeasure<1>>(load_measure<1>((dir / "b.csv").string()));
  CHECK(b2.centers == bumps.centers);
  CHECK(b2.radius == bumps.radius);
  CHECK(b2.profile.name == "cosine");
  CHECK(b2.first_moment == bumps.first_moment);

  const auto grid = uniform_grid(4.0, 2.0, 16);
  save_measure((dir / "g.csv").string(), grid);
  const auto g2 =
      std::get<GridDensity1D>(load_measure<1>((dir / "g.csv").string()));
  CHECK(g2.length == grid.length);
  CHECK(g2.cell_averages == grid.cell_averages);

  // written files carry the config echo as comments
  CHECK(slurp(dir / "a.csv").find("# who=test") != std::string::npos);
  CHECK(slurp(dir / "a.csv").find("# type=atomic") != std::string::npos);
}

TEST_CASE("cli: output files embed the config echo") {
  const auto dir = fresh_dir("echo");
  const auto r = run_cli("speed-diagram --kernel fig3 --L 2 --N 2,4 --out " +
                             (dir / "d.csv").string(),
                         dir);
  REQUIRE(r.exit_code == 0);
  const std::string body = slurp(dir / "d.csv");
  CHECK(body.find("# tool=crowdscale subcommand=speed-diagram") !=
        std::string::npos);
  CHECK(body.find("kernel=") != std::string::npos);
  CHECK(body.find("L=") != std::string::npos);
}

TEST_CASE("cli: options can come from a config file, flags win") {
  const auto dir = fresh_dir("config");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "threads=2\n\n[speed-diagram]\nkernel=fig3\nL=4\nN=2:2:16\nout=" +
               (dir / "from_cfg.csv").string() + "\n";
  }
  const auto r = run_cli("--config " + (dir / "run.cfg").string() +
                             " speed-diagram --L 2",
                         dir);
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  const auto rows = csv_rows(dir / "from_cfg.csv");
  REQUIRE(rows.size() == 4);
  // command line --L 2 overrode the config L=4: at N = 4 and L = 2 the
  // micro speed is the hand value 0.85
  CHECK_THAT(rows[1][1], Catch::Matchers::WithinAbs(0.85, 1e-12));
}
