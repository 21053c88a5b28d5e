// Runs the polarballs executable end to end on small generated inputs.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "polarballs/errors.hpp"
#include "polarballs/shape.hpp"
#include "test_shapes.hpp"

namespace fs = std::filesystem;
using polarballs::ErrorCode;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("polarballs_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    const auto sphere = testshapes::sphere(4);
    std::ofstream(d / "sphere.obj") << [&] {
      std::ostringstream os;
      polarballs::write_obj(os, sphere);
      return os.str();
    }();
    std::ofstream star(d / "star.txt");
    polarballs::write_polygon(star, testshapes::star(5, 0.45, 1.0, 20));
    return d;
  }();
  static const struct Cleanup {
    ~Cleanup() { fs::remove_all(dir); }
  } cleanup;
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(POLARBALLS_CLI) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string in(const char* name) { return (workdir() / name).string(); }
std::string out(const char* name) { return (workdir() / "out" / name).string(); }

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

nlohmann::json load_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

void write_file(const char* name, const std::string& text) { std::ofstream(workdir() / name) << text; }

int code(ErrorCode c) { return static_cast<int>(c); }

}  // namespace

TEST(Cli, SphereBallstickWritesEverything) {
  ASSERT_EQ(run("ballstick " + in("sphere.obj") + " --out " + out("bs") + " --samples 1500"), 0);
  for (const char* f : {"abstraction.json", "timings.json", "balls.obj", "wires.obj"}) {
    EXPECT_TRUE(fs::exists(fs::path(out("bs")) / f)) << f;
  }
  const auto a = load_json(fs::path(out("bs")) / "abstraction.json");
  ASSERT_EQ(a["balls"].size(), 1u);
  EXPECT_NEAR(a["balls"][0]["radius"].get<double>(), 1.0, 0.02);
  const auto t = load_json(fs::path(out("bs")) / "timings.json");
  EXPECT_GE(t["total"].get<double>(), 0.0);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  for (const char* d : {"rep1", "rep2"}) {
    ASSERT_EQ(run("ballstick " + in("star.txt") + " --out " + out(d) + " --samples 500"), 0);
    ASSERT_EQ(run("porous " + in("star.txt") + " --out " + out(d) + "/p --samples 500"), 0);
  }
  const fs::path a(out("rep1")), b(out("rep2"));
  for (const char* f : {"abstraction.json", "balls.obj", "wires.obj", "p/report.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  for (const auto& e : fs::directory_iterator(a / "p" / "pores")) {
    EXPECT_EQ(slurp(e.path()), slurp(b / "p" / "pores" / e.path().filename())) << e.path();
  }
}

TEST(Cli, ErrorExitCodes) {
  // Unit cube with its top face missing.
  write_file("open.obj",
             "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n"
             "f 1 3 2\nf 1 4 3\nf 1 2 6\nf 1 6 5\nf 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8\n");
  write_file("tiny.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  write_file("garbage.obj", "v 0 0 zero\n");
  write_file("line.txt", "0 0\n1 0\n2 0\n3 0\n");
  write_file("bad_features.txt", "0.1 0.2 0.3\nnot a point\n");

  EXPECT_EQ(run("ballstick " + in("missing.obj") + " --out " + out("e")), code(ErrorCode::IoError));
  EXPECT_EQ(run("ballstick " + in("open.obj") + " --out " + out("e")), code(ErrorCode::ManifoldViolation));
  EXPECT_EQ(run("ballstick " + in("tiny.obj") + " --out " + out("e")), code(ErrorCode::EmptyInput));
  EXPECT_EQ(run("ballstick " + in("garbage.obj") + " --out " + out("e")), code(ErrorCode::ParseError));
  EXPECT_EQ(run("ballstick " + in("line.txt") + " --out " + out("e")), code(ErrorCode::DegenerateInput));
  EXPECT_EQ(run("porous " + in("star.txt") + " --out " + out("e") + " --lambda 1.5"),
            code(ErrorCode::ContractViolation));
  EXPECT_EQ(run("porous " + in("star.txt") + " --out " + out("e") + " --tau 0.9"), code(ErrorCode::EmptyResult));
  EXPECT_EQ(run("ballstick " + in("sphere.obj") + " --out " + out("e") + " --samples 800 --features " +
                in("bad_features.txt")),
            code(ErrorCode::ParseError));
  EXPECT_NE(run("ballstick " + in("star.txt") + " --out " + out("e") + " --no-such-flag"), 0);
  EXPECT_NE(run("ballstick " + in("star.txt")), 0);  // --out is required
}

TEST(Cli, SizesSnapDiametersDown) {
  ASSERT_EQ(run("ballstick " + in("sphere.obj") + " --out " + out("sizes") + " --samples 1500 --sizes 0.5,1,1.5"), 0);
  const auto a = load_json(fs::path(out("sizes")) / "abstraction.json");
  ASSERT_EQ(a["balls"].size(), 1u);
  // The polar ball of a unit sphere has diameter just under 2.
  EXPECT_EQ(a["balls"][0]["diameter"].get<double>(), 1.5);
  EXPECT_EQ(a["balls"][0]["radius"].get<double>(), 0.75);
}

TEST(Cli, PorousSphereRatioFollowsShrink) {
  const double tau_frac = 0.01;
  ASSERT_EQ(run("porous " + in("sphere.obj") + " --out " + out("ps") + " --samples 2000 --tau 0.01"), 0);
  const auto r = load_json(fs::path(out("ps")) / "report.json");
  ASSERT_EQ(r["pores"].size(), 1u);
  const double tau = tau_frac * 2.0 * std::sqrt(3.0);  // bbox diagonal of the unit sphere
  // One pore of radius ~1 - tau inside a unit ball; the faceted mesh and the
  // sampled pole radius each move this by well under 1%.
  EXPECT_NEAR(r["weight_saving_ratio"].get<double>(), std::pow(1.0 - tau, 3), 0.02);
  EXPECT_NEAR(r["tau"].get<double>(), tau, 1e-3);
}

TEST(Cli, CrossoverCsvHasOneRowPerCheckpoint) {
  ASSERT_EQ(run("bench-crossover " + in("star.txt") + " --out " + out("cx") + " --samples 500 --checkpoints 1,2,3,1000"), 0);
  std::istringstream csv(slurp(fs::path(out("cx")) / "crossover.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "selected,accel_time_s,brute_time_s,accel_checks,brute_checks");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 3);  // 1000 is past the end of the run and is dropped
}

TEST(Cli, PolesDump) {
  ASSERT_EQ(run("poles-dump " + in("star.txt") + " --out " + out("pd") + " --samples 300"), 0);
  const auto p = load_json(fs::path(out("pd")) / "poles.json");
  EXPECT_FALSE(p["inside"].empty());
  EXPECT_FALSE(p["outside"].empty());
  EXPECT_GT(fs::file_size(fs::path(out("pd")) / "voronoi.txt"), 0u);
}
