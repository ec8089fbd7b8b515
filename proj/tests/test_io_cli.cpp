#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "test_support.hpp"
#include "wop/measure_io.hpp"
#include "wop/measures.hpp"

using namespace wop;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "wop_cli_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int exit_code;
  std::string stdout_text;
};

CliRun run_cli(const std::string& args) {
  const fs::path out = temp_dir() / "stdout.txt";
  const std::string cmd =
      std::string(WOP_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(out)};
}

DiscreteMeasure sample_measure() {
  Matrix pts(3, 2);
  pts << 0.1, -0.2, 1.25, 3.5, -2.0, 0.0;
  Vector w(3);
  w << 0.25, 1.5, 0.125;
  return DiscreteMeasure(pts, w);
}

}  // namespace

TEST_CASE("format_double round trips") {
  for (double v : {0.0, 1.0, -1.0 / 3.0, 3.16227766016837933,
                   1.2345678901234567e-12, 1e17}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("json measure round trip is atom-wise identical") {
  const fs::path p = temp_dir() / "measure.json";
  const DiscreteMeasure mu = sample_measure();
  write_measure_json(p.string(), mu);
  const DiscreteMeasure back = read_measure(p.string());
  CHECK(back.points() == mu.points());
  CHECK(back.weights() == mu.weights());
  // null measure round trip
  const fs::path pn = temp_dir() / "null.json";
  write_measure_json(pn.string(), DiscreteMeasure::null_measure(2));
  CHECK(read_measure(pn.string()).size() == 0);
  CHECK(read_measure(pn.string()).dim() == 2);
}

TEST_CASE("csv measure round trip") {
  const fs::path p = temp_dir() / "measure.csv";
  const DiscreteMeasure mu = sample_measure();
  write_measure_csv(p.string(), mu);
  const DiscreteMeasure back = read_measure(p.string());
  CHECK(back.points() == mu.points());
  CHECK(back.weights() == mu.weights());
}

TEST_CASE("io errors") {
  CHECK_THROWS_AS(read_measure("/nonexistent/file.json"), IoError);
  const fs::path bad = temp_dir() / "bad.json";
  std::ofstream(bad) << "{\"dim\": 1, \"points\": [[0]], \"weights\": [-1]}";
  CHECK_THROWS_AS(read_measure(bad.string()), IoError);
  const fs::path ragged = temp_dir() / "ragged.csv";
  std::ofstream(ragged) << "x_1,w\n0.5,1.0\n0.25\n";
  CHECK_THROWS_AS(read_measure(ragged.string()), IoError);
}

TEST_CASE("cli dist") {
  const fs::path a = temp_dir() / "a.json";
  const fs::path b = temp_dir() / "b.json";
  const fs::path empty = temp_dir() / "empty.json";
  write_measure_json(a.string(), test::dirac1(1.0, 1.0));
  write_measure_json(b.string(), test::dirac1(2.0, 2.0));
  write_measure_json(empty.string(), DiscreteMeasure::null_measure(1));

  // identical files -> 0
  CliRun same = run_cli("dist " + a.string() + " " + a.string());
  CHECK(same.exit_code == 0);
  auto j = nlohmann::json::parse(same.stdout_text);
  CHECK(j["wop"].get<double>() == doctest::Approx(0.0));

  // Dirac oracle sqrt(10)
  CliRun pair = run_cli("dist " + a.string() + " " + b.string());
  CHECK(pair.exit_code == 0);
  j = nlohmann::json::parse(pair.stdout_text);
  CHECK(j["wop"].get<double>() ==
        doctest::Approx(3.16227766016838).epsilon(1e-10));
  CHECK(j["wop_defbis"].get<double>() ==
        doctest::Approx(j["wop"].get<double>()).epsilon(1e-10));
  CHECK(j["dual_value"].get<double>() == doctest::Approx(10.0).epsilon(1e-8));
  CHECK(j["p"].get<double>() == 2.0);

  // null second argument -> sqrt(1 + |x|^2)
  CliRun null_run = run_cli("dist " + a.string() + " " + empty.string());
  CHECK(null_run.exit_code == 0);
  j = nlohmann::json::parse(null_run.stdout_text);
  CHECK(j["wop"].get<double>() ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(j["dual_value"].is_null());

  // WOP_1 Dirac oracle = 4
  CliRun p1 = run_cli("dist --p 1 " + a.string() + " " + b.string());
  j = nlohmann::json::parse(p1.stdout_text);
  CHECK(j["wop"].get<double>() == doctest::Approx(4.0).epsilon(1e-10));

  // deterministic: byte-identical repeat
  CliRun again = run_cli("dist " + a.string() + " " + b.string());
  CHECK(again.stdout_text == pair.stdout_text);
}

TEST_CASE("cli exit codes") {
  CHECK(run_cli("dist /no/such/a.json /no/such/b.json").exit_code == 2);
  CHECK(run_cli("dist").exit_code == 4);
  CHECK(run_cli("frobnicate x y").exit_code == 4);
}

TEST_CASE("cli geodesic endpoints equal inputs") {
  const fs::path a = temp_dir() / "ga.json";
  const fs::path b = temp_dir() / "gb.json";
  test::Rng rng(7);
  const DiscreteMeasure mu = test::random_measure(rng, 4, 2);
  const DiscreteMeasure nu = test::random_measure(rng, 3, 2);
  write_measure_json(a.string(), mu);
  write_measure_json(b.string(), nu);
  const fs::path frames = temp_dir() / "frames.json";
  const CliRun r = run_cli("geodesic " + a.string() + " " + b.string() +
                           " --steps 2 --out " + frames.string());
  CHECK(r.exit_code == 0);
  const auto arr = nlohmann::json::parse(slurp(frames));
  REQUIRE(arr.size() == 3);
  auto as_measure = [](const nlohmann::json& f) {
    Matrix pts(f["points"].size(), f["points"][0].size());
    Vector w(f["weights"].size());
    for (size_t i = 0; i < f["points"].size(); ++i) {
      for (size_t k = 0; k < f["points"][i].size(); ++k) {
        pts(i, k) = f["points"][i][k].get<double>();
      }
      w(i) = f["weights"][i].get<double>();
    }
    return DiscreteMeasure(pts, w);
  };
  CHECK(approx_equal(as_measure(arr[0]), mu, 1e-15));
  CHECK(approx_equal(as_measure(arr[2]), nu, 1e-15));
  const double mid_mass = arr[1]["mass"].get<double>();
  CHECK(mid_mass ==
        doctest::Approx(0.5 * (mu.total_mass() + nu.total_mass())));
}

TEST_CASE("cli barycenter") {
  const fs::path a = temp_dir() / "ba.json";
  const fs::path b = temp_dir() / "bb.json";
  write_measure_json(a.string(), test::dirac1(0.0, 1.0));
  write_measure_json(b.string(), test::dirac1(4.0, 3.0));
  const fs::path list = temp_dir() / "list.json";
  std::ofstream(list) << "[{\"lambda\": 0.5, \"measure_file\": \"ba.json\"},"
                         " {\"lambda\": 0.5, \"measure_file\": \"bb.json\"}]";
  const fs::path out = temp_dir() / "bary.json";
  const CliRun r =
      run_cli("barycenter " + list.string() + " --out " + out.string());
  CHECK(r.exit_code == 0);
  const DiscreteMeasure bary = read_measure(out.string());
  CHECK(bary.total_mass() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(merge_duplicates(bary).points()(0, 0) ==
        doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("cli flow conserves mass on the grid") {
  // mass-2 profile on a 64-cell grid
  const Eigen::Index n = 64;
  const double dx = 1.0 / double(n);
  Matrix pts(n, 1);
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = (double(i) + 0.5) * dx;
    pts(i, 0) = x;
    w(i) = std::exp(-20.0 * (x - 0.5) * (x - 0.5));
  }
  w *= 2.0 / w.sum();
  const fs::path grid = temp_dir() / "grid.json";
  write_measure_json(grid.string(), DiscreteMeasure(pts, w));
  const fs::path out = temp_dir() / "flow.csv";
  std::ostringstream cmd;
  cmd << "flow " << grid.string() << " --grid --dt " << (dx * dx) << " --steps 200 --out "
      << out.string();
  const CliRun r = run_cli(cmd.str());
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.stdout_text);
  CHECK(j["mass_final"].get<double>() == doctest::Approx(2.0).epsilon(1e-8));
  // csv has a header plus steps+1 rows
  std::istringstream csv(slurp(out));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 202);
}

TEST_CASE("cli compare") {
  const fs::path a = temp_dir() / "ca.json";
  const fs::path b = temp_dir() / "cb.json";
  write_measure_json(a.string(), test::dirac1(0.0, 1.0));
  write_measure_json(b.string(), test::dirac1(2.0, 1.0));
  const fs::path out = temp_dir() / "table.csv";
  const CliRun r = run_cli("compare " + a.string() + " " + b.string() +
                           " --steps 4 --eps 1e-4 --out " + out.string());
  CHECK(r.exit_code == 0);
  const auto meta = nlohmann::json::parse(r.stdout_text);
  CHECK(meta["hk_sq"].get<double>() == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(meta.contains("hk_profile"));
  std::istringstream csv(slurp(out));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,mass_wop,mass_hk");
  int rows = 0;
  while (std::getline(csv, line)) {
    // unit masses: wop column identically 1
    const size_t c1 = line.find(',');
    const size_t c2 = line.find(',', c1 + 1);
    CHECK(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) == 1.0);
    ++rows;
  }
  CHECK(rows == 5);
}

TEST_CASE("cli certify") {
  const fs::path a = temp_dir() / "fa.json";
  const fs::path b = temp_dir() / "fb.json";
  write_measure_json(a.string(), test::dirac1(1.0, 1.0));
  write_measure_json(b.string(), test::dirac1(2.0, 2.0));
  const CliRun r = run_cli("certify " + a.string() + " " + b.string());
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.stdout_text);
  CHECK(j["value"].get<double>() == doctest::Approx(10.0).epsilon(1e-8));
  CHECK(j["max_violation"].get<double>() <= 1e-8);
}

TEST_CASE("cli accepts csv inputs and null geodesic endpoints") {
  const fs::path a = temp_dir() / "m.csv";
  write_measure_csv(a.string(), test::dirac1(1.0, 1.0));
  const fs::path b = temp_dir() / "n.json";
  write_measure_json(b.string(), DiscreteMeasure::null_measure(1));
  // dist across formats, null second argument
  const CliRun d = run_cli("dist " + a.string() + " " + b.string());
  CHECK(d.exit_code == 0);
  CHECK(nlohmann::json::parse(d.stdout_text)["wop"].get<double>() ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  // geodesic to the null measure: mass ramps linearly to zero
  const fs::path frames = temp_dir() / "null_frames.json";
  const CliRun g = run_cli("geodesic " + a.string() + " " + b.string() +
                           " --steps 4 --out " + frames.string());
  CHECK(g.exit_code == 0);
  const auto meta = nlohmann::json::parse(g.stdout_text);
  CHECK(meta["degenerate_null"].get<bool>() == false);
  const auto arr = nlohmann::json::parse(slurp(frames));
  for (size_t k = 0; k < arr.size(); ++k) {
    CHECK(arr[k]["mass"].get<double>() ==
          doctest::Approx(1.0 - 0.25 * double(k)).epsilon(1e-12));
  }
}

TEST_CASE("cli flow frames output") {
  const fs::path m = temp_dir() / "fm.json";
  write_measure_json(m.string(), test::dirac1(1.0, 1.0));
  const fs::path csv = temp_dir() / "ff.csv";
  const fs::path frames = temp_dir() / "ffr.json";
  const CliRun r = run_cli("flow " + m.string() +
                           " --functional half_lifted_moment --dt 0.01 "
                           "--steps 10 --out " + csv.string() + " --frames " +
                           frames.string());
  CHECK(r.exit_code == 0);
  const auto arr = nlohmann::json::parse(slurp(frames));
  CHECK(arr.size() == 11);
  // atom drifts toward the origin
  CHECK(arr[10]["points"][0][0].get<double>() <
        arr[0]["points"][0][0].get<double>());
}
