#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "repu/serialize.hpp"
#include "repu/simbench.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "repu-lab");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = repu::cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("repu_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("cli: pdim") {
  auto r = run({"pdim", "--depth", "2", "--size", "10", "--neurons", "5", "--p", "2"});
  CHECK(r.code == 0);
  CHECK(r.out == "518.63\n");  // 120 * (2 + log2 5)
  CHECK(r.err.find("# seed:") != std::string::npos);
  CHECK(r.err.find("# config: depth=2") != std::string::npos);
}

TEST_CASE("cli: compile x^2, derive, evaluate") {
  TempDir dir;
  repu::write_file_atomic(dir / "sq.poly", "2 1\n");
  CHECK(run({"compile-poly", "--poly", dir / "sq.poly", "--p", "2", "--out", dir / "sq.json", "--report",
             dir / "sq.report.json"})
            .code == 0);
  CHECK(fs::exists(dir / "sq.report.json"));
  auto g = run({"grad-net", "--in", dir / "sq.json", "--coord", "1", "--out", dir / "dsq.json", "--audit"});
  CHECK(g.code == 0);
  auto e = run({"eval", "--net", dir / "dsq.json", "--x", "3"});
  CHECK(e.code == 0);
  CHECK(std::stod(e.out) == doctest::Approx(6.0));

  auto all = run({"grad-net", "--in", dir / "sq.json", "--coord", "all", "--out", dir / "g.json"});
  CHECK(all.code == 0);
  CHECK(run({"grad-net", "--in", dir / "sq.json", "--coord", "2", "--out", dir / "bad.json"}).code == 1);
}

TEST_CASE("cli: usage errors exit 1") {
  TempDir dir;
  repu::write_file_atomic(dir / "sq.poly", "2 1\n");
  auto r = run({"compile-poly", "--poly", dir / "sq.poly"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--out") != std::string::npos);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"compile-poly", "--poly", dir / "missing.poly", "--out", dir / "x.json"}).code == 1);
  CHECK(run({"--help"}).code == 0);
  repu::write_file_atomic(dir / "bad.poly", "2 x\n");
  CHECK(run({"compile-poly", "--poly", dir / "bad.poly", "--out", dir / "x.json"}).code == 1);
}

TEST_CASE("cli: generate, fit, train and seed fallback") {
  TempDir dir;
  CHECK(run({"generate", "--model", "U-Exp", "--n", "32", "--seed", "3", "--out", dir / "d.csv"}).code == 0);
  auto fit = run({"fit", "--method", "pava", "--data", dir / "d.csv", "--grid", "11", "--out", dir / "p.csv"});
  CHECK(fit.code == 0);
  auto text = repu::read_file(dir / "p.csv");
  CHECK(text.substr(0, text.find('\n')) == "x1,yhat");
  CHECK(std::count(text.begin(), text.end(), '\n') == 12);

  auto tr = run({"train", "--loss", "pdir", "--data", dir / "d.csv", "--net", "4x1:p2", "--epochs", "20",
                 "--lambda", "logn", "--out", dir / "n.json", "--history", dir / "h.csv"});
  CHECK(tr.code == 0);
  auto hist = repu::read_file(dir / "h.csv");
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 21);
  CHECK(run({"eval", "--net", dir / "n.json", "--points", dir / "d.csv", "--out", dir / "e.csv"}).code == 0);

  setenv("REPU_LAB_SEED", "41", 1);
  auto g = run({"generate", "--model", "U-Exp", "--n", "32", "--out", dir / "d41.csv"});
  unsetenv("REPU_LAB_SEED");
  CHECK(g.err.find("# seed: 41") != std::string::npos);
  CHECK(repu::read_file(dir / "d41.csv") == repu::dataset_to_csv(repu::generate(repu::model_by_name("U-Exp"), 32, 41)));
}

TEST_CASE("cli: simulate, report and config file") {
  TempDir dir;
  repu::write_file_atomic(dir / "run.toml", "[simulate]\nmodel=\"U-Step\"\nn=16\nmethods=\"pava,block\"\nreps=2\n");
  auto s = run({"--config", dir / "run.toml", "simulate", "--out", dir / "r.csv"});
  CHECK(s.code == 0);
  auto rows = repu::parse_metrics_csv(repu::read_file(dir / "r.csv"));
  CHECK(rows.size() == 4);
  auto again = run({"--config", dir / "run.toml", "simulate", "--out", dir / "r2.csv"});
  CHECK(repu::read_file(dir / "r.csv") == repu::read_file(dir / "r2.csv"));

  auto t = run({"report", "--in", dir / "r.csv", "--table"});
  CHECK(t.code == 0);
  CHECK(t.out.find("pava") != std::string::npos);
  auto p = run({"report", "--in", dir / "r.csv", "--plot-data"});
  CHECK(p.out.rfind("model,method,x,y,band_lo,band_hi", 0) == 0);
}
