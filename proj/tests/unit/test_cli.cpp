#include "doctest.h"

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ruinsim/cli.hpp"

using namespace ruinsim;
namespace fs = std::filesystem;

namespace {

const char* kBalanced = R"({
  "model": {
    "f": {"kind": "shifted", "base": {"kind": "rvstar", "alpha": 2, "beta": 2, "scale": 1}, "offset": -1},
    "g": {"kind": "rvstar", "alpha": 2, "beta": 2, "scale": 0.3},
    "horizon": [1, 3]
  },
  "run": {"samples": 20000, "moment_samples": 20000, "seed": 42, "x_grid": [1, 5, 20]},
  "output": {"csv_path": "ignored.csv"}
})";

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / ("ruinsim_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

fs::path write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "ruinsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Reference FNV-1a, written independently of the library.
std::string reference_hash(const std::string& text) {
  unsigned long long h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", h);
  return buf;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(kBalanced);
  CHECK(c.model.alpha == 2.0);  // from the classifier
  CHECK(c.horizons == std::vector<int>{1, 3});
  CHECK(std::get<FiniteHorizon>(c.model.horizon).n == 3);
  CHECK(c.run.seed == 42);
  CHECK(c.output.csv_path == "ignored.csv");
  CHECK(c.model.f.is_shifted());

  try {
    parse_config("{\n  \"model\": {\n    \"f\": 1,,\n  }\n}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3, column 12") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"model": {"f": {"kind": "pareto", "alpha": 2, "scale": 1},
      "g": {"kind": "pareto", "alpha": 2, "scale": 1, "shape": 3}}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"f": {"kind": "pareto", "alpha": 2, "scale": 1},
      "g": {"kind": "gamma"}}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"f": {"kind": "pareto", "alpha": -2, "scale": 1},
      "g": {"kind": "pareto", "alpha": 2, "scale": 1}}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"f": {"kind": "pareto", "alpha": 2, "scale": 1},
      "g": {"kind": "pareto", "alpha": 2, "scale": 1}}, "run": {"x_grid": [3, 1]}})"),
                  ConfigError);

  const auto inf = parse_config(R"({"model": {"f": {"kind": "pareto", "alpha": 3, "scale": 1},
      "g": {"kind": "rvstar", "alpha": 2, "beta": 2, "scale": 0.5},
      "horizon": "infinite", "truncation_tol": 1e-5,
      "dependence": {"kind": "fgm", "theta": -0.5}}})");
  CHECK(inf.horizons.empty());
  CHECK(std::get<InfiniteHorizon>(inf.model.horizon).truncation_tol == 1e-5);
  CHECK(std::get<FgmDependence>(inf.model.dependence).theta == -0.5);
}

TEST_CASE("canonical form and hash") {
  const auto c = parse_config(kBalanced);
  const std::string canon = canonical_json(c);
  CHECK(canon.find("csv_path") == std::string::npos);
  CHECK(canon.find("workers") == std::string::npos);
  // Key order and whitespace in the source do not matter.
  const auto reordered = parse_config(R"({"run": {"seed": 42, "x_grid": [1, 5, 20],
      "moment_samples": 20000, "samples": 20000, "workers": 8},
    "model": {"horizon": [1, 3], "alpha": 2.0,
      "g": {"scale": 0.3, "beta": 2, "alpha": 2, "kind": "rvstar"},
      "f": {"offset": -1, "kind": "shifted", "base": {"kind": "rvstar", "alpha": 2, "beta": 2, "scale": 1}}}})");
  CHECK(canonical_json(reordered) == canon);
  CHECK(fnv1a64_hex(canon) == reference_hash(canon));
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  const std::string header = csv_header_comment(c, "simulate");
  CHECK(header.find("config_fnv1a64=" + reference_hash(canon)) != std::string::npos);
  CHECK(header.find("seed=42") != std::string::npos);
  CHECK(header.front() == '#');
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 2.5e-300, 6.02214076e23, -0.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
}

TEST_CASE("exit codes") {
  const auto dir = scratch();
  const auto bad = write(dir / "bad.json", "{\"model\": [}");
  auto r = run({"simulate", "--config", bad.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("line 1") != std::string::npos);

  const auto violated = write(dir / "violated.json", R"({"model": {
      "f": {"kind": "lognormal", "mu": 0, "sigma": 1},
      "g": {"kind": "lognormal", "mu": 0, "sigma": 0.5}}})");
  r = run({"coeffs", "--config", violated.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("assumption 2.1 not certified for this configuration") != std::string::npos);

  CHECK(run({"simulate", "--config", (dir / "missing.json").string()}).code == 2);
  CHECK(run({"verify", "nope", "--config", bad.string()}).code == 2);
  CHECK(run({"--help"}).code == 0);

  const auto cfg = write(dir / "bal.json", kBalanced);
  r = run({"verify", "potter", "--config", cfg.string(), "--out", (dir / "p.csv").string()});
  CHECK(r.code == 0);
  CHECK(r.out.starts_with("potter PASS"));
  // Without an explicit grid c2 uses x in [10, 1000], statistic about 0.4.
  const auto window = write(dir / "window.json", R"({"model": {
      "f": {"kind": "rvstar", "alpha": 2, "beta": 2, "scale": 1},
      "g": {"kind": "rvstar", "alpha": 2, "beta": 2, "scale": 0.3}}})");
  r = run({"verify", "c2", "--config", window.string(), "--out", (dir / "c.csv").string(),
           "--tolerance", "0.5"});
  CHECK(r.code == 0);
  r = run({"verify", "c2", "--config", window.string(), "--out", (dir / "c.csv").string(),
           "--tolerance", "0.01"});
  CHECK(r.code == 1);
  CHECK(r.out.starts_with("c2 FAIL"));
  CHECK(run({"fgm", "--config", cfg.string()}).code == 2);
}

TEST_CASE("simulate output") {
  const auto dir = scratch();
  const auto cfg = write(dir / "bal.json", kBalanced);
  const auto a = dir / "a.csv";
  const auto b = dir / "b.csv";
  const auto svg = dir / "a.svg";
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", a.string(), "--svg", svg.string()})
              .code == 0);
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", b.string(), "--workers", "3"})
              .code == 0);
  const std::string text = slurp(a);
  CHECK(text == slurp(b));
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  CHECK(line.starts_with("# ruinsim "));
  std::getline(lines, line);
  CHECK(line + "\n" == estimate_csv_header());
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 2 * 2 * 3);  // targets x horizons x grid
  CHECK(slurp(svg).starts_with("<svg"));

  // A different seed changes the results and the header.
  const auto c = dir / "c.csv";
  REQUIRE(run({"simulate", "--config", cfg.string(), "--out", c.string(), "--seed", "43"}).code ==
          0);
  CHECK(slurp(c) != text);

  const auto k = dir / "k.csv";
  REQUIRE(run({"coeffs", "--config", cfg.string(), "--out", k.string(), "--infinite"}).code == 0);
  const std::string coeffs = slurp(k);
  CHECK(coeffs.find("horizon,alpha,mu_alpha,A,B,C,se_B,se_C\ninf,2,0.27,") != std::string::npos);

  const auto f = dir / "f.csv";
  CHECK(run({"fgm", "--config", cfg.string(), "--out", f.string(), "--theta", "0.5", "-n", "2"})
            .code == 0);
  fs::remove_all(dir);
}
