#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "streamline/cli.hpp"
#include "streamline/examples.hpp"

using namespace streamline;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("streamline_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> v;
  std::stringstream s(line);
  for (std::string c; std::getline(s, c, ',');) v.push_back(c);
  return v;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  auto p = dir / "config.json";
  std::ofstream(p) << j.dump();
  return p;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config errors exit with 2") {
    auto dir = scratch("config");
    CHECK(run({"synth", "--example", "no-such-example"}).code == ExitConfig);
    CHECK(run({"synth", "--config", (dir / "missing.json").string()}).code == ExitConfig);
    CHECK(run({"synth"}).code == ExitConfig);
    CHECK(run({"frobnicate"}).code == ExitConfig);
    CHECK(run({"synth", "--example", "identity", "--levels", "2"}).code == ExitConfig);

    auto j = example_config("identity");
    j["grdi"] = j["grid"];
    auto r = run({"synth", "--config", write_config(dir, j).string(), "--out", dir.string()});
    CHECK(r.code == ExitConfig);
    CHECK(r.err.find("grdi") != std::string::npos);

    std::ofstream(dir / "broken.json") << "{\"density\": ";
    CHECK(run({"synth", "--config", (dir / "broken.json").string()}).code == ExitConfig);
  }

  TEST_CASE("empty image exits with 3 and names the ranges") {
    auto dir = scratch("empty");
    auto r = run({"synth", "--example", "shallow-empty", "--out", dir.string()});
    CHECK(r.code == ExitEmpty);
    CHECK(r.err.find("Sigma_f = [") != std::string::npos);
    CHECK(r.err.find("Im(phi)") != std::string::npos);
  }

  TEST_CASE("threshold breach exits with 4") {
    auto dir = scratch("threshold");
    auto j = example_config("extremal-ws");
    j["verify"]["threshold"] = 0.0;
    j["verify"].erase("energy");
    auto r = run({"verify", "--config", write_config(dir, j).string(), "--out", dir.string()});
    CHECK(r.code == ExitThreshold);
    auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK_FALSE(report["pass"].get<bool>());
  }

  TEST_CASE("field.csv header and shallow vortex values") {
    auto dir = scratch("field");
    REQUIRE(run({"synth", "--example", "shallow-vortex", "--out", dir.string()}).code == ExitOk);
    std::ifstream f(dir / "field.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "x1,x2,w1,w2,Q,regime,branch,flags");
    std::size_t rows = 0, checked = 0;
    while (std::getline(f, line)) {
      ++rows;
      auto c = split(line);
      REQUIRE(c.size() == 8u);
      const double x = std::stod(c[0]), y = std::stod(c[1]);
      if (c[2] == "nan" || std::stoul(c[7]) != 0) continue;
      CHECK(std::stod(c[2]) == doctest::Approx(-y).epsilon(1e-12));
      CHECK(std::stod(c[3]) == doctest::Approx(x).epsilon(1e-12));
      ++checked;
    }
    CHECK(rows == 65u * 65u);
    CHECK(checked > 1900u);  // the disk t < 2R minus singular points
  }

  TEST_CASE("forms.csv of the four-dimensional example") {
    auto dir = scratch("forms");
    REQUIRE(run({"forms", "--example", "born-infeld-4d", "--out", dir.string()}).code == ExitOk);
    std::ifstream f(dir / "forms.csv");
    std::string line;
    std::getline(f, line);
    auto head = split(line);
    CHECK(head[4] == "12");
    CHECK(head[9] == "34");
    CHECK(std::count_if(head.begin(), head.end(), [](const std::string& s) {
            return s.size() == 2 && std::isdigit(s[0]) && std::isdigit(s[1]);
          }) == 6);
    auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report["columns"] == 6);
    CHECK(report["gamma"]["max_defect"].get<double>() < 1e-10);
  }

  TEST_CASE("reruns are byte-identical") {
    auto a = scratch("rerun_a"), b = scratch("rerun_b");
    for (const auto& cmd : {"synth", "singular", "frobenius"}) {
      REQUIRE(run({cmd, "--example", "extremal-patch", "--out", a.string()}).code == ExitOk);
      REQUIRE(run({cmd, "--example", "extremal-patch", "--out", b.string(), "--threads", "3"})
                  .code == ExitOk);
      for (const auto& e : fs::directory_iterator(a))
        CHECK_MESSAGE(slurp(e.path()) == slurp(b / e.path().filename()), e.path().filename());
    }
  }

  TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 5e-324, -0.0}) {
      const std::string s = format_number(v);
      CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
    CHECK(format_number(1.0) == "1");
  }

  TEST_CASE("every example is invocable") {
    auto listed = run({"--list-examples"});
    CHECK(listed.code == ExitOk);
    auto dir = scratch("examples");
    for (const auto& name : example_names()) {
      CHECK(listed.out.find(name + "\n") != std::string::npos);
      auto j = example_config(name);
      const char* cmd = j.contains("forms") && !j.contains("drive") ? "forms" : "synth";
      auto r = run({cmd, "--example", name, "--out", (dir / name).string()});
      if (name == "shallow-empty")
        CHECK(r.code == ExitEmpty);
      else
        CHECK_MESSAGE(r.code == ExitOk, name, ": ", r.err);
      CHECK(fs::exists(dir / name / "report.json"));
    }
  }
}
