#include <doctest.h>

#include <json.hpp>

#include "../cli_runner.hpp"
#include "../common.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kLevel = testing_env::level_path("classic_01.txt").string();
const std::string kConfigs = WCRL_CONFIG_DIR;

struct Snapshot {
  cli::Run run;
  std::map<std::string, std::string> files;
};

// Runs the same command twice into the same fresh directory.
std::pair<Snapshot, Snapshot> twice(const std::string& name, const std::vector<std::string>& args,
                                    const std::string& stdin_path = "") {
  std::pair<Snapshot, Snapshot> out;
  for (Snapshot* s : {&out.first, &out.second}) {
    const fs::path dir = cli::fresh_dir(name);
    s->run = cli::run(args, stdin_path);
    s->files = cli::tree(dir);
  }
  return out;
}

fs::path dir_of(const std::string& name) { return fs::temp_directory_path() / ("wcrl_cli_" + name); }

}  // namespace

TEST_CASE("extract") {
  const fs::path d = dir_of("extract");
  const auto [a, b] = twice("extract", {"extract", kLevel, "--out", (d / "dump.json").string()});
  REQUIRE(a.run.status == 0);
  CHECK(a.run.out == b.run.out);
  CHECK(a.files == b.files);
  CHECK(a.run.out.rfind("patterns ", 0) == 0);
  const json dump = json::parse(a.files.at("dump.json"));
  CHECK(dump.is_object());

  const auto rare = cli::run({"extract", kLevel, "--exclude-rare"});
  REQUIRE(rare.status == 0);
  auto count = [](const std::string& out) { return std::stoul(out.substr(9, out.find('\n') - 9)); };
  CHECK(count(rare.out) <= count(a.run.out));
  CHECK(count(a.run.out) > 0);
}

TEST_CASE("generate with every policy") {
  for (const std::string policy : {"random", "uniform", "greedy"}) {
    const fs::path d = dir_of("gen");
    const auto [a, b] = twice("gen", {"generate", "--config", kConfigs + "/si.cfg", "--policy", policy,
                                      "--count", "6", "--seed", "4", "--out", d.string()});
    REQUIRE(a.run.status == 0);
    CHECK(a.run.out == b.run.out);
    CHECK(a.files == b.files);
    CHECK(a.files.count("episodes.jsonl") == 1);
    CHECK(a.files.count("report.json") == 1);
    CHECK(a.files.count("traces/0005.jsonl") == 1);
  }
  const auto other = twice("gen", {"generate", "--config", kConfigs + "/si.cfg", "--count", "6",
                                   "--seed", "5", "--out", dir_of("gen").string()});
  const auto base = twice("gen", {"generate", "--config", kConfigs + "/si.cfg", "--count", "6",
                                  "--seed", "4", "--out", dir_of("gen").string()});
  CHECK(other.first.files != base.first.files);
}

TEST_CASE("generate with zero count writes nothing") {
  const fs::path d = dir_of("empty") / "out";
  cli::fresh_dir("empty");
  const auto r = cli::run({"generate", "--config", kConfigs + "/si.cfg", "--count", "0", "--out", d.string()});
  CHECK(r.status == 0);
  CHECK_FALSE(fs::exists(d));
}

TEST_CASE("train, then generate from the trained params") {
  const fs::path d = dir_of("train");
  const std::vector<std::string> args = {"train",        "--inputs", kLevel, "--height",      "8",
                                         "--width",      "11",       "--seed", "2",           "--population",
                                         "4",            "--generations", "3", "--episodes",  "1",
                                         "--k",          "1",        "--out",  d.string()};
  const auto [a, b] = twice("train", args);
  REQUIRE(a.run.status == 0);
  CHECK(a.run.out == b.run.out);
  CHECK(a.files == b.files);
  CHECK(a.files.count("params.json") == 1);
  CHECK(a.files.count("best.json") == 1);
  CHECK(std::count(a.files.at("curve.jsonl").begin(), a.files.at("curve.jsonl").end(), '\n') == 3);

  const fs::path params = fs::temp_directory_path() / "wcrl_cli_params.json";
  {
    std::ofstream(params) << a.files.at("params.json");
  }
  const fs::path g = dir_of("gen_es");
  const auto [x, y] = twice("gen_es", {"generate", "--inputs", kLevel, "--height", "8", "--width", "11",
                                       "--policy", "es:" + params.string(), "--count", "3", "--out",
                                       g.string()});
  REQUIRE(x.run.status == 0);
  CHECK(x.files == y.files);
  CHECK(x.files.count("levels/0000.txt") + x.files.count("traces/0000.jsonl") >= 1);
}

TEST_CASE("evaluate") {
  const fs::path d = dir_of("evalsrc");
  cli::fresh_dir("evalsrc");
  REQUIRE(cli::run({"generate", "--config", kConfigs + "/si.cfg", "--count", "5", "--out", d.string()}).status ==
          0);
  const auto a = cli::run({"evaluate", d.string()});
  const auto b = cli::run({"evaluate", d.string()});
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  const json report = json::parse(a.out);
  CHECK(report["episodes"] == 5);

  const auto single = cli::run({"evaluate", kLevel});
  REQUIRE(single.status == 0);
  const json j = json::parse(single.out);
  CHECK(j["report"]["playable"].is_boolean());

  const auto per_level = cli::run({"evaluate", "--playability", d.string()});
  REQUIRE(per_level.status == 0);
  std::size_t lines = 0;
  std::istringstream in(per_level.out);
  for (std::string line; std::getline(in, line); ++lines) CHECK(json::parse(line).contains("report"));
  CHECK(lines == cli::tree(d / "levels").size());
  CHECK(per_level.out == cli::run({"evaluate", "--playability", d.string()}).out);
}

TEST_CASE("run-grid") {
  const fs::path d = dir_of("grid");
  const auto [a, b] =
      twice("grid", {"run-grid", "--config", kConfigs + "/grid_tiny.cfg", "--out", d.string()});
  REQUIRE(a.run.status == 0);
  CHECK(a.run.out == b.run.out);
  CHECK(a.files == b.files);
  const std::string& csv = a.files.at("results.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
}

TEST_CASE("serve over stdio") {
  const fs::path d = cli::fresh_dir("serve");
  {
    std::ofstream req(d / "requests.ndjson");
    req << R"({"cmd":"reset","seed":7})" "\n" R"({"cmd":"step","action":-3})" "\n"
        << R"({"cmd":"close"})" "\n";
  }
  const std::vector<std::string> args = {"serve", "--config", kConfigs + "/si.cfg"};
  const auto a = cli::run(args, (d / "requests.ndjson").string());
  const auto b = cli::run(args, (d / "requests.ndjson").string());
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  std::istringstream in(a.out);
  std::string reset, err, closed;
  std::getline(in, reset);
  std::getline(in, err);
  std::getline(in, closed);
  CHECK(json::parse(reset)["obs"]["shape"][2] == 7);
  CHECK(json::parse(err)["error"] == "action_out_of_range");
  CHECK(closed == R"({"closed":true})");
}

TEST_CASE("rank-companions and render") {
  const fs::path d = dir_of("rank");
  std::vector<std::string> args = {"rank-companions", "--anchor", kLevel, "--companions", "2",
                                   "--write-manifests", d.string()};
  for (const auto& e : fs::directory_iterator(fs::path(WCRL_DATA_DIR) / "levels")) args.push_back(e.path().string());
  const auto [a, b] = twice("rank", args);
  REQUIRE(a.run.status == 0);
  CHECK(a.run.out == b.run.out);
  CHECK(a.files == b.files);
  CHECK(a.files.size() == 3);

  const fs::path r = dir_of("render");
  const auto [t1, t2] = twice("render", {"render", kLevel, "--format", "png", "--scale", "2", "--out",
                                         (r / "level.png").string()});
  REQUIRE(t1.run.status == 0);
  CHECK(t1.files == t2.files);
  CHECK(t1.files.at("level.png").substr(1, 3) == "PNG");
  const auto text = cli::run({"render", kLevel});
  CHECK(text.out == cli::slurp(kLevel));
}

TEST_CASE("errors exit non-zero") {
  CHECK(cli::run({"extract", "/nonexistent/level.txt"}).status == 1);
  CHECK(cli::run({"generate", "--config", "/nonexistent.cfg", "--count", "1"}).status != 0);
  CHECK(cli::run({"bogus"}).status != 0);
}
