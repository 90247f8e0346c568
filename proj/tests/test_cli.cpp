#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dcftp/batch.hpp"
#include "dcftp/cli.hpp"
#include "dcftp/config.hpp"
#include "dcftp/error.hpp"
#include "support.hpp"

using namespace dcftp;
namespace fs = std::filesystem;

namespace {

const std::string config_dir = DCFTP_CONFIG_DIR;

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dcftp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "dcftp_test_cli";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    return e.what();
  }
  FAIL("accepted: " << text);
  return "";
}

const char* kIni = R"(# comment
[network]
d = 2
Q = [[0, 0.11], [0.1, 0]]

[network.station.1]
arrival = exp(rate=0.225)
service = exp(rate=1.0)

[network.station.2]
arrival = none
service = erlang(k=2, rate=3)

[sampler]
milestone_m = 2.5
ct_growth = 3

[batch]
n = 17
seed = 5
workers = 2
)";

}  // namespace

TEST_CASE("ini and json configs agree") {
  auto a = parse_config(kIni);
  auto b = parse_config(R"J({
    "network": {"d": 2, "Q": [[0, 0.11], [0.1, 0]],
                "stations": [{"arrival": "exp(rate=0.225)", "service": "exp(rate=1.0)"},
                             {"arrival": null, "service": "erlang(k=2, rate=3)"}]},
    "sampler": {"milestone_m": 2.5, "ct_growth": 3},
    "batch": {"n": 17, "seed": 5, "workers": 2}
  })J");
  for (const auto* c : {&a, &b}) {
    CHECK(c->network.d == 2);
    CHECK(c->network.Q(0, 1) == doctest::Approx(0.11));
    CHECK(c->network.arrivals[0]->mean() == doctest::Approx(1 / 0.225));
    CHECK_FALSE(c->network.arrivals[1]);
    CHECK(c->network.services[1].mean() == doctest::Approx(2.0 / 3));
    CHECK(*c->sampler.milestone_m == 2.5);
    CHECK(c->sampler.ct_growth == 3);
    CHECK(c->batch.n == 17);
    CHECK(c->batch.seed == 5);
    CHECK(c->batch.seed_given);
    CHECK(c->batch.workers == 2);
  }
  CHECK(a.network.Q == b.network.Q);
}

TEST_CASE("config errors name the line and field") {
  std::string bad = kIni;
  bad.replace(bad.find("exp(rate=1.0)"), 13, "exp(rate=-1)");
  auto msg = config_error(bad);
  CHECK(msg.find("line 8") != std::string::npos);
  CHECK(msg.find("network.station.1.service") != std::string::npos);

  std::string unknown = kIni;
  unknown.replace(unknown.find("ct_growth"), 9, "ct_grow");
  msg = config_error(unknown);
  CHECK(msg.find("line 16") != std::string::npos);
  CHECK(msg.find("ct_grow") != std::string::npos);

  std::string growth = kIni;
  growth.replace(growth.find("ct_growth = 3"), 13, "ct_growth = 0.5");
  CHECK(config_error(growth).find("ct_growth") != std::string::npos);

  std::string q = kIni;
  q.replace(q.find("[[0, 0.11], [0.1, 0]]"), 21, "[[0, 0.11]]");
  CHECK(config_error(q).find("Q") != std::string::npos);

  config_error("{\"network\": ");
  CHECK_THROWS_AS(load_config("/nonexistent/file.ini"), Error);
}

TEST_CASE("batch results do not depend on the worker count") {
  auto ctx = SamplerContext::make(testing::table1(1));
  auto a = run_batch(ctx, 40, 9, 1);
  auto b = run_batch(ctx, 40, 9, 4);
  REQUIRE(a.size() == 40);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].state.y == b[k].state.y);
    CHECK(a[k].record.tau == b[k].record.tau);
    auto single = sample_stationary(ctx, sample_seed(9, k));
    CHECK(single.state.y == a[k].state.y);
  }
}

TEST_CASE("parallel_for rethrows") {
  CHECK_THROWS_AS(parallel_for(100, 3,
                               [](std::size_t k) {
                                 if (k == 37) throw Error(ErrorCode::InvalidArgument, "boom");
                               }),
                  Error);
}

TEST_CASE("validate") {
  auto ok = cli({"validate", "--config", config_dir + "/table1_col1.ini"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("stable: yes") != std::string::npos);
  auto mixed = cli({"validate", "--config", config_dir + "/mixed3.ini"});
  CHECK(mixed.code == 0);
  auto bad = cli({"validate", "--config", config_dir + "/unstable.ini"});
  CHECK(bad.code != 0);
  CHECK(bad.out.find("station 2") != std::string::npos);
  CHECK(cli({"validate", "--config", "/nonexistent.ini"}).code != 0);
}

TEST_CASE("sample, analyze and baseline") {
  auto samples = scratch("s.jsonl");
  auto r = cli({"sample", "--config", config_dir + "/table1_col1.ini", "--n", "30", "--out", samples.string()});
  REQUIRE(r.code == 0);
  std::ifstream in(samples);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    CHECK(line.rfind("{\"y\":", 0) == 0);
    auto j = nlohmann::json::parse(line);
    CHECK(j["y"].size() == 2);
    CHECK(j.contains("residual_service"));
    CHECK(j.contains("residual_arrival"));
    CHECK(j["tau"].get<double>() <= 0);
    CHECK(j["rounds"].get<int>() >= 1);
    ++lines;
  }
  CHECK(lines == 30);

  auto hist = scratch("h.csv");
  auto a = cli({"analyze", "--in", samples.string(), "--config", config_dir + "/table1_col1.ini", "--hist",
                hist.string()});
  CHECK(a.code == 0);
  CHECK(a.out.rfind("station,n,mean", 0) == 0);
  CHECK(slurp(hist).rfind("y1,y2,count\n", 0) == 0);

  auto b = cli({"baseline", "--config", config_dir + "/mixed3.ini", "--horizon", "2000", "--seed", "3"});
  CHECK(b.code == 0);
  CHECK(b.out.rfind("# biased baseline", 0) == 0);
  CHECK(b.out.find("\nstation,n,mean") != std::string::npos);

  auto noseed = scratch("noseed.ini");
  std::string text = slurp(config_dir + "/table1_col1.ini");
  text.erase(text.find("seed = 7"), 8);
  write(noseed, text);
  auto ns = cli({"sample", "--config", noseed.string(), "--n", "2"});
  CHECK(ns.code != 0);
  CHECK(ns.err.find("seed") != std::string::npos);
}

TEST_CASE("table1 command") {
  auto r = cli({"table1", "--n", "20", "--seed", "2", "--workers", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("TrueValue") != std::string::npos);
}

TEST_CASE("sample output is byte-identical across runs and worker counts") {
  const std::string exe = DCFTP_EXE;
  auto run = [&](int workers, const std::string& name) {
    auto p = scratch(name);
    std::string cmd = "DCFTP_LOG_LEVEL=quiet \"" + exe + "\" sample --config \"" + config_dir +
                      "/mixed3.ini\" --n 60 --seed 123 --workers " + std::to_string(workers) + " --out \"" +
                      p.string() + "\"";
    REQUIRE(std::system(cmd.c_str()) == 0);
    return slurp(p);
  };
  auto a = run(1, "w1a.jsonl"), b = run(1, "w1b.jsonl"), c = run(4, "w4.jsonl");
  CHECK(!a.empty());
  CHECK(a == b);
  CHECK(a == c);
}
