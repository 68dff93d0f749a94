#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nahmkn/cli.hpp"

using namespace nahmkn;
namespace fs = std::filesystem;
using cli::RunConfig;
using io::Json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nahmkn_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

RunConfig make(const std::string& cmd, const fs::path& out, Json params = Json::object()) {
  RunConfig c;
  c.command = cmd;
  c.out = out.string();
  c.params = std::move(params);
  return c;
}

int run_quiet(const RunConfig& c) {
  std::ostringstream log;
  const int code = cli::run(c, log);
  if (code != 0) std::cerr << log.str();
  return code;
}

int shell(const std::string& args) {
  const int status = std::system((std::string(NAHMKN_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Io, Fnv1a) {
  EXPECT_EQ(io::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::hex(io::fnv1a("a")), "af63dc4c8601ec8c");
}

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5})
    EXPECT_EQ(std::strtod(io::format_double(v).c_str(), nullptr), v);
  EXPECT_EQ(io::format_double(0.25), "0.25");
}

TEST(Io, MatrixJsonRoundTrip) {
  Matrix m(2, 2);
  m << Complex(1, 2), Complex(0, -1), Complex(3.5, 0), Complex(-0.25, 4);
  EXPECT_EQ(io::matrix_from_json(io::to_json_matrix(m), "m"), m);
  EXPECT_EQ(io::matrix_from_json(Json::parse("[[1, 0], [0, 1]]"), "m"), identity(2));
  EXPECT_THROW(io::matrix_from_json(Json::parse("[[1, 0], [0]]"), "m"), InvalidProblem);
  EXPECT_THROW(io::matrix_from_json(Json::parse("[[\"x\"]]"), "m"), InvalidProblem);
}

TEST(Io, CsvQuotingAndWidth) {
  io::CsvWriter w({"c", "h", 1}, {"a", "b"});
  w.cell("x,y").cell(0.5);
  w.end_row();
  EXPECT_EQ(w.text(), "# schema=nahmkn/c/v1 config_hash=h seed=1\na,b\n\"x,y\",0.5\n");
  w.cell(1.0);
  EXPECT_THROW(w.end_row(), Error);
}

TEST(Config, Validation) {
  RunConfig base;
  base.command = "psi";
  EXPECT_THROW(cli::apply_config(Json::parse(R"({"bogus": 1})"), base), cli::SchemaError);
  EXPECT_THROW(cli::apply_config(Json::parse(R"({"n": 4})"), base), cli::SchemaError);
  EXPECT_THROW(cli::apply_config(Json::parse(R"({"step": 0.5})"), base), cli::SchemaError);
  EXPECT_THROW(cli::apply_config(Json::parse(R"({"seed": -1})"), base), cli::SchemaError);
  EXPECT_THROW(cli::apply_config(Json::parse(R"({"samples": 0})"), base), cli::SchemaError);
  EXPECT_THROW(cli::apply_config(Json::parse(R"({"command": "moment"})"), base), cli::SchemaError);
  EXPECT_THROW(cli::apply_config(Json::parse(R"({"tolerances": {"x": 0.1}})"), base), cli::SchemaError);
  const auto c = cli::apply_config(Json::parse(R"({"n": 3, "seed": 9, "step": 0.001, "params": {"a": 1}})"), base);
  EXPECT_EQ(c.n, 3);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.params["a"], 1);
}

TEST(Config, HashIgnoresOutputDirectory) {
  auto a = make("psi", "x"), b = make("psi", "y");
  EXPECT_EQ(a.hash(), b.hash());
  b.seed = 43;
  EXPECT_NE(a.hash(), b.hash());
  // the resolved sample count enters the hash
  auto g1 = make("growth-scan", "x"), g2 = make("growth-scan", "x");
  g2.samples = 1000;
  EXPECT_EQ(g1.hash(), g2.hash());
}

TEST(Run, PsiAtOriginGivesIdentity) {
  const auto out = scratch("psi");
  ASSERT_EQ(run_quiet(make("psi", out)), 0);
  const auto j = io::read_json(out / "psi.json");
  EXPECT_EQ(j["schema"], "nahmkn/psi/v1");
  EXPECT_EQ(j["seed"], 42);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(io::matrix_from_json(j["result"]["record"]["g"], "g"), identity(2));
  EXPECT_EQ(io::matrix_from_json(j["result"]["record"]["Y"], "Y"), zeros(2));
}

TEST(Run, CounterexampleDefaults) {
  const auto out = scratch("cx");
  ASSERT_EQ(run_quiet(make("counterexample", out)), 0);
  const auto j = io::read_json(out / "counterexample.json");
  bool saw3 = false;
  for (const auto& e : j["result"]["emptiness"])
    if (e["n"] == 3) {
      saw3 = true;
      EXPECT_TRUE(e["empty"].get<bool>());
    }
  EXPECT_TRUE(saw3);
  const auto csv = slurp(out / "counterexample.csv");
  EXPECT_EQ(csv.rfind("# schema=nahmkn/counterexample/v1 config_hash=" + j["config_hash"].get<std::string>(), 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10002);
}

TEST(Run, VerifyIdentitiesSeed42) {
  const auto out = scratch("verify");
  auto c = make("verify-identities", out);
  c.samples = 100;
  ASSERT_EQ(run_quiet(c), 0);
  const auto j = io::read_json(out / "verify-identities.json");
  EXPECT_EQ(j["result"]["suites"].size(), 5u);
  for (const auto& s : j["result"]["suites"]) EXPECT_TRUE(s["pass"].get<bool>()) << s["suite"];
}

TEST(Run, KnClassifyVerdicts) {
  const auto out = scratch("kn");
  // weight 1 with character 1: semistable away from 0
  ASSERT_EQ(run_quiet(make("kn-classify", out, Json::parse(R"({"problem": {"weights": [[1]], "character": [1]}, "point": [[0.3, 0.1]]})"))), 0);
  EXPECT_EQ(io::read_json(out / "kn-classify.json")["result"]["verdict"], "semistable");
  // weight 1 with character -1: unstable
  ASSERT_EQ(run_quiet(make("kn-classify", out, Json::parse(R"({"problem": {"weights": [[1]], "character": [-1]}, "point": [1]})"))), 0);
  const auto j = io::read_json(out / "kn-classify.json");
  EXPECT_EQ(j["result"]["verdict"], "unstable");
  EXPECT_TRUE(j["result"]["witness"].contains("direction"));
}

TEST(Run, ExitCodes) {
  const auto out = scratch("codes");
  EXPECT_EQ(run_quiet(make("psi", out, Json::parse(R"({"nope": 1})"))), cli::kExitSchema);
  EXPECT_EQ(run_quiet(make("psi", out, Json::parse(R"({"k": [[1, 0], [0, 2]]})"))), cli::kExitSchema);  // not in SU(2)
  auto three = make("growth-scan", out);
  three.n = 3;
  EXPECT_EQ(run_quiet(three), cli::kExitSchema);
  // X = -2 T lies outside W: numeric failure
  const auto far = io::to_json(scaled(su2_triple(), -2.0));
  EXPECT_EQ(run_quiet(make("psi", out, Json{{"X", far}})), cli::kExitNumeric);
  EXPECT_EQ(run_quiet(make("reduced-flow", out, Json{{"X", far}})), cli::kExitNumeric);
  EXPECT_EQ(run_quiet(make("no-such", out)), cli::kExitSchema);
  // an empty directory has nothing to report
  EXPECT_EQ(run_quiet(make("report", scratch("empty"))), cli::kExitNumeric);
}

TEST(Run, ArtifactsAreByteIdentical) {
  for (const char* cmd : {"reduced-flow", "growth-scan", "dominate-scan", "properness-scan", "counterexample"}) {
    const auto a = scratch(std::string("det_a_") + cmd), b = scratch(std::string("det_b_") + cmd);
    auto ca = make(cmd, a), cb = make(cmd, b);
    ca.seed = cb.seed = 1234;
    if (std::string(cmd) == "growth-scan") ca.samples = cb.samples = 50;
    ASSERT_EQ(run_quiet(ca), 0) << cmd;
    ASSERT_EQ(run_quiet(cb), 0) << cmd;
    for (const auto& e : fs::directory_iterator(a)) {
      EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
      EXPECT_NE(slurp(e.path()).find("seed"), std::string::npos);
    }
  }
}

TEST(Binary, FlagsConfigAndExitStatus) {
  const auto out = scratch("bin");
  EXPECT_EQ(shell("--help"), 0);
  EXPECT_EQ(shell("psi --help"), 0);
  EXPECT_EQ(shell(""), cli::kExitSchema);
  EXPECT_EQ(shell("psi --n 5 --out " + out.string()), cli::kExitSchema);
  EXPECT_EQ(shell("psi --bogus"), cli::kExitSchema);
  EXPECT_EQ(shell("psi --config /nonexistent.json"), cli::kExitSchema);
  EXPECT_EQ(shell("counterexample --seed 7 --out " + out.string()), 0);
  EXPECT_EQ(io::read_json(out / "counterexample.json")["seed"], 7);
  // flags override the file
  const fs::path cfg = out / "c.json";
  io::write_json(cfg, Json::parse(R"({"command": "psi", "seed": 3, "n": 3})"));
  EXPECT_EQ(shell("psi --config " + cfg.string() + " --seed 11 --out " + out.string()), 0);
  const auto j = io::read_json(out / "psi.json");
  EXPECT_EQ(j["seed"], 11);
  EXPECT_EQ(j["config"]["n"], 3);
  io::write_json(cfg, Json::parse(R"({"command": "psi", "n": "three"})"));
  EXPECT_EQ(shell("psi --config " + cfg.string() + " --out " + out.string()), cli::kExitSchema);
  EXPECT_EQ(shell("report --out " + out.string()), 0);
}
