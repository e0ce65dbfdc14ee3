#include "mwlab/harness.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mwlab;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mwlab_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

/// Runs the CLI; returns the exit status and captures stderr.
int cli(const std::string& args, std::string* err = nullptr) {
  const auto errfile = std::filesystem::temp_directory_path() / "mwlab_cli_stderr.txt";
  const std::string cmd = std::string(MWLAB_CLI) + " " + args + " > /dev/null 2> " + errfile.string();
  const int status = std::system(cmd.c_str());
  if (err) *err = slurp(errfile);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Spec, RoundTripDefaults) {
  const ExperimentSpec s;
  EXPECT_EQ(parse_spec(serialize_spec(s)), s);
}

TEST(Spec, RoundTripEveryKey) {
  ExperimentSpec s;
  s.kind = "empirical";
  s.seed = 18446744073709551615ull;
  s.a = 0.1;
  s.b = 1.0 / 3.0;
  s.iid_weights = {0.125, 0.875};
  s.tail_exponent = 2.5;
  s.dense_matrix = "0.5,0.5;0.25,0.75";
  s.values = {};
  s.ymap = {-1e-300, 2.5, 7};
  s.grid_a = -3.75;
  s.p = 1.5;
  s.times = {0.1, 0.7};
  s.variance_ns = {10, 20};
  s.lambdas = {};
  s.sample_csv = "data/sample.csv";
  const auto text = serialize_spec(s);
  EXPECT_EQ(parse_spec(text), s);
  EXPECT_EQ(serialize_spec(parse_spec(text)), text);
  // Every registered key appears exactly once.
  const auto lined = "\n" + text;
  for (const auto& key : spec_keys()) {
    const auto at = lined.find("\n" + key + "=");
    ASSERT_NE(at, std::string::npos) << key;
    EXPECT_EQ(lined.find("\n" + key + "=", at + 1), std::string::npos) << key;
  }
}

TEST(Spec, UnknownKeyIsNamed) {
  try {
    parse_spec("experiment=clt\nmodell=two_state\n");
    FAIL() << "expected SpecError";
  } catch (const SpecError& e) {
    EXPECT_EQ(e.key(), "modell");
    EXPECT_NE(std::string(e.what()).find("modell"), std::string::npos);
  }
}

TEST(Spec, BadValuesAreRejected) {
  EXPECT_THROW(parse_spec("run.n=12x"), SpecError);
  EXPECT_THROW(parse_spec("seed=-1"), SpecError);
  EXPECT_THROW(parse_spec("grid.p=nan"), SpecError);
  EXPECT_THROW(parse_spec("just text"), SpecError);
  EXPECT_NO_THROW(parse_spec("# comment\n\n  run.n = 12  \n"));
  EXPECT_EQ(parse_spec("run.n = 12").n, 12);
}

TEST(Spec, ValidationNamesTheKey) {
  const auto key_of = [](const std::string& text) {
    try {
      validate_spec(parse_spec(text));
    } catch (const SpecError& e) {
      return e.key();
    }
    return std::string("<valid>");
  };
  EXPECT_EQ(key_of("experiment=clt"), "<valid>");
  EXPECT_EQ(key_of("experiment=nope"), "experiment");
  EXPECT_EQ(key_of("experiment=counterexample\nmodel.kind=renewal\nmodel.renewal.tail_exponent=4"),
            "model.renewal.tail_exponent");
  EXPECT_EQ(key_of("experiment=counterexample"), "model.kind");
  EXPECT_EQ(key_of("run.times=0.5,0.25"), "run.times");
  EXPECT_EQ(key_of("model.iid.weights=0.5,0.6"), "model.iid.weights");
  EXPECT_EQ(key_of("experiment=empirical"), "grid.kind");
  EXPECT_EQ(key_of("counterexample.weight_rule=cubic"), "counterexample.weight_rule");
}

TEST(Spec, ObservableNeedsMatchingState) {
  ExperimentSpec s;
  s.indicator_state = 7;
  EXPECT_THROW(build_observable(s, build_model(s)), SpecError);
  s.model = "dense";
  s.dense_matrix = "0.5,0.5;0.2";
  EXPECT_THROW(build_model(s), SpecError);
  s.dense_matrix = "0.5,0.5;0.2,0.8";
  EXPECT_EQ(build_model(s).size(), 2);
}

TEST(Describe, MentionsTheContract) {
  EXPECT_NE(describe("lil").find("√(2nL(L(n)))"), std::string::npos);
  EXPECT_NE(describe("lil").find("10√2·MW₂"), std::string::npos);
  EXPECT_NE(describe("counterexample").find("Eτ²=∞"), std::string::npos);
  EXPECT_NE(describe("dyadic").find("−2^d"), std::string::npos);
  for (const auto& kind : experiment_kinds()) EXPECT_FALSE(describe(kind).empty()) << kind;
  EXPECT_THROW(describe("clil"), SpecError);
}

TEST(Bundle, Sha256KnownAnswer) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Bundle, CltSummaryAndDeterminism) {
  ExperimentSpec s;
  s.n = 256;
  s.paths = 400;
  const auto a = scratch("a"), b = scratch("b");
  write_bundle(s, run_experiment(s, 1), a);
  write_bundle(s, run_experiment(s, 3), b);
  const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
  EXPECT_TRUE(summary.at("scalars").contains("ks_statistic"));
  EXPECT_EQ(summary.at("experiment"), "clt");
  std::size_t files = 0;
  std::istringstream manifest(slurp(a / "MANIFEST"));
  std::string line;
  while (std::getline(manifest, line)) {
    std::istringstream fields(line);
    std::string tag, name, sum;
    fields >> tag;
    if (tag != "file") continue;
    fields >> name >> sum;
    ++files;
    EXPECT_EQ(sha256_hex(slurp(a / name)), sum) << name;
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
  EXPECT_GE(files, 3u);
  EXPECT_TRUE(std::filesystem::exists(a / "ks_directions.csv"));
}

TEST(Bundle, SpecHashIgnoresOutputDirectory) {
  ExperimentSpec s;
  s.kind = "conditions";
  s.terms = 64;
  const auto r = run_experiment(s, 1);
  const auto a = scratch("hash_a");
  write_bundle(s, r, a);
  s.out = "elsewhere";
  const auto b = scratch("hash_b");
  write_bundle(s, r, b);
  const auto first_line = [](const std::string& text, const std::string& tag) {
    const auto at = text.find(tag);
    return text.substr(at, text.find('\n', at) - at);
  };
  EXPECT_EQ(first_line(slurp(a / "MANIFEST"), "spec_sha256"), first_line(slurp(b / "MANIFEST"), "spec_sha256"));
}

TEST(Run, EveryKindRunsOnSmallSpecs) {
  const std::vector<std::string> configs{
      "experiment=conditions\nrun.terms=64",
      "experiment=approx\nmodel.kind=random\nobservable.kind=random\nrun.n=64",
      "experiment=dyadic\nrun.depth=4\nrun.paths=50\nrun.n=64",
      "experiment=clt\nrun.n=128\nrun.paths=200\nrun.ks_threshold=0.2",
      "experiment=fdd\nrun.n=128\nrun.paths=200",
      "experiment=lil\nrun.horizon=5000",
      "experiment=lil\nrun.horizon=3000\nobservable.kind=cdf\nobservable.ymap=0,1\ngrid.kind=trapezoid\ngrid.points=9",
      "experiment=counterexample\nmodel.kind=renewal\nmodel.renewal.truncation=64\ncounterexample.series_terms=200\n"
      "counterexample.variance_ns=10,100\nrun.horizon=2000\ncounterexample.empirical_from=100\ncounterexample.seeds=2\n"
      "counterexample.required_increases=0",
      "experiment=empirical\nobservable.ymap=0,1\ngrid.kind=trapezoid\ngrid.a=-1\ngrid.b=2\ngrid.points=16\n"
      "run.n=200\nrun.paths=100\nempirical.lags=8\nempirical.lil_horizon=2000",
  };
  for (const auto& text : configs) {
    const auto spec = parse_spec(text);
    ExperimentResult r;
    ASSERT_NO_THROW(r = run_experiment(spec, 2)) << text;
    EXPECT_FALSE(r.tables.empty()) << text;
  }
}

TEST(Cli, ExitCodes) {
  std::string err;
  EXPECT_EQ(cli("describe lil"), 0);
  EXPECT_EQ(cli("describe clil"), 2);
  EXPECT_EQ(cli("clt --set modell=two_state", &err), 2);
  EXPECT_NE(err.find("modell"), std::string::npos) << err;
  EXPECT_EQ(cli("clt --frobnicate"), 2);
  const auto out = scratch("cli_degenerate");
  // A constant observable centers to zero: no Gaussian limit.
  EXPECT_EQ(cli("clt --out " + out.string() + " --set observable.kind=values --set observable.values=1,1", &err), 3);
  EXPECT_NE(err.find("asymptotic variance is zero"), std::string::npos) << err;
}

TEST(Cli, ConfigFileAndOverrides) {
  const auto dir = scratch("cli_config");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "# small clt\nexperiment=clt\nrun.n=128\nrun.paths=100\n";
  EXPECT_EQ(cli("clt --config " + (dir / "run.cfg").string() + " --seed 9 --threads 2 --out " + (dir / "out").string()), 0);
  const auto spec = load_spec(dir / "out" / "spec.cfg");
  EXPECT_EQ(spec.seed, 9u);
  EXPECT_EQ(spec.n, 128);
  EXPECT_EQ(cli("fdd --config " + (dir / "run.cfg").string()), 2);
}
