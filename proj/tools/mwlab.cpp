// Command-line front end: one subcommand per experiment kind, plus describe.
#include "mwlab/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
  std::vector<std::string> sets;
};

int run(const std::string& kind, const RunFlags& flags) {
  mwlab::ExperimentSpec spec;
  spec.kind = kind;
  if (!flags.config.empty()) spec = mwlab::load_spec(flags.config, spec);
  if (spec.kind != kind) {
    throw mwlab::SpecError("experiment", "config says '" + spec.kind + "' but the subcommand is '" + kind + "'");
  }
  for (const auto& kv : flags.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw mwlab::SpecError("", "--set expects key=value, got '" + kv + "'");
    mwlab::set_spec_value(spec, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.seed) spec.seed = *flags.seed;
  if (!flags.out.empty()) spec.out = flags.out;
  mwlab::validate_spec(spec);
  const unsigned threads = flags.threads ? *flags.threads : mwlab::default_threads();
  const auto result = mwlab::run_experiment(spec, threads);
  mwlab::write_bundle(spec, result, spec.out);
  for (const auto& v : result.verdicts) {
    std::printf("%-32s %s%s value=%.6g threshold=%.6g\n", v.name.c_str(), v.passed ? "pass" : "FAIL",
                v.informational ? " (informational)" : "", v.value, v.threshold);
  }
  for (const auto& note : result.notes) std::printf("note: %s\n", note.c_str());
  std::printf("%s: %s; bundle written to %s\n", kind.c_str(), result.passed() ? "passed" : "FAILED", spec.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mwlab: martingale approximation and maximal-inequality experiments for Markov chains"};
  app.require_subcommand(1);
  RunFlags flags;
  std::string described;
  std::string chosen;
  for (const auto& kind : mwlab::experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment (see: mwlab describe " + kind + ")");
    sub->add_option("--config", flags.config, "key=value config file");
    sub->add_option("--seed", flags.seed, "experiment seed (overrides the config)");
    sub->add_option("--out", flags.out, "output directory (overrides the config)");
    sub->add_option("--threads", flags.threads, std::string("worker threads (overrides ") + mwlab::kThreadsEnv + ")")
        ->check(CLI::PositiveNumber);
    sub->add_option("--set", flags.sets, "extra key=value assignments applied after the config");
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  auto* desc = app.add_subcommand("describe", "print anchors, knobs, defaults and output schema of an experiment");
  desc->add_option("kind", described, "experiment kind")->required();
  desc->callback([&chosen] { chosen = "describe"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (chosen == "describe") {
      std::cout << mwlab::describe(described);
      return 0;
    }
    return run(chosen, flags);
  } catch (const mwlab::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
