// Experiment specs, the key=value config format, and artifact bundles.
#pragma once

#include "mwlab/empirical.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mwlab {

/// Invalid configuration; `key` is the offending dotted key path.
class SpecError : public InvalidArgument {
 public:
  SpecError(std::string key, const std::string& message)
      : InvalidArgument(key.empty() ? message : "config key '" + key + "': " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentSpec {
  std::string kind = "clt";
  std::uint64_t seed = 1;
  std::string out = "out";

  std::string model = "two_state";  ///< two_state | random | iid | renewal | dense
  double a = 0.3;
  double b = 0.6;
  std::int64_t states = 5;
  std::uint64_t model_seed = 1;
  std::vector<double> iid_weights{0.5, 0.5};
  double tail_exponent = 3.0;
  std::int64_t truncation = 4096;
  std::string dense_matrix;  ///< rows separated by ';', entries by ','

  std::string observable = "indicator";  ///< indicator | values | random | cdf
  std::int64_t indicator_state = 0;
  std::vector<double> values;
  std::uint64_t observable_seed = 1;
  std::vector<double> ymap;  ///< per-state observation for cdf observables and the empirical driver

  std::string grid = "none";  ///< none | trapezoid | uniform
  double grid_a = 0.0;
  double grid_b = 1.0;
  std::int64_t grid_points = 64;
  double p = 2.0;

  std::int64_t n = 4096;
  std::uint64_t paths = 5000;
  std::int64_t horizon = 1000000;
  std::int64_t depth = 8;
  std::int64_t terms = 4096;
  std::vector<double> times{0.25, 0.5, 0.75, 1.0};
  std::int64_t burn_in = 1000;
  std::int64_t checkpoints_per_decade = 4;
  double ks_threshold = 0.03;
  std::int64_t net_blocks = 4;
  std::vector<double> lambdas{0.5, 1.0, 2.0};

  std::string weight_rule = "inv_log";
  std::int64_t series_terms = 100000;
  std::vector<std::int64_t> variance_ns{100, 1000, 10000, 100000, 1000000};
  std::int64_t empirical_from = 10000;
  std::uint64_t seeds = 10;
  std::uint64_t required_increases = 8;

  std::string driver = "markov";  ///< markov | uniform
  std::string mode = "limit";     ///< limit | oracle
  std::int64_t lags = 64;
  std::int64_t lil_horizon = 0;
  std::string sample_csv;
  std::string reference;  ///< oracle JSON with a "mean" field

  bool operator==(const ExperimentSpec&) const = default;
};

const std::vector<std::string>& experiment_kinds();
/// Every accepted dotted key, in serialization order.
std::vector<std::string> spec_keys();

/// Applies key=value lines (blank lines and '#' comments ignored) on top of
/// `base`. Unknown keys and unparsable values throw SpecError.
ExperimentSpec parse_spec(const std::string& text, ExperimentSpec base = {});
void set_spec_value(ExperimentSpec& spec, const std::string& key, const std::string& value);
std::string serialize_spec(const ExperimentSpec& spec);
ExperimentSpec load_spec(const std::filesystem::path& path, ExperimentSpec base = {});

/// Range and consistency checks; throws SpecError naming the key.
void validate_spec(const ExperimentSpec& spec);

Model build_model(const ExperimentSpec& spec);
QuadratureGrid<double> build_grid(const ExperimentSpec& spec);
/// Centered observable for the spec's model.
Field build_observable(const ExperimentSpec& spec, const Model& model);

/// Validates, then runs the experiment.
ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned threads);

std::string sha256_hex(const std::string& bytes);

/// summary.json, one CSV per table, spec.cfg and MANIFEST in `dir`.
/// Returns the files written (MANIFEST last).
std::vector<std::filesystem::path> write_bundle(const ExperimentSpec& spec, const ExperimentResult& result,
                                                const std::filesystem::path& dir);

/// Anchors, knobs, defaults and output schema of an experiment kind.
std::string describe(const std::string& kind);

}  // namespace mwlab
