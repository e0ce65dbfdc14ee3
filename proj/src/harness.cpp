#include "mwlab/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <sstream>

namespace mwlab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw SpecError(key, "cannot parse '" + t + "' as a number");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw SpecError(key, "value must be finite");
  }
  return value;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  if constexpr (std::is_same_v<T, std::string>) {
    return trim(text);
  } else if constexpr (std::is_same_v<T, std::vector<double>> || std::is_same_v<T, std::vector<std::int64_t>>) {
    T out;
    if (trim(text).empty()) return out;
    for (const auto& item : split(text, ',')) out.push_back(parse_number<typename T::value_type>(key, item));
    return out;
  } else {
    return parse_number<T>(key, text);
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, double>) {
    return format_double(v);
  } else if constexpr (std::is_same_v<T, std::vector<double>> || std::is_same_v<T, std::vector<std::int64_t>>) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_value(v[i]);
    return out;
  } else {
    return std::to_string(v);
  }
}

struct KeyDef {
  std::string key;
  std::function<void(ExperimentSpec&, const std::string&)> set;
  std::function<std::string(const ExperimentSpec&)> get;
};

template <typename T>
KeyDef def(std::string key, T ExperimentSpec::*member) {
  return {key, [member, key](ExperimentSpec& s, const std::string& v) { s.*member = parse_value<T>(key, v); },
          [member](const ExperimentSpec& s) { return format_value(s.*member); }};
}

const std::vector<KeyDef>& registry() {
  using S = ExperimentSpec;
  static const std::vector<KeyDef> keys{
      def("experiment", &S::kind),
      def("seed", &S::seed),
      def("out", &S::out),
      def("model.kind", &S::model),
      def("model.two_state.a", &S::a),
      def("model.two_state.b", &S::b),
      def("model.random.states", &S::states),
      def("model.random.seed", &S::model_seed),
      def("model.iid.weights", &S::iid_weights),
      def("model.renewal.tail_exponent", &S::tail_exponent),
      def("model.renewal.truncation", &S::truncation),
      def("model.dense.matrix", &S::dense_matrix),
      def("observable.kind", &S::observable),
      def("observable.state", &S::indicator_state),
      def("observable.values", &S::values),
      def("observable.seed", &S::observable_seed),
      def("observable.ymap", &S::ymap),
      def("grid.kind", &S::grid),
      def("grid.a", &S::grid_a),
      def("grid.b", &S::grid_b),
      def("grid.points", &S::grid_points),
      def("grid.p", &S::p),
      def("run.n", &S::n),
      def("run.paths", &S::paths),
      def("run.horizon", &S::horizon),
      def("run.depth", &S::depth),
      def("run.terms", &S::terms),
      def("run.times", &S::times),
      def("run.burn_in", &S::burn_in),
      def("run.checkpoints_per_decade", &S::checkpoints_per_decade),
      def("run.ks_threshold", &S::ks_threshold),
      def("run.net_blocks", &S::net_blocks),
      def("run.lambdas", &S::lambdas),
      def("counterexample.weight_rule", &S::weight_rule),
      def("counterexample.series_terms", &S::series_terms),
      def("counterexample.variance_ns", &S::variance_ns),
      def("counterexample.empirical_from", &S::empirical_from),
      def("counterexample.seeds", &S::seeds),
      def("counterexample.required_increases", &S::required_increases),
      def("empirical.driver", &S::driver),
      def("empirical.mode", &S::mode),
      def("empirical.lags", &S::lags),
      def("empirical.lil_horizon", &S::lil_horizon),
      def("empirical.sample_csv", &S::sample_csv),
      def("empirical.reference", &S::reference),
  };
  return keys;
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw SpecError(key, message);
}

void require_one_of(const std::string& value, std::initializer_list<const char*> allowed, const std::string& key) {
  std::string list;
  for (const char* a : allowed) {
    if (value == a) return;
    list += (list.empty() ? "" : ", ") + std::string(a);
  }
  throw SpecError(key, "'" + value + "' is not one of " + list);
}

Table series_table(const std::string& name, const SeriesTrace<double>& s) {
  Table t{name, {"index", "term", "partial_sum"}, {}};
  for (std::size_t i = 0; i < s.terms.size(); ++i) t.add({double(s.first_index + long(i)), s.terms[i], s.partials[i]});
  return t;
}

void record_series(ExperimentResult& r, const std::string& name, const SeriesTrace<double>& s) {
  r.scalars[name + "_sum"] = s.sum();
  r.scalars[name + "_terms"] = double(s.terms.size());
  if (s.tail_estimate) r.scalars[name + "_tail"] = *s.tail_estimate;
  r.tables.push_back(series_table(name, s));
}

LimitOptions limit_options(const ExperimentSpec& s, unsigned threads) {
  LimitOptions o;
  o.threads = threads;
  o.net_blocks = static_cast<int>(s.net_blocks);
  return o;
}

ExperimentResult run_conditions(const ExperimentSpec& s, const Model& model, const Field& f) {
  ExperimentResult r;
  r.name = "conditions";
  r.seed = s.seed;
  record_series(r, "mw2", mw2_norm(model, f, static_cast<int>(s.depth)));
  if (f.is_grid()) {
    record_series(r, "np", np_norm(model, f, f.p, s.terms));
  } else {
    r.notes.push_back("np omitted: N_p is defined for grid observables only");
  }
  record_series(r, "strengthened", strengthened_sum(model, f, s.terms));
  record_series(r, "h2", h2_norm(model, f, s.terms));
  record_series(r, "rho_dyadic", rho_dyadic_series(model, static_cast<int>(s.depth)));
  r.scalars["gaussian_norm"] = gaussian_norm(model, f);
  r.notes.push_back(kRhoMarkovNote);
  r.notes.push_back("MW2 is summed to depth run.depth; the other series to run.terms terms or until the stopping rule");
  return r;
}

ExperimentResult run_approx(const ExperimentSpec& s, const Model& model, const Field& f) {
  ExperimentResult r;
  r.name = "approx";
  r.seed = s.seed;
  const auto poisson = solve_poisson(model, f);
  const auto d = martingale_difference(model, poisson);
  r.scalars["poisson_residual"] = poisson.residual;
  r.scalars["poisson_mean_defect"] = poisson.mean_defect;
  r.scalars["poisson_condition"] = poisson.condition_estimate;
  r.scalars["martingale_defect"] = martingale_defect(model, d);
  const auto cov = asymptotic_covariance(model, d);
  r.scalars["covariance_trace"] = cov.K.trace();
  Table t{"approximation", {"n", "error", "error_over_sqrt_n"}, {}};
  for (auto n : geometric_checkpoints(1, s.n, 4)) {
    const double e = approximation_error(model, d, static_cast<std::uint64_t>(n));
    t.add({double(n), e, e / std::sqrt(double(n))});
  }
  r.tables.push_back(std::move(t));
  if (!f.is_grid()) {
    const double sigma2 = d.sigma2[0];
    const double series = autocovariance_series_variance(model, f, static_cast<Index>(s.terms));
    r.scalars["sigma2"] = sigma2;
    r.scalars["autocovariance_series"] = series;
    const double tol = 1e-8 * std::max(1.0, std::abs(sigma2));
    r.add_verdict("variance_consistency", std::abs(sigma2 - series) <= tol, std::abs(sigma2 - series), tol, 0.0,
                  "|sigma^2 (martingale) - truncated autocovariance series|");
  }
  r.add_verdict("poisson_exact", poisson.residual <= 1e-10 && poisson.mean_defect <= 1e-10, poisson.residual, 1e-10,
                0.0, "||(I - P) h - f||_inf and |pi(h)|");
  return r;
}

ExperimentResult run_dyadic(const ExperimentSpec& s, const Model& model, const Field& f, unsigned threads) {
  ExperimentResult r;
  r.name = "dyadic";
  r.seed = s.seed;
  r.stream_end = s.paths;
  const int d = static_cast<int>(s.depth);
  const std::int64_t half = std::int64_t{1} << d;
  const auto profiles = lagged_conditional_profiles(model, f, d);
  const auto slacks = parallel_map<DyadicSlack<double>>(s.paths, threads, [&](std::uint64_t stream) {
    const auto path = simulate_path(model, -half, half, s.seed, stream);
    const auto c = dyadic_components(model, f, path, d, &profiles);
    return verify_dyadic_inequality(c, partial_sums(model, f, path, half));
  });
  Table t{"dyadic_slack", {"stream", "lhs", "rhs", "slack"}, {}};
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < slacks.size(); ++i) {
    t.add({double(i), slacks[i].lhs, slacks[i].rhs(), slacks[i].slack()});
    worst = std::min(worst, slacks[i].slack());
  }
  r.tables.push_back(std::move(t));
  r.scalars["min_slack"] = worst;
  r.scalars["conditional_mean_defect"] = dyadic_conditional_mean_defect(model, f, d);
  r.add_verdict("dyadic_inequality", worst >= -1e-9, worst, -1e-9, 0.0, "pathwise slack of the dyadic maximal bound");

  const auto doob = doob_ratio(model, martingale_difference(model, f), s.n, s.paths, s.seed, threads);
  r.scalars["doob_ratio"] = doob.ratio;
  r.scalars["doob_sigma"] = doob.sigma;
  if (!doob.warning.empty()) r.notes.push_back("doob: " + doob.warning);
  if (!doob.degenerate) {
    r.add_verdict("doob_ratio", !doob.exceeds_two, doob.ratio, 2.0, 3 * doob.sigma,
                  "E max_k |S_k(d)|^2 / E |S_n(d)|^2 <= 2 + 3 sigma");
  }
  Table hopf{"hopf", {"lambda", "probability", "bound", "slack"}, {}};
  double hopf_worst = std::numeric_limits<double>::infinity();
  for (const auto& row : hopf_check(model, f, s.n, s.paths, s.lambdas, s.seed, threads)) {
    hopf.add({row.lambda, row.probability, row.bound, row.slack()});
    hopf_worst = std::min(hopf_worst, row.slack());
  }
  r.tables.push_back(std::move(hopf));
  r.add_verdict("hopf", hopf_worst >= 0, hopf_worst, 0.0, 0.0, "||X||_1/lambda - P(M1 > lambda)");
  r.notes.push_back("paths start at -2^d so that every lagged conditional expectation is observed");
  return r;
}

ExperimentResult run_empirical(const ExperimentSpec& s, const Model* model, unsigned threads) {
  const auto grid = build_grid(s);
  EmpiricalSetup setup;
  if (s.driver == "uniform") {
    setup = uniform_setup(grid, s.p);
  } else {
    require(static_cast<Index>(s.ymap.size()) == model->size(), "observable.ymap",
            "needs one value per state (" + std::to_string(model->size()) + ")");
    setup = markov_setup(*model, Eigen::Map<const Vector<double>>(s.ymap.data(), Index(s.ymap.size())), grid, s.p);
  }
  EmpiricalOptions opt;
  opt.threads = threads;
  opt.lil_horizon = s.lil_horizon;
  opt.lil_burn_in = std::min(s.burn_in, std::max<std::int64_t>(s.lil_horizon, 1));
  if (!s.reference.empty()) {
    std::ifstream in(s.reference);
    require(bool(in), "empirical.reference", "cannot open " + s.reference);
    nlohmann::json ref;
    try {
      ref = nlohmann::json::parse(in);
      opt.reference_mean = ref.at("mean").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw SpecError("empirical.reference", std::string("bad oracle file: ") + e.what());
    }
  }
  auto r = empirical_limit_experiment(setup, s.n, s.paths, s.seed, opt);
  if (s.mode == "oracle") r.name = "empirical_oracle";
  if (s.lags > 0) {
    auto coeffs = mixing_coefficients(setup, s.lags);
    if (!grid.infinite_measure) {
      bound_checks(coeffs, setup);
      const double slack = coeffs.min_slack();
      r.scalars["min_bound_slack"] = slack;
      r.add_verdict("mixing_bounds", slack >= -1e-10, slack, -1e-10, 0.0, "smallest coefficient bound slack over all lags");
    }
    r.tables.push_back(coeffs.to_table());
    record_series(r, "theomix_i", theomix_series(setup, TheomixBranch::phi, s.lags));
    if (grid.lebesgue) record_series(r, "theomix_ii", theomix_series(setup, TheomixBranch::quantile, s.lags));
  }
  if (!s.sample_csv.empty()) {
    const auto sample = read_samples_csv(s.sample_csv);
    r.scalars["sample_size"] = double(sample.size());
    r.scalars["sample_distance"] = empirical_cdf_distance(sample, setup.F, grid, s.p);
    r.scalars["sample_scaled_distance"] = std::sqrt(double(sample.size())) * r.scalars["sample_distance"];
  }
  return r;
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"conditions", "approx", "dyadic", "clt",
                                              "fdd",        "lil",    "counterexample", "empirical"};
  return kinds;
}

std::vector<std::string> spec_keys() {
  std::vector<std::string> out;
  for (const auto& k : registry()) out.push_back(k.key);
  return out;
}

void set_spec_value(ExperimentSpec& spec, const std::string& key, const std::string& value) {
  for (const auto& k : registry()) {
    if (k.key == key) {
      k.set(spec, value);
      return;
    }
  }
  throw SpecError(key, "unknown key");
}

ExperimentSpec parse_spec(const std::string& text, ExperimentSpec base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw SpecError("", "line " + std::to_string(lineno) + ": expected key=value");
    set_spec_value(base, trim(t.substr(0, eq)), t.substr(eq + 1));
  }
  return base;
}

std::string serialize_spec(const ExperimentSpec& spec) {
  std::string out;
  for (const auto& k : registry()) out += k.key + "=" + k.get(spec) + "\n";
  return out;
}

ExperimentSpec load_spec(const std::filesystem::path& path, ExperimentSpec base) {
  std::ifstream in(path);
  if (!in) throw SpecError("", "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str(), std::move(base));
}

void validate_spec(const ExperimentSpec& s) {
  require(std::find(experiment_kinds().begin(), experiment_kinds().end(), s.kind) != experiment_kinds().end(),
          "experiment", "unknown experiment kind '" + s.kind + "'");
  require_one_of(s.model, {"two_state", "random", "iid", "renewal", "dense"}, "model.kind");
  require(s.a > 0 && s.a <= 1, "model.two_state.a", "must lie in (0, 1]");
  require(s.b > 0 && s.b <= 1, "model.two_state.b", "must lie in (0, 1]");
  require(s.states >= 2, "model.random.states", "must be >= 2");
  require(!s.iid_weights.empty(), "model.iid.weights", "must be non-empty");
  double total = 0;
  for (double w : s.iid_weights) {
    require(w >= 0, "model.iid.weights", "weights must be nonnegative");
    total += w;
  }
  require(std::abs(total - 1) <= 1e-12, "model.iid.weights", "weights must sum to 1");
  require(s.tail_exponent > 2, "model.renewal.tail_exponent", "must exceed 2 (E tau < infinity)");
  require(s.truncation >= 4, "model.renewal.truncation", "must be >= 4");
  require(s.model != "dense" || !s.dense_matrix.empty(), "model.dense.matrix", "required for model.kind=dense");
  require_one_of(s.observable, {"indicator", "values", "random", "cdf"}, "observable.kind");
  require(s.indicator_state >= 0, "observable.state", "must be >= 0");
  require_one_of(s.grid, {"none", "trapezoid", "uniform"}, "grid.kind");
  require(s.grid_b > s.grid_a, "grid.b", "must exceed grid.a");
  require(s.grid_points >= 2, "grid.points", "must be >= 2");
  require(s.p >= 1, "grid.p", "must be >= 1");
  require(s.observable != "cdf" || s.grid != "none", "grid.kind", "cdf observables need a grid");
  require(s.n >= 1, "run.n", "must be >= 1");
  require(s.paths >= 2, "run.paths", "must be >= 2");
  require(s.horizon >= 1, "run.horizon", "must be >= 1");
  require(s.depth >= 0 && s.depth <= 30, "run.depth", "must lie in [0, 30]");
  require(s.terms >= 1, "run.terms", "must be >= 1");
  require(!s.times.empty(), "run.times", "must be non-empty");
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    require(s.times[i] > 0 && s.times[i] <= 1, "run.times", "times must lie in (0, 1]");
    require(i == 0 || s.times[i] > s.times[i - 1], "run.times", "times must be strictly increasing");
  }
  require(s.burn_in >= 1, "run.burn_in", "must be >= 1");
  require(s.kind != "lil" || s.burn_in <= s.horizon, "run.burn_in", "must not exceed run.horizon");
  require(s.checkpoints_per_decade >= 1, "run.checkpoints_per_decade", "must be >= 1");
  require(s.ks_threshold > 0 && s.ks_threshold < 1, "run.ks_threshold", "must lie in (0, 1)");
  require(s.net_blocks >= 1, "run.net_blocks", "must be >= 1");
  for (double l : s.lambdas) require(l > 0, "run.lambdas", "levels must be positive");
  try {
    parse_weight_rule(s.weight_rule);
  } catch (const InvalidArgument& e) {
    throw SpecError("counterexample.weight_rule", e.what());
  }
  require(s.series_terms >= 1, "counterexample.series_terms", "must be >= 1");
  require(!s.variance_ns.empty(), "counterexample.variance_ns", "must be non-empty");
  for (auto v : s.variance_ns) require(v >= 1, "counterexample.variance_ns", "entries must be >= 1");
  require(s.empirical_from >= 1, "counterexample.empirical_from", "must be >= 1");
  require(s.seeds >= 1, "counterexample.seeds", "must be >= 1");
  require(s.required_increases <= s.seeds, "counterexample.required_increases", "cannot exceed counterexample.seeds");
  require_one_of(s.driver, {"markov", "uniform"}, "empirical.driver");
  require_one_of(s.mode, {"limit", "oracle"}, "empirical.mode");
  require(s.lags >= 0, "empirical.lags", "must be >= 0");
  require(s.lil_horizon >= 0, "empirical.lil_horizon", "must be >= 0");
  if (s.kind == "counterexample") {
    require(s.model == "renewal", "model.kind", "counterexample needs model.kind=renewal");
    require(s.tail_exponent <= 3, "model.renewal.tail_exponent", "counterexample needs E tau^2 = infinity (tail <= 3)");
  }
  if (s.kind == "empirical") require(s.grid != "none", "grid.kind", "empirical needs a grid for mu");
}

Model build_model(const ExperimentSpec& s) {
  if (s.model == "two_state") return two_state_model(s.a, s.b);
  if (s.model == "random") return random_chain(static_cast<Index>(s.states), s.model_seed);
  if (s.model == "iid") return iid_model(Vector<double>(Eigen::Map<const Vector<double>>(s.iid_weights.data(), Index(s.iid_weights.size()))));
  if (s.model == "renewal") return build_renewal_chain({s.tail_exponent, static_cast<Index>(s.truncation)}).model;
  std::vector<std::vector<double>> rows;
  for (const auto& row : split(s.dense_matrix, ';')) rows.push_back(parse_value<std::vector<double>>("model.dense.matrix", row));
  Matrix<double> P(Index(rows.size()), Index(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == rows.size(), "model.dense.matrix", "matrix must be square");
    for (std::size_t j = 0; j < rows.size(); ++j) P(Index(i), Index(j)) = rows[i][j];
  }
  try {
    return Model::from_dense(P);
  } catch (const NotErgodic&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw SpecError("model.dense.matrix", e.what());
  }
}

QuadratureGrid<double> build_grid(const ExperimentSpec& s) {
  require(s.grid != "none", "grid.kind", "a grid is required here");
  if (s.grid == "trapezoid") return QuadratureGrid<double>::trapezoid(s.grid_a, s.grid_b, static_cast<Index>(s.grid_points));
  return QuadratureGrid<double>::uniform(Vector<double>::LinSpaced(static_cast<Index>(s.grid_points), s.grid_a, s.grid_b),
                                         s.grid_b - s.grid_a);
}

Field build_observable(const ExperimentSpec& s, const Model& model) {
  const Index m = model.size();
  if (s.observable == "indicator") {
    require(s.indicator_state < m, "observable.state", "exceeds the number of states (" + std::to_string(m) + ")");
    Vector<double> v = Vector<double>::Zero(m);
    v[static_cast<Index>(s.indicator_state)] = 1.0;
    return center_observable(model, Field::scalar(v));
  }
  if (s.observable == "values") {
    require(static_cast<Index>(s.values.size()) == m, "observable.values", "needs one value per state (" + std::to_string(m) + ")");
    return center_observable(model, Field::scalar(Eigen::Map<const Vector<double>>(s.values.data(), m)));
  }
  if (s.observable == "random") {
    const CounterRng rng(s.observable_seed, 7);
    Vector<double> v(m);
    for (Index i = 0; i < m; ++i) v[i] = rng.uniform(i) * 2.0 - 1.0;
    return center_observable(model, Field::scalar(v));
  }
  require(static_cast<Index>(s.ymap.size()) == m, "observable.ymap", "needs one value per state (" + std::to_string(m) + ")");
  return markov_setup(model, Eigen::Map<const Vector<double>>(s.ymap.data(), m), build_grid(s), s.p).observable();
}

ExperimentResult run_experiment(const ExperimentSpec& s, unsigned threads) {
  validate_spec(s);
  if (s.kind == "empirical" && s.driver == "uniform") return run_empirical(s, nullptr, threads);
  const Model model = build_model(s);
  if (s.kind == "empirical") return run_empirical(s, &model, threads);
  if (s.kind == "counterexample") {
    CounterexampleOptions ce;
    ce.rule = parse_weight_rule(s.weight_rule);
    ce.series_terms = s.series_terms;
    ce.variance_ns = s.variance_ns;
    ce.horizon = s.horizon;
    ce.empirical_from = s.empirical_from;
    ce.seeds = s.seeds;
    ce.required_increases = s.required_increases;
    ce.checkpoints_per_decade = static_cast<int>(s.checkpoints_per_decade);
    return counterexample_experiment({s.tail_exponent, static_cast<Index>(s.truncation)}, s.seed, ce,
                                     limit_options(s, threads));
  }
  const Field f = build_observable(s, model);
  if (s.kind == "conditions") return run_conditions(s, model, f);
  if (s.kind == "approx") return run_approx(s, model, f);
  if (s.kind == "dyadic") return run_dyadic(s, model, f, threads);
  if (s.kind == "clt") return clt_experiment(model, f, s.n, s.paths, s.seed, limit_options(s, threads), s.ks_threshold);
  if (s.kind == "fdd") return fdd_experiment(model, f, s.times, s.n, s.paths, s.seed, limit_options(s, threads));
  LilOptions lil;
  lil.burn_in = s.burn_in;
  lil.checkpoints_per_decade = static_cast<int>(s.checkpoints_per_decade);
  auto r = lil_experiment(model, f, s.horizon, s.seed, lil, limit_options(s, threads));
  if (f.is_grid()) {
    auto clil = clil_diagnostic(model, f, s.horizon, s.seed, limit_options(s, threads),
                                static_cast<int>(s.checkpoints_per_decade));
    for (const auto& [k, v] : clil.scalars) r.scalars["clil_" + k] = v;
    for (auto& v : clil.verdicts) r.verdicts.push_back(v);
  }
  return r;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("sha256: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::vector<std::filesystem::path> write_bundle(const ExperimentSpec& spec, const ExperimentResult& result,
                                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  ExperimentSpec identity = spec;
  identity.out.clear();
  const std::string spec_hash = sha256_hex(serialize_spec(identity));
  auto summary = result.to_json();
  summary["version"] = MWLAB_VERSION;
  summary["spec_sha256"] = spec_hash;
  files.emplace_back("summary.json", summary.dump(2) + "\n");
  for (const auto& t : result.tables) files.emplace_back(t.name + ".csv", t.csv());
  files.emplace_back("spec.cfg", serialize_spec(spec));
  if (spec.kind == "empirical" && spec.mode == "oracle") {
    nlohmann::ordered_json o;
    o["n"] = spec.n;
    o["paths"] = spec.paths;
    o["seed"] = spec.seed;
    o["grid_points"] = spec.grid_points;
    o["p"] = spec.p;
    o["driver"] = spec.driver;
    o["mean"] = result.scalar("mean_scaled_distance");
    o["sd"] = result.scalar("sd_scaled_distance");
    o["stderr"] = result.scalar("stderr_scaled_distance");
    files.emplace_back("oracle.json", o.dump(2) + "\n");
  }

  std::vector<std::filesystem::path> written;
  std::string manifest = "version " MWLAB_VERSION "\nspec_sha256 " + spec_hash + "\nseed " + std::to_string(spec.seed) + "\n";
  for (const auto& [name, body] : files) {
    std::ofstream(dir / name, std::ios::binary) << body;
    written.push_back(dir / name);
    manifest += "file " + name + " " + sha256_hex(body) + "\n";
  }
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  manifest += std::string("timestamp ") + stamp + "\n";
  std::ofstream(dir / "MANIFEST", std::ios::binary) << manifest;
  written.push_back(dir / "MANIFEST");
  return written;
}

std::string describe(const std::string& kind) {
  const std::string common =
      "\nCommon keys: experiment, seed, out, model.kind (two_state | random | iid | renewal | dense),\n"
      "observable.kind (indicator | values | random | cdf), grid.kind (none | trapezoid | uniform).\n"
      "Outputs: summary.json (experiment, seed, streams, passed, scalars, verdicts, tables, notes,\n"
      "version, spec_sha256), one CSV per table, spec.cfg, MANIFEST (per-file SHA-256).\n";
  if (kind == "conditions") {
    return "conditions: dependence conditions of X = f(W_0).\n"
           "Series: MW2 = sum_{n<=d} ||E_0(S_{2^n})||_G / 2^{n/2}; N_p; the strengthened sum\n"
           "sum ||E_0(X_{n-1})||_G / sqrt(n); H2 = sum ||E_0(X_n) - E_{-1}(X_n)||_{2,X}; sum rho(2^n).\n"
           "Knobs: run.depth (default 8) for MW2 and rho, run.terms (default 4096) for the rest.\n"
           "Tables: mw2, np, strengthened, h2, rho_dyadic (index, term, partial_sum).\n" +
           common;
  }
  if (kind == "approx") {
    return "approx: martingale approximation through the Poisson equation (I - P) h = f.\n"
           "Scalars: poisson_residual, poisson_mean_defect, sigma2 and autocovariance_series (real X),\n"
           "covariance_trace. Table approximation: n, ||S_n(X) - S_n(d)||_2, and that over sqrt(n),\n"
           "at geometric n up to run.n (default 4096). run.terms truncates the autocovariance series.\n" +
           common;
  }
  if (kind == "dyadic") {
    return "dyadic: pathwise check of the dyadic maximal decomposition at depth d = run.depth (default 8).\n"
           "Each path starts at time −2^d and ends at 2^d: the required path start -2^d makes every\n"
           "lagged term E_{-2^k}(S_{2^k}) observable. run.paths paths (default 5000), slack >= -1e-9.\n"
           "Also: Doob ratio E max|S_k(d)|^2 / E|S_n(d)|^2 <= 2 + 3 sigma with n = run.n, and the Hopf\n"
           "weak-(1,1) check P(M1 > lambda) <= ||X||_1/lambda at run.lambdas (default 0.5,1,2).\n"
           "Tables: dyadic_slack (stream, lhs, rhs, slack), hopf (lambda, probability, bound, slack).\n" +
           common;
  }
  if (kind == "clt") {
    return "clt: S_n/sqrt(n) over run.paths stationary paths (default 5000) with n = run.n (default 4096)\n"
           "against Normal(0, sigma^2), sigma^2 exact from the martingale representation.\n"
           "Scalars include ks_statistic; the verdict is ks_statistic < run.ks_threshold (default 0.03).\n"
           "Grid observables: per-direction KS over a dual net (run.net_blocks) and covariance error.\n"
           "Table ks_directions. Throws (exit 3) when sigma^2 = 0.\n" +
           common;
  }
  if (kind == "fdd") {
    return "fdd: increments of the polygonal process T_{n,t} at run.times (default 0.25,0.5,0.75,1):\n"
           "per-increment KS, variance ratio to (t_i - t_{i-1}) sigma^2, correlations against 3/sqrt(M).\n"
           "Tables: increments, increment_correlation.\n" +
           common;
  }
  if (kind == "lil") {
    return "lil: one path of length run.horizon (default 1e6). Running max over n >= run.burn_in (1000) of\n"
           "|S_n|/√(2nL(L(n))) with L = max(log, 1), also reported with √(nL(L(n))) (ratio_nlln).\n"
           "Band: final running max in [0.7 sigma, 1.2 sigma] (informational below 1e5).\n"
           "Bound: at every checkpoint the running max is <= 10√2·MW₂, the MW2 partial sum at depth\n"
           "floor(log2 n) times 10 sqrt(2). Table trajectory: n, ratio, ratio_nlln, bound, current_ratio.\n"
           "Grid observables add the clil_* diagnostic scalars.\n" +
           common;
  }
  if (kind == "counterexample") {
    return "counterexample: renewal chain (model.kind=renewal) with X = 1{W_0 = 0} - pi_0.\n"
           "Gate: Eτ²=∞ (E tau^2 = infinity) is required, so model.renewal.tail_exponent must lie\n"
           "in (2, 3]; tail > 3 is rejected (exit 2). Tail mass past the truncation is lumped on N.\n"
           "Outputs: weighted series sum a_n ||E_0(S_n)||_2 / n^{3/2} (counterexample.weight_rule:\n"
           "one | inv_log | inv_loglog | inv_sqrt_log), exact Var(S_n)/n at counterexample.variance_ns,\n"
           "E tau^2 partial sums, and max_{k<=n}|S_k|/sqrt(nL(L(n))) over counterexample.seeds paths of\n"
           "length run.horizon. Tables: weighted_series, series_sensitivity, variance_growth,\n"
           "second_moment_partials, empirical_trajectory, abs_sn_quantiles.\n" +
           common;
  }
  if (kind == "empirical") {
    return "empirical: X_n(t) = 1{Y_n <= t} - F(t) in L^p(mu), mu given by grid.* and p = grid.p.\n"
           "Driver: empirical.driver=markov (Y = observable.ymap(W)) or uniform (iid Uniform(0,1)).\n"
           "Distribution of sqrt(n) D_{n,p} over run.paths paths, Gamma for the constant dual function\n"
           "against the exact sigma, optional LIL trajectory (empirical.lil_horizon) estimating Lambda.\n"
           "Coefficients phi, alpha, tau-check to empirical.lags with bound slacks (finite mu), and the\n"
           "phi / quantile series. empirical.mode=oracle also writes oracle.json; empirical.reference\n"
           "compares the mean with such a file; empirical.sample_csv measures D_{n,p} on external data.\n"
           "Tables: gamma, coefficients (n, phi_tilde, alpha_tilde, tau_check, lemma63_slack,\n"
           "lemma64_phi_slack, lemma64_alpha_slack), theomix_i, theomix_ii, lil_trajectory.\n" +
           common;
  }
  throw SpecError("experiment", "unknown experiment kind '" + kind + "'");
}

}  // namespace mwlab
