#include "mwlab/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace mwlab {

namespace {

void require_ascending(const QuadratureGrid<double>& grid) {
  grid.validate();
  for (Index i = 1; i < grid.size(); ++i) {
    if (!(grid.points[i] > grid.points[i - 1])) throw InvalidArgument("empirical: grid points must be strictly ascending");
  }
}

/// F_mu(x) = mu([0, x)) for x >= 0 and -mu([x, 0)) for x < 0.
double f_mu(const QuadratureGrid<double>& grid, double x) {
  double acc = 0;
  for (Index i = 0; i < grid.size(); ++i) {
    const double t = grid.points[i];
    if (x >= 0 && t >= 0 && t < x) acc += grid.weights[i];
    if (x < 0 && t >= x && t < 0) acc -= grid.weights[i];
  }
  return acc;
}

void fill_moments(EmpiricalSetup& s) {
  s.moment_integral = 0;
  for (Index i = 0; i < s.grid.size(); ++i) {
    const double F = s.F[i];
    s.moment_integral += s.grid.weights[i] * std::pow(s.grid.points[i] >= 0 ? 1 - F : F, s.p);
  }
  s.moment_bis = 0;
  if (s.driver == DriverKind::markov) {
    for (Index w = 0; w < s.model.size(); ++w) {
      s.moment_bis += s.model.stationary()[w] * std::pow(std::abs(f_mu(s.grid, s.y[w])), 2 / s.p);
    }
  } else {
    // U uniform on [0, 1): F_mu is constant between consecutive grid points.
    std::vector<double> cuts{0.0};
    for (Index i = 0; i < s.grid.size(); ++i)
      if (s.grid.points[i] > 0 && s.grid.points[i] < 1) cuts.push_back(s.grid.points[i]);
    cuts.push_back(1.0);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
      s.moment_bis += (cuts[k + 1] - cuts[k]) * std::pow(std::abs(f_mu(s.grid, mid)), 2 / s.p);
    }
  }
}

void validate_F(const EmpiricalSetup& s) {
  for (Index i = 0; i < s.F.size(); ++i) {
    if (s.F[i] < -1e-15 || s.F[i] > 1 + 1e-15) throw NumericalError("empirical: F leaves [0, 1] on the grid");
    if (i > 0 && s.F[i] < s.F[i - 1] - 1e-15) throw NumericalError("empirical: F decreases on the grid");
  }
}

/// Columns: 1{y(w) <= t_j} for the given thresholds.
Matrix<double> indicator(const Vector<double>& y, const std::vector<double>& thresholds) {
  Matrix<double> C(y.size(), static_cast<Index>(thresholds.size()));
  for (Index w = 0; w < y.size(); ++w)
    for (std::size_t j = 0; j < thresholds.size(); ++j) C(w, static_cast<Index>(j)) = y[w] <= thresholds[j] ? 1.0 : 0.0;
  return C;
}

std::vector<double> grid_points(const QuadratureGrid<double>& grid) {
  return std::vector<double>(grid.points.data(), grid.points.data() + grid.size());
}

struct LagCoefficients {
  double phi, alpha, tau_check, tau_strong;
};

/// Coefficients from Delta_y (states x distinct y) and Delta_g (states x grid).
LagCoefficients coefficients(const EmpiricalSetup& s, const Matrix<double>& dy, const Matrix<double>& dg) {
  const auto& pi = s.model.stationary();
  LagCoefficients c{};
  c.phi = dy.size() ? dy.cwiseAbs().maxCoeff() : 0.0;
  c.alpha = dy.size() ? (pi.transpose() * dy.cwiseAbs()).maxCoeff() : 0.0;
  const auto& w = s.grid.weights;
  const double p = s.p;
  // Strong form: (sum_w pi_w (sum_i w_i |D|^p)^{2/p})^{1/2}.
  double strong = 0;
  for (Index st = 0; st < dg.rows(); ++st) {
    const double inner = (w.transpose().array() * dg.row(st).array().abs().pow(p)).sum();
    strong += pi[st] * std::pow(inner, 2 / p);
  }
  c.tau_strong = std::sqrt(strong);
  if (p >= 2) {
    c.tau_check = c.tau_strong;
  } else {
    const RowVector<double> second = pi.transpose() * dg.array().square().matrix();
    c.tau_check = std::pow((w.transpose().array() * second.array().pow(p / 2)).sum(), 1 / p);
  }
  return c;
}

}  // namespace

EmpiricalSetup markov_setup(Model model, Vector<double> y, QuadratureGrid<double> grid, double p) {
  if (!(p >= 1)) throw InvalidArgument("empirical: p must be >= 1");
  if (y.size() != model.size()) throw InvalidArgument("empirical: ymap must give one value per state");
  require_ascending(grid);
  EmpiricalSetup s;
  s.driver = DriverKind::markov;
  s.model = std::move(model);
  s.y = std::move(y);
  s.grid = std::move(grid);
  s.p = p;
  s.F.resize(s.grid.size());
  for (Index i = 0; i < s.grid.size(); ++i) {
    double acc = 0;
    for (Index w = 0; w < s.y.size(); ++w)
      if (s.y[w] <= s.grid.points[i]) acc += s.model.stationary()[w];
    s.F[i] = std::min(acc, 1.0);
  }
  validate_F(s);
  fill_moments(s);
  return s;
}

EmpiricalSetup uniform_setup(QuadratureGrid<double> grid, double p) {
  if (!(p >= 1)) throw InvalidArgument("empirical: p must be >= 1");
  require_ascending(grid);
  EmpiricalSetup s;
  s.driver = DriverKind::uniform;
  s.grid = std::move(grid);
  s.p = p;
  s.F = s.grid.points.cwiseMax(0.0).cwiseMin(1.0);
  validate_F(s);
  fill_moments(s);
  return s;
}

Field EmpiricalSetup::observable() const {
  if (driver != DriverKind::markov) throw InvalidArgument("empirical: observable needs a Markov driver");
  Matrix<double> v = indicator(y, grid_points(grid));
  v.rowwise() -= F.transpose();
  Field f = Field::on_grid(std::move(v), grid, p);
  f.centered = true;
  return f;
}

std::pair<std::vector<double>, std::vector<double>> EmpiricalSetup::law() const {
  std::map<double, double> mass;
  for (Index w = 0; w < y.size(); ++w) mass[y[w]] += model.stationary()[w];
  std::pair<std::vector<double>, std::vector<double>> out;
  for (const auto& [v, m] : mass) {
    out.first.push_back(v);
    out.second.push_back(m);
  }
  return out;
}

double empirical_cdf_distance(const std::vector<double>& sample, const Vector<double>& F,
                              const QuadratureGrid<double>& grid, double p) {
  if (sample.empty()) throw InvalidArgument("empirical_cdf_distance: sample is empty");
  if (F.size() != grid.size()) throw InvalidArgument("empirical_cdf_distance: F must be given on the grid");
  if (!(p >= 1)) throw InvalidArgument("empirical_cdf_distance: p must be >= 1");
  std::vector<double> sorted = sample;
  std::sort(sorted.begin(), sorted.end());
  const double n = double(sorted.size());
  double acc = 0;
  for (Index i = 0; i < grid.size(); ++i) {
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), grid.points[i]) - sorted.begin();
    acc += grid.weights[i] * std::pow(std::abs(double(count) / n - F[i]), p);
  }
  return std::pow(acc, 1 / p);
}

std::vector<double> read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open sample file " + path);
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string cell = line.substr(0, line.find(','));
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      if (lineno == 1) continue;  // header
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": not a number: " + cell);
    }
  }
  if (out.empty()) throw InvalidArgument(path + ": no observations");
  return out;
}

double CoefficientTable::min_slack() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (r.n < 1) continue;
    for (double s : {r.lemma63_phi_slack, r.lemma63_alpha_slack, r.lemma64_phi_slack, r.lemma64_alpha_slack})
      if (!std::isnan(s)) m = std::min(m, s);
  }
  return m;
}

Table CoefficientTable::to_table() const {
  Table t{"coefficients",
          {"n", "phi_tilde", "alpha_tilde", "tau_check", "lemma63_slack", "lemma64_phi_slack", "lemma64_alpha_slack"},
          {}};
  for (const auto& r : rows) {
    t.add({double(r.n), r.phi_tilde, r.alpha_tilde, r.tau_check, std::min(r.lemma63_phi_slack, r.lemma63_alpha_slack),
           r.lemma64_phi_slack, r.lemma64_alpha_slack});
  }
  return t;
}

CoefficientTable mixing_coefficients(const EmpiricalSetup& setup, std::int64_t n_max) {
  if (n_max < 0) throw InvalidArgument("mixing_coefficients: n_max must be >= 0");
  CoefficientTable table;
  table.p = setup.p;
  if (setup.driver == DriverKind::uniform) {
    for (std::int64_t n = 1; n <= n_max; ++n) table.rows.push_back({n});
    return table;
  }
  const auto values = setup.law().first;
  Matrix<double> Ay = indicator(setup.y, values);
  Matrix<double> Ag = indicator(setup.y, grid_points(setup.grid));
  RowVector<double> Fy(static_cast<Index>(values.size()));
  const auto probs = setup.law().second;
  double acc = 0;
  for (std::size_t j = 0; j < values.size(); ++j) Fy[static_cast<Index>(j)] = acc += probs[j];
  for (std::int64_t n = 0; n <= n_max; ++n) {
    if (n > 0) {
      Ay = setup.model.apply(Ay);
      Ag = setup.model.apply(Ag);
    }
    const Matrix<double> dy = Ay.rowwise() - Fy;
    const Matrix<double> dg = Ag.rowwise() - setup.F.transpose();
    const auto c = coefficients(setup, dy, dg);
    CoefficientRow row;
    row.n = n;
    row.phi_tilde = c.phi;
    row.alpha_tilde = c.alpha;
    row.tau_check = c.tau_check;
    row.tau_strong = c.tau_strong;
    table.rows.push_back(row);
  }
  return table;
}

double tau_check(const EmpiricalSetup& setup, std::int64_t n) {
  if (n < 0) throw InvalidArgument("tau_check: n must be >= 0");
  if (setup.driver == DriverKind::uniform) {
    if (n == 0) throw InvalidArgument("tau_check: lag 0 needs a Markov driver");
    return 0.0;
  }
  DyadicPowers<double> powers(setup.model);
  const Matrix<double> Ag = powers.apply(static_cast<std::uint64_t>(n), indicator(setup.y, grid_points(setup.grid)));
  const Matrix<double> dg = Ag.rowwise() - setup.F.transpose();
  return coefficients(setup, Matrix<double>(), dg).tau_check;
}

void bound_checks(CoefficientTable& table, const EmpiricalSetup& setup) {
  if (setup.grid.infinite_measure) throw InvalidArgument("bound_checks: the coefficient bounds need a finite measure mu");
  const double p = setup.p;
  const double q = std::max(2.0, p);
  const double mass = std::pow(setup.grid.mass(), 1 / p);
  const auto& w = setup.grid.weights;
  const Vector<double> var = setup.F.cwiseProduct((Vector<double>::Ones(setup.F.size()) - setup.F));
  const double phi_integral = std::pow((w.array() * var.array().pow(p / 2)).sum(), 1 / p);
  for (auto& r : table.rows) {
    r.lemma63_phi_slack = mass * r.phi_tilde - r.tau_strong;
    r.lemma63_alpha_slack = mass * std::pow(r.alpha_tilde, 1 / q) - r.tau_strong;
    if (p <= 2) {
      r.lemma64_phi_slack = std::sqrt(2.0) * phi_integral * std::sqrt(r.phi_tilde) - r.tau_check;
      const double alpha_integral =
          std::pow((w.array() * var.array().min(r.alpha_tilde).pow(p / 2)).sum(), 1 / p);
      r.lemma64_alpha_slack = std::sqrt(2.0) * alpha_integral - r.tau_check;
    } else {
      r.lemma64_phi_slack = std::numeric_limits<double>::quiet_NaN();
      r.lemma64_alpha_slack = std::numeric_limits<double>::quiet_NaN();
    }
  }
}

double quantile_function(const EmpiricalSetup& setup, double x) {
  if (x < 0) throw InvalidArgument("quantile_function: x must be >= 0");
  if (setup.driver == DriverKind::uniform) return std::max(0.0, 1 - x);
  std::map<double, double> mass;
  for (Index w = 0; w < setup.y.size(); ++w) mass[std::abs(setup.y[w])] += setup.model.stationary()[w];
  // Candidates t are 0 and the atoms of |Y|; P(|Y| > t) is right-continuous.
  double remaining = 0;
  for (const auto& [v, m] : mass) remaining += m;
  if (remaining - (mass.count(0.0) ? mass.at(0.0) : 0.0) <= x) return 0.0;
  for (const auto& [v, m] : mass) {
    remaining -= m;
    if (remaining <= x) return v;
  }
  return mass.rbegin()->first;
}

double quantile_integral(const EmpiricalSetup& setup, double a) {
  if (a <= 0) return 0.0;
  const double s = setup.p / 2;
  const auto power = [&](double u) { return std::pow(u, s) / s; };
  if (setup.driver == DriverKind::uniform) {
    const double b = std::min(a, 1.0);
    return power(b) - std::pow(b, s + 1) / (s + 1);
  }
  std::map<double, double> mass;
  for (Index w = 0; w < setup.y.size(); ++w) mass[std::abs(setup.y[w])] += setup.model.stationary()[w];
  // Q(x) = a_j on [G(a_j), G(a_{j-1})) with G(t) = P(|Y| > t), a_0 = 0.
  double total = 0;
  double upper = 0;  // G(a_{j-1})
  for (const auto& [v, m] : mass) upper += m;
  upper -= mass.count(0.0) ? mass.at(0.0) : 0.0;
  double G = upper;
  for (const auto& [v, m] : mass) {
    if (v == 0.0) continue;
    const double lower = G - m;  // G(a_j)
    const double lo = std::max(0.0, std::min(lower, a));
    const double hi = std::min(G, a);
    if (hi > lo) total += v * (power(hi) - power(lo));
    G = lower;
  }
  return total;
}

SeriesTrace<double> theomix_series(const EmpiricalSetup& setup, TheomixBranch branch, std::int64_t n_max) {
  if (n_max < 1) throw InvalidArgument("theomix_series: n_max must be >= 1");
  if (branch == TheomixBranch::quantile && !setup.grid.lebesgue) {
    throw InvalidArgument("theomix_series: branch (ii) needs mu = Lebesgue (a trapezoid grid)");
  }
  const auto table = mixing_coefficients(setup, n_max);
  SeriesBuilder<double> series(branch == TheomixBranch::phi ? "theomix_i" : "theomix_ii", 1, true);
  for (const auto& r : table.rows) {
    if (r.n < 1) continue;
    const double coeff = branch == TheomixBranch::phi
                             ? std::sqrt(r.phi_tilde)
                             : std::pow(quantile_integral(setup, r.alpha_tilde), 1 / setup.p);
    if (!series.push(coeff / std::sqrt(double(r.n)))) break;
  }
  return series.finish();
}

double exact_gamma(const EmpiricalSetup& setup, const RowVector<double>& f) {
  if (f.size() != setup.grid.size()) throw InvalidArgument("exact_gamma: test function must live on the grid");
  const RowVector<double> a = setup.grid.weights.transpose().cwiseProduct(f);
  if (setup.driver == DriverKind::markov) {
    const Field g = project(setup.observable(), f);
    return std::sqrt(std::max(0.0, martingale_difference(setup.model, g).sigma2[0]));
  }
  // iid: Var(sum_i a_i 1{U <= t_i}) = sum_ij a_i a_j (F(min) - F_i F_j).
  double var = 0;
  for (Index i = 0; i < a.size(); ++i)
    for (Index j = 0; j < a.size(); ++j) var += a[i] * a[j] * (std::min(setup.F[i], setup.F[j]) - setup.F[i] * setup.F[j]);
  return std::sqrt(std::max(0.0, var));
}

ExperimentResult empirical_limit_experiment(const EmpiricalSetup& setup, std::int64_t n, std::uint64_t M,
                                            std::uint64_t seed, const EmpiricalOptions& opt) {
  if (n < 1 || M < 2) throw InvalidArgument("empirical_limit_experiment: need n >= 1 and M >= 2");
  Matrix<double> dual = opt.dual;
  if (dual.size() == 0) dual = Matrix<double>::Ones(1, setup.grid.size());
  if (dual.cols() != setup.grid.size()) throw InvalidArgument("empirical_limit_experiment: dual functions must live on the grid");
  const auto draw_path = [&](std::uint64_t stream, std::int64_t length, auto&& sink) {
    if (setup.driver == DriverKind::uniform) {
      const CounterRng rng(seed, stream);
      for (std::int64_t t = 0; t < length; ++t) sink(t, rng.uniform(t));
      return;
    }
    PathStream<double> walker(setup.model, 0, seed, stream);
    for (std::int64_t t = 0; t < length; ++t) {
      sink(t, setup.y[walker.state()]);
      if (t + 1 < length) walker.advance();
    }
  };
  const double root = std::sqrt(double(n));
  const auto& grid = setup.grid;
  const Index G = grid.size();
  struct PathStats {
    double distance = 0;
    std::vector<double> functionals;
  };
  const auto stats = parallel_map<PathStats>(M, opt.threads, [&](std::uint64_t stream) {
    // counts[i] = #{Y <= t_i}, accumulated from bin hits.
    std::vector<std::int64_t> bins(static_cast<std::size_t>(G) + 1, 0);
    const double* first = grid.points.data();
    const double* last = first + G;
    draw_path(stream, n, [&](std::int64_t, double yv) { ++bins[static_cast<std::size_t>(std::lower_bound(first, last, yv) - first)]; });
    RowVector<double> centered(G);
    std::int64_t running = 0;
    for (Index i = 0; i < G; ++i) {
      running += bins[static_cast<std::size_t>(i)];
      centered[i] = double(running) / double(n) - setup.F[i];
    }
    PathStats s;
    s.distance = root * std::pow((grid.weights.transpose().array() * centered.array().abs().pow(setup.p)).sum(), 1 / setup.p);
    for (Index k = 0; k < dual.rows(); ++k) s.functionals.push_back(root * (grid.weights.transpose().cwiseProduct(dual.row(k))).dot(centered));
    return s;
  });

  ExperimentResult r;
  r.name = "empirical";
  r.seed = seed;
  r.stream_end = M;
  std::vector<double> dist;
  for (const auto& s : stats) dist.push_back(s.distance);
  const double mean = std::accumulate(dist.begin(), dist.end(), 0.0) / double(M);
  double var = 0;
  for (double x : dist) var += (x - mean) * (x - mean);
  var /= double(M - 1);
  std::vector<double> sorted = dist;
  std::sort(sorted.begin(), sorted.end());
  const auto q = [&](double pr) { return sorted[std::min(sorted.size() - 1, static_cast<std::size_t>(pr * double(M)))]; };
  r.scalars["mean_scaled_distance"] = mean;
  r.scalars["sd_scaled_distance"] = std::sqrt(var);
  r.scalars["stderr_scaled_distance"] = std::sqrt(var / double(M));
  r.scalars["median_scaled_distance"] = q(0.5);
  r.scalars["q90_scaled_distance"] = q(0.9);
  r.scalars["n"] = double(n);
  r.scalars["paths"] = double(M);
  r.scalars["grid_points"] = double(G);
  r.scalars["moment_integral"] = setup.moment_integral;
  r.scalars["moment_bis"] = setup.moment_bis;

  Table gamma{"gamma", {"direction", "gamma_estimate", "gamma_exact", "band"}, {}};
  for (Index k = 0; k < dual.rows(); ++k) {
    double m = 0, v = 0;
    for (const auto& s : stats) m += s.functionals[static_cast<std::size_t>(k)];
    m /= double(M);
    for (const auto& s : stats) v += (s.functionals[static_cast<std::size_t>(k)] - m) * (s.functionals[static_cast<std::size_t>(k)] - m);
    const double est = std::sqrt(v / double(M - 1));
    const double exact = exact_gamma(setup, dual.row(k));
    const double band = 3 * exact / std::sqrt(2.0 * double(M - 1));
    gamma.add({double(k), est, exact, band});
    if (k == 0) {
      r.scalars["gamma_estimate"] = est;
      r.scalars["gamma_exact"] = exact;
      r.add_verdict("gamma_matches_exact", std::abs(est - exact) <= band + 1e-12, std::abs(est - exact), 0.0, band,
                    "|Gamma estimate - exact martingale sigma| within 3 Monte Carlo sd");
    }
  }
  r.tables.push_back(std::move(gamma));
  if (exact_gamma(setup, RowVector<double>::Ones(G)) <= 1e-12 && mean <= 1e-12) {
    r.notes.push_back("degenerate setup: the scaled distance vanishes identically");
  }
  if (opt.reference_mean) {
    const double ref = *opt.reference_mean;
    const double rel = std::abs(mean - ref) / ref;
    r.scalars["reference_mean"] = ref;
    r.scalars["relative_error_to_reference"] = rel;
    r.add_verdict("reference_mean", rel <= opt.reference_tolerance, rel, opt.reference_tolerance, 0.0,
                  "|mean sqrt(n) D - reference| / reference");
  }

  if (opt.lil_horizon > 0) {
    const auto checkpoints = geometric_checkpoints(std::min(opt.lil_burn_in, opt.lil_horizon), opt.lil_horizon, 4);
    Table traj{"lil_trajectory", {"n", "running_max", "current"}, {}};
    RowVector<double> S = RowVector<double>::Zero(G);
    double run = 0;
    std::size_t next = 0;
    draw_path(M, opt.lil_horizon, [&](std::int64_t t, double yv) {
      for (Index i = 0; i < G; ++i) S[i] += (yv <= grid.points[i] ? 1.0 : 0.0) - setup.F[i];
      const std::int64_t nn = t + 1;
      const double value =
          std::pow((grid.weights.transpose().array() * S.array().abs().pow(setup.p)).sum(), 1 / setup.p) /
          lil_normalizer2(double(nn));
      if (nn >= opt.lil_burn_in) run = std::max(run, value);
      if (next < checkpoints.size() && checkpoints[next] == nn) {
        traj.add({double(nn), run, value});
        ++next;
      }
    });
    r.tables.push_back(std::move(traj));
    r.scalars["lambda_estimate"] = run;
    r.notes.push_back("the LIL path uses stream M, disjoint from the Monte Carlo streams 0..M-1");
  }
  return r;
}

}  // namespace mwlab
