// Acceptance run: one pass/fail line per criterion. Exit status 0 iff all pass.
#include "mwlab/harness.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

using namespace mwlab;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_seconds;
  const bool ok = o.passed && in_time;
  if (!ok) ++failures;
  std::printf("AC%-2d %s  %s  [%.2fs, limit %.0fs%s]\n", id, ok ? "PASS" : "FAIL", o.detail.c_str(), secs, limit_seconds,
              in_time ? "" : ", over time");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Matrix<double> naive_power(const Model& m, long n) {
  const Matrix<double> P = m.dense_transition();
  Matrix<double> out = Matrix<double>::Identity(m.size(), m.size());
  for (long k = 0; k < n; ++k) out = out * P;
  return out;
}

Field random_centered(const Model& m, std::uint64_t seed) {
  const CounterRng rng(seed, 7);
  Vector<double> v(m.size());
  for (Index i = 0; i < m.size(); ++i) v[i] = rng.uniform(i) * 2.0 - 1.0;
  return center_observable(m, Field::scalar(v));
}

Field centered_indicator(const Model& m) {
  Vector<double> v = Vector<double>::Zero(m.size());
  v[0] = 1.0;
  return center_observable(m, Field::scalar(v));
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main() {
  const unsigned threads = default_threads();

  criterion(1, 5, [] {
    double res = 0, mean = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto m = random_chain(3 + static_cast<Index>(seed % 48), seed);
      const auto sol = solve_poisson(m, random_centered(m, seed));
      res = std::max(res, sol.residual);
      mean = std::max(mean, sol.mean_defect);
    }
    return Outcome{res <= 1e-10 && mean <= 1e-10,
                   fmt("Poisson on 50 chains: max residual %.2e, max |pi(h)| %.2e (tol 1e-10)", res, mean)};
  });

  criterion(2, 5, [] {
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto m = random_chain(3 + static_cast<Index>(seed % 48), seed);
      const auto f = random_centered(m, seed);
      const double s2 = martingale_difference(m, f).sigma2[0];
      worst = std::max(worst, std::abs(s2 - autocovariance_series_variance(m, f, 400)));
    }
    const auto half = two_state_model(0.5, 0.5);
    const double quarter = martingale_difference(half, centered_indicator(half)).sigma2[0];
    return Outcome{worst <= 1e-8 && std::abs(quarter - 0.25) <= 1e-12,
                   fmt("max |sigma2 - autocov series| %.2e (tol 1e-8); a=b=1/2: sigma2 - 1/4 = %.1e (tol 1e-12)", worst,
                       quarter - 0.25)};
  });

  criterion(3, 30, [threads] {
    const auto m = random_chain(5, 2024);
    const auto f = random_centered(m, 2024);
    const int d = 8;
    const auto profiles = lagged_conditional_profiles(m, f, d);
    struct PathCheck {
      double slack = 0;
      double reconstruction = 0;
    };
    const auto checks = parallel_map<PathCheck>(100, threads, [&](std::uint64_t stream) {
      const auto path = simulate_path(m, -256, 256, 7, stream);
      const auto c = dyadic_components(m, f, path, d, &profiles);
      const auto sums = partial_sums(m, f, path, 256);
      PathCheck out{verify_dyadic_inequality(c, sums).slack(), 0.0};
      for (std::int64_t i = 1; i <= 256; ++i)
        out.reconstruction = std::max(out.reconstruction, std::abs(c.reconstruct(i)(0) - sums.at(i)(0)));
      return out;
    });
    double slack = 1e300, recon = 0;
    for (const auto& c : checks) {
      slack = std::min(slack, c.slack);
      recon = std::max(recon, c.reconstruction);
    }
    double brute = 0;
    for (Index states : {2, 6, 10}) {
      const auto mm = random_chain(states, static_cast<std::uint64_t>(states));
      const auto ff = random_centered(mm, 5);
      const auto e = lagged_conditional_profiles(mm, ff, 6);
      for (int k = 0; k <= 6; ++k) {
        const long lag = 1L << k;
        Vector<double> direct = Vector<double>::Zero(states);
        for (long t = 0; t < lag; ++t) direct += naive_power(mm, t + lag) * ff.values.col(0);
        brute = std::max(brute, (e[static_cast<std::size_t>(k)].col(0) - direct).cwiseAbs().maxCoeff());
      }
    }
    return Outcome{slack >= -1e-9 && brute <= 1e-10,
                   fmt("100 paths d=8: min slack %.3g (tol -1e-9), reconstruction err %.1e; brute-force e_k err %.1e "
                       "(tol 1e-10)",
                       slack, recon, brute)};
  });

  criterion(4, 1, [] {
    Vector<double> row(4);
    row << 0.1, 0.2, 0.3, 0.4;
    const auto m = iid_model(row);
    const auto f = random_centered(m, 4);
    const auto s = mw2_norm(m, f, 40);
    const double exact = gaussian_norm(m, f) / (1 - std::pow(2.0, -0.5));
    const double tail = s.tail_estimate.value_or(0.0);
    const double certified = std::abs(s.sum() + tail - exact);
    const double partial = std::abs(s.sum() - exact);
    return Outcome{s.tail_estimate.has_value() && certified <= 1e-6,
                   fmt("||f||_G = %.4f: |partial(40) + certified tail - closed form| = %.1e (tol 1e-6); "
                       "partial alone off by %.2e",
                       gaussian_norm(m, f), certified, partial)};
  });

  criterion(5, 60, [threads] {
    const auto m = two_state_model(0.3, 0.6);
    LimitOptions opt;
    opt.threads = threads;
    const auto r = clt_experiment(m, centered_indicator(m), 4096, 5000, 1, opt);
    return Outcome{r.scalar("ks_statistic") < 0.03,
                   fmt("KS %.4f vs Normal(0, %.6f) (threshold 0.03)", r.scalar("ks_statistic"), r.scalar("sigma2"))};
  });

  criterion(6, 120, [] {
    const auto m = two_state_model(0.3, 0.6);
    const auto r = lil_experiment(m, centered_indicator(m), 10000000, 1);
    const double ratio = r.scalar("final_ratio_to_sigma");
    const bool band = r.verdict("lil_band").passed;
    const bool bound = r.verdict("mw2_bound").passed;
    return Outcome{band && bound, fmt("running max / sigma = %.4f (band [0.7, 1.2]); max ratio to 10 sqrt2 MW2 = %.4f "
                                      "(<= 1)",
                                      ratio, r.scalar("max_ratio_to_bound"))};
  });

  criterion(7, 300, [threads] {
    CounterexampleOptions ce;
    ce.variance_ns = {100, 1000, 10000, 100000};
    ce.horizon = 1000000;
    ce.empirical_from = 10000;
    ce.seeds = 10;
    ce.required_increases = 8;
    LimitOptions opt;
    opt.threads = threads;
    const auto r = counterexample_experiment({3.0, 4096}, 1, ce, opt);
    const bool var = r.verdict("variance_strictly_increasing").passed;
    const bool emp = r.verdict("empirical_growth").passed;
    const auto& g = r.table("variance_growth").rows;
    std::string growth;
    for (const auto& row : g) growth += fmt("%.4g ", row[1]);
    return Outcome{var && emp, "Var(S_n)/n at 1e2..1e5: " + growth + (var ? "(increasing)" : "(NOT increasing)") +
                                   fmt("; empirical growth 1e4->1e6 on %.0f/10 seeds (need 8)",
                                       r.scalar("empirical_increases"))};
  });

  criterion(8, 5, [] {
    Vector<double> y(2);
    y << 0, 1;
    double worst_slack = 1e300, worst_phi = 0;
    for (double p : {1.0, 2.0}) {
      const auto s = markov_setup(two_state_model(0.3, 0.6), y, QuadratureGrid<double>::trapezoid(-1.0, 2.0, 64), p);
      auto t = mixing_coefficients(s, 64);
      bound_checks(t, s);
      worst_slack = std::min(worst_slack, t.min_slack());
      // P^n = Pi + lambda^n (I - Pi): sup |P^n 1{y<=t} - F| = max(pi_0, pi_1) |lambda|^n.
      for (const auto& r : t.rows)
        worst_phi = std::max(worst_phi, std::abs(r.phi_tilde - 2.0 / 3.0 * std::pow(0.1, double(r.n))));
    }
    return Outcome{worst_slack >= -1e-10 && worst_phi <= 1e-10,
                   fmt("64-point grid, lags <= 64, p in {1,2}: min slack %.3g (tol -1e-10); |phi - (2/3) 0.1^n| <= %.1e",
                       worst_slack, worst_phi)};
  });

  criterion(9, 180, [threads] {
    const std::filesystem::path path = MWLAB_TEST_DATA "/empirical_oracle.json";
    const auto oracle = nlohmann::json::parse(std::ifstream(path));
    const auto s = uniform_setup(QuadratureGrid<double>::trapezoid(0.0, 1.0, 512), 1.0);
    EmpiricalOptions opt;
    opt.threads = threads;
    opt.reference_mean = oracle.at("mean").get<double>();
    const auto r = empirical_limit_experiment(s, 4096, 2000, 1, opt);
    return Outcome{r.verdict("reference_mean").passed,
                   fmt("mean sqrt(n) D = %.5f vs oracle %.5f (n=1e5, M=1e4): rel err %.4f (tol 0.05); "
                       "Brownian-bridge value %.5f",
                       r.scalar("mean_scaled_distance"), *opt.reference_mean, r.scalar("relative_error_to_reference"),
                       std::sqrt(2 * M_PI) / 8)};
  });

  criterion(10, 60, [threads] {
    Vector<double> row(5);
    row << 0.1, 0.3, 0.2, 0.25, 0.15;
    const auto iid = iid_model(row);
    const auto f = random_centered(iid, 10);
    double hopf = 1e300;
    for (const auto& h : hopf_check(iid, f, 1024, 10000, {0.5, 1.0, 2.0}, 1, threads)) hopf = std::min(hopf, h.slack());
    Vector<double> half(2);
    half << 0.5, 0.5;
    const auto coin = iid_model(half);
    Vector<double> sign(2);
    sign << 1, -1;
    const auto d = martingale_difference(coin, Field::scalar(sign));
    const auto doob = doob_ratio(coin, d, 1024, 10000, 1, threads);
    return Outcome{hopf >= 0 && !doob.exceeds_two && !doob.degenerate,
                   fmt("Hopf min slack %.4f (>= 0); Doob ratio %.4f, sigma %.4f (<= 2 + 3 sigma)", hopf, doob.ratio,
                       doob.sigma)};
  });

  criterion(11, 120, [threads] {
    const auto root = std::filesystem::temp_directory_path() / "mwlab_acceptance_repro";
    std::filesystem::remove_all(root);
    std::vector<ExperimentSpec> specs(3);
    specs[0].kind = "clt";
    specs[1].kind = "dyadic";
    specs[1].model = "random";
    specs[1].observable = "random";
    specs[1].paths = 200;
    specs[1].n = 256;
    specs[2] = parse_spec("experiment=empirical\nempirical.driver=uniform\ngrid.kind=trapezoid\ngrid.points=128\n"
                          "grid.p=1\nrun.n=1000\nrun.paths=200\n");
    std::size_t compared = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      std::vector<std::filesystem::path> dirs;
      for (unsigned rep = 0; rep < 2; ++rep) {
        const auto dir = root / (specs[i].kind + std::to_string(rep));
        // The repeat runs with a different worker count.
        write_bundle(specs[i], run_experiment(specs[i], rep == 0 ? 1 : threads), dir);
        dirs.push_back(dir);
      }
      for (const auto& entry : std::filesystem::directory_iterator(dirs[0])) {
        const auto name = entry.path().filename();
        if (name == "MANIFEST") continue;
        if (read_file(dirs[0] / name) != read_file(dirs[1] / name)) {
          return Outcome{false, "differs: " + specs[i].kind + "/" + name.string()};
        }
        ++compared;
      }
      std::istringstream manifest(read_file(dirs[0] / "MANIFEST"));
      std::string tag, name, sum;
      while (manifest >> tag) {
        if (tag != "file") {
          std::getline(manifest, sum);
          continue;
        }
        manifest >> name >> sum;
        if (sha256_hex(read_file(dirs[0] / name)) != sum) return Outcome{false, "MANIFEST checksum mismatch: " + name};
      }
    }
    std::filesystem::remove_all(root);
    return Outcome{true, fmt("%.0f output files byte-identical across repeats (1 vs N threads); MANIFEST checksums "
                             "verified",
                             double(compared))};
  });

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
