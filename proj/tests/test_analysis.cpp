#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "json.hpp"
#include "kpzfit/analysis.hpp"
#include "kpzfit/errors.hpp"
#include "kpzfit/rng.hpp"

using namespace kpzfit;

namespace {

const LawTable& gue_table() {
  static const LawTable table(LimitLaw::gue());
  return table;
}

// Exact lattice masses F(s + d/2) - F(s - d/2) on anchor + d Z.
LatticeDistribution exact_lattice(const LawTable& law, double delta, double anchor) {
  const long lo = static_cast<long>(std::floor((-8.0 - anchor) / delta));
  const long hi = static_cast<long>(std::ceil((8.0 - anchor) / delta));
  std::vector<double> m;
  for (long k = lo; k <= hi; ++k) {
    const double s = anchor + static_cast<double>(k) * delta;
    m.push_back(law.cdf(s + 0.5 * delta) - law.cdf(s - 0.5 * delta));
  }
  return distribution_from_masses(delta, anchor, lo, m);
}

// h = round(v t + shift + (gamma t)^{1/3} zeta), zeta ~ GUE.
std::vector<long> synthetic_heights(double t, long n, double v, double gamma, double shift,
                                    std::uint64_t seed) {
  Stream rng(seed, static_cast<std::uint64_t>(t));
  std::vector<long> h(static_cast<std::size_t>(n));
  const double scale = std::cbrt(gamma * t);
  for (long& x : h) x = std::lround(v * t + shift + scale * gue_table().quantile(rng.uniform()));
  return h;
}

// Step TASEP tagged positions with n = t/4, 10^5 runs, shared across tests.
const RunBatch& step_batch(double t) {
  static std::map<double, RunBatch> cache;
  auto it = cache.find(t);
  if (it == cache.end()) {
    SimConfig c;
    c.model = Model::tasep_step;
    c.t = t;
    c.n = std::lround(t / 4);
    c.runs = 100000;
    c.seed = 1;
    it = cache.emplace(t, batch(c)).first;
  }
  return it->second;
}

// Lattice masses of round-to-site of a law sampled by inverse CDF.
std::vector<double> sampled_masses(const std::vector<double>& site_cdf, long draws, Stream& rng) {
  std::vector<double> m(site_cdf.size(), 0.0);
  for (long i = 0; i < draws; ++i) {
    const auto k = std::lower_bound(site_cdf.begin(), site_cdf.end(), rng.uniform()) - site_cdf.begin();
    m[static_cast<std::size_t>(std::min<long>(k, static_cast<long>(m.size()) - 1))] += 1.0;
  }
  return m;
}

}  // namespace

TEST_CASE("analysis: exact masses, cdf and moments") {
  const LatticeDistribution d = distribution_from_masses(0.5, 0.25, -1, {1.0, 2.0, 1.0});
  CHECK(d.s_at(0) == doctest::Approx(-0.25));
  CHECK(d.cdf(-0.3) == 0.0);
  CHECK(d.cdf(-0.25) == doctest::Approx(0.25));
  CHECK(d.cdf(0.3) == doctest::Approx(0.75));
  CHECK(d.cdf(10.0) == doctest::Approx(1.0));
  const Moments m = moments(d);
  CHECK(m.value.mean == doctest::Approx(0.25));
  CHECK(m.value.variance == doctest::Approx(0.125));
  CHECK(m.value.skewness == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.value.kurtosis == doctest::Approx(-1.0));
  CHECK(std::isnan(m.se.mean));
  CHECK_THROWS_AS(distribution_from_masses(0.5, 0.0, 0, {1.0, -1.0}), DomainError);
  CHECK_THROWS_AS(distribution_from_masses(0.5, 0.0, 0, {}), DomainError);
}

TEST_CASE("analysis: particle observables are binned with the decreasing map") {
  const ScalingConstants k = scaling_constants(Model::tasep_step, 0.25);
  const std::vector<long> xs = {-3, 0, 2, 2, 5, -1};
  const double t = 64.0;
  const LatticeDistribution d = make_distribution(xs, k, t, 10);
  REQUIRE(d.count == 6);
  for (std::size_t i = 0; i < xs.size(); ++i)
    CHECK(d.s_at(static_cast<std::size_t>(d.site[i])) == doctest::Approx(k.rescale(xs[i], t, 10)));
  CHECK(d.grid.delta == doctest::Approx(k.delta(t)));
  CHECK_THROWS_AS(make_distribution(std::vector<long>{}, k, t, 10), DomainError);
}

TEST_CASE("analysis: jackknife standard error of the mean") {
  Stream rng(17, 0);
  std::vector<double> v(40000);
  for (double& x : v) x = 0.1 * std::lround(10.0 * gue_table().quantile(rng.uniform()));
  const LatticeDistribution d = make_distribution(v, 0.1, 0.0);
  const Moments m = moments(d);
  const double naive = std::sqrt(m.value.variance / 40000.0);
  CHECK(m.se.mean == doctest::Approx(naive).epsilon(0.3));
  CHECK(std::fabs(m.value.mean - gue_table().moments().mean) <= 4 * m.se.mean);
  CHECK(std::fabs(m.value.variance - gue_table().moments().variance) <= 4 * m.se.variance + 0.01);
}

TEST_CASE("analysis: midpoint shift removes the lattice offset") {
  const double delta = 0.2;
  const LatticeDistribution d = exact_lattice(gue_table(), delta, 0.07);
  const CdfFn F = [](double s) { return gue_table().cdf(s); };
  CHECK(compare_cdf(d, F, ShiftMode::midpoint) <= 1e-12);
  // Unshifted error is about delta/2 times the density maximum.
  const double unshifted = compare_cdf(d, F, ShiftMode::none);
  CHECK(unshifted > 0.02);
  CHECK(unshifted < 0.05);
}

TEST_CASE("analysis: density points integrate to one") {
  const LatticeDistribution d = exact_lattice(gue_table(), 0.25, 0.0);
  double total = 0.0;
  for (const auto& [s, p] : density_points(d)) total += p * 0.25;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("analysis: law table quantile inverts the cdf") {
  for (double u : {0.01, 0.2, 0.5, 0.9, 0.999}) {
    CHECK(gue_table().cdf(gue_table().quantile(u)) == doctest::Approx(u).epsilon(1e-9));
  }
  CHECK(gue_table().moments().mean == doctest::Approx(-1.771086807).epsilon(1e-6));
  CHECK_THROWS_AS(LawTable(LimitLaw::gue(), 1.0, 0.0), DomainError);
}

TEST_CASE("analysis: fit protocol recovers synthetic constants") {
  const double v = 2.0, gamma = 1.0, shift = 0.5;
  std::vector<TimedSamples> batches;
  for (double t : {200.0, 400.0, 800.0})
    batches.emplace_back(t, synthetic_heights(t, 100000, v, gamma, shift, 3));
  FitOptions opt;
  opt.shift_fit = ShiftFit::origin;
  opt.variance_fit = VarianceFit::plain;
  const FitReport r = fit_protocol(batches, gue_table(), opt);
  CHECK(r.v_inf == doctest::Approx(v).epsilon(0.05));
  CHECK(r.Gamma == doctest::Approx(gamma).epsilon(0.05));
  CHECK(r.variance_slope == doctest::Approx(2.0 / 3.0).epsilon(0.05));
  CHECK(r.warnings.empty());
  // A fitted velocity leaves a with a standard error near 0.15 here.
  CHECK(std::fabs(r.a_hat - shift) <= 3 * r.a_hat_se);
  CHECK(r.max_cdf_gap < 0.02);
  REQUIRE(r.cdf_shift.size() == 3);
  CHECK(r.cdf_shift[0] == doctest::Approx(0.5 / std::cbrt(r.Gamma * 200.0)));
  REQUIRE(r.moment_table.size() == 4);

  opt.velocity = v;
  const FitReport known = fit_protocol(batches, gue_table(), opt);
  CHECK(known.a_hat == doctest::Approx(shift).epsilon(0.05));
  CHECK(known.a_hat_se < 0.02);

  const nlohmann::json j = nlohmann::json::parse(fit_report_json(r));
  CHECK(j.at("a_hat").get<double>() == doctest::Approx(r.a_hat));
}

TEST_CASE("analysis: fit standard error of a is calibrated") {
  std::vector<double> est;
  double se = 0.0;
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    std::vector<TimedSamples> batches;
    for (double t : {200.0, 400.0, 800.0})
      batches.emplace_back(t, synthetic_heights(t, 20000, 2.0, 1.0, 0.5, seed));
    FitOptions opt;
    opt.shift_fit = ShiftFit::origin;
    opt.variance_fit = VarianceFit::plain;
    const FitReport r = fit_protocol(batches, gue_table(), opt);
    est.push_back(r.a_hat);
    se += r.a_hat_se / 40.0;
  }
  double mean = 0.0, var = 0.0;
  for (double a : est) mean += a / 40.0;
  for (double a : est) var += (a - mean) * (a - mean) / 39.0;
  CHECK(std::sqrt(var) / se > 0.7);
  CHECK(std::sqrt(var) / se < 1.4);
}

TEST_CASE("analysis: fit protocol on step TASEP recovers a = 1/2") {
  // n = t/4 keeps sigma = 1/4 exactly, where the velocity of x_n is 0.
  std::vector<TimedSamples> batches;
  for (double t : {52.0, 100.0, 200.0})
    batches.emplace_back(t, step_batch(t).samples);
  FitOptions opt;
  opt.negate = true;
  opt.velocity = 0.0;
  const FitReport r = fit_protocol(batches, gue_table(), opt);
  CHECK(std::fabs(r.a_hat - 0.5) <= 0.15);
  CHECK(r.Gamma == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("analysis: fit protocol on the PNG droplet recovers the velocity") {
  std::vector<TimedSamples> batches;
  for (double t : {50.0, 100.0, 200.0}) {
    SimConfig c;
    c.model = Model::png_droplet;
    c.t = t;
    c.runs = 10000;
    c.seed = 12;
    batches.emplace_back(t, batch(c).samples);
  }
  const FitReport r = fit_protocol(batches, gue_table(), FitOptions{});
  CHECK(r.v_inf == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("analysis: negated observables fit the same constants") {
  std::vector<TimedSamples> pos, neg;
  for (double t : {100.0, 300.0, 900.0}) {
    auto h = synthetic_heights(t, 20000, 1.0, 1.0, 0.0, 8);
    pos.emplace_back(t, h);
    for (long& x : h) x = -x;
    neg.emplace_back(t, h);
  }
  FitOptions opt;
  const FitReport a = fit_protocol(pos, gue_table(), opt);
  opt.negate = true;
  const FitReport b = fit_protocol(neg, gue_table(), opt);
  CHECK(a.v_inf == doctest::Approx(b.v_inf));
  CHECK(a.Gamma == doctest::Approx(b.Gamma));
  CHECK(a.a_hat == doctest::Approx(b.a_hat));
}

TEST_CASE("analysis: fit protocol input validation") {
  const std::vector<long> h = {1, 2, 3};
  CHECK_THROWS_AS(fit_protocol(std::vector<TimedSamples>{{1.0, h}, {2.0, h}}, gue_table(), {}),
                  DomainError);
  CHECK_THROWS_AS(
      fit_protocol(std::vector<TimedSamples>{{1.0, h}, {1.0, h}, {2.0, h}}, gue_table(), {}),
      DomainError);
  FitOptions bad;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(
      fit_protocol(std::vector<TimedSamples>{{1.0, h}, {2.0, h}, {3.0, h}}, gue_table(), bad),
      DomainError);
}

TEST_CASE("analysis: table report rows and serializations") {
  const LatticeDistribution d = exact_lattice(gue_table(), 0.05, 0.0);
  const auto rows = table_report(d, gue_table().moments());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].name == "mean");
  for (const TableRow& r : rows) CHECK(std::fabs(r.rel_error) < 0.02);
  const std::string csv = table_csv(rows);
  CHECK(csv.rfind("quantity,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  const nlohmann::json j = nlohmann::json::parse(table_json(rows));
  CHECK(j.size() == 4);
}

TEST_CASE("analysis: point masses and constant samples") {
  const ScalingConstants k = scaling_constants(Model::png_droplet);
  const LatticeDistribution d = make_distribution(std::vector<long>(50, 7), k, 30.0);
  REQUIRE(d.mass.size() == 1);
  CHECK(d.mass[0] == 1.0);
  const Moments m = moments(d);
  CHECK(m.value.mean == doctest::Approx(k.rescale(7, 30.0)));
  CHECK(m.value.variance == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("analysis: step TASEP support lies on the shifted lattice") {
  const ScalingConstants k = scaling_constants(Model::tasep_step, 0.25);
  const LatticeDistribution d = make_distribution(step_batch(100.0).samples, k, 100.0, 25);
  double total = 0.0;
  for (double m : d.mass) total += m;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  const double delta = k.delta(100.0);
  CHECK(d.grid.delta == doctest::Approx(delta));
  for (std::size_t i = 0; i < d.mass.size(); ++i) {
    const double x = (k.center(100.0, 25) - k.a) - d.s_at(i) / delta;
    CHECK(std::fabs(x - std::round(x)) < 1e-9);
  }
}

TEST_CASE("analysis: lattice moments carry the O(delta^2) rounding correction") {
  // Gumbel law F(s) = exp(-e^{-s}); sites on delta Z with F_t(s) = F(s + delta/2).
  auto F = [](double s) { return std::exp(-std::exp(-s)); };
  const double var = M_PI * M_PI / 6.0, c4 = (12.0 / 5.0 + 3.0) * var * var;
  double prev_var_err = 0.0, prev_kurt_err = 0.0;
  for (double delta : {0.2, 0.1, 0.05}) {
    const long lo = static_cast<long>(std::floor(-6.0 / delta)), hi = static_cast<long>(std::ceil(45.0 / delta));
    std::vector<double> m;
    for (long k = lo; k <= hi; ++k) m.push_back(F((k + 0.5) * delta) - F((k - 0.5) * delta));
    const Moments mo = moments(distribution_from_masses(delta, 0.0, lo, m));
    const double var_err = mo.value.variance - var;
    const double var_l = var + delta * delta / 12.0;
    const double kurt_l = (c4 + 0.5 * var * delta * delta + std::pow(delta, 4) / 80.0) / (var_l * var_l) - 3.0;
    CHECK(std::fabs(mo.value.mean - 0.5772156649015329) <= delta * delta);
    CHECK(var_err == doctest::Approx(delta * delta / 12.0).epsilon(1e-6));
    CHECK(mo.value.kurtosis == doctest::Approx(kurt_l).epsilon(1e-8));
    const double kurt_err = mo.value.kurtosis - 2.4;
    if (prev_var_err != 0.0) {
      CHECK(prev_var_err / var_err >= 3.5);
      CHECK(prev_var_err / var_err <= 4.5);
      CHECK(prev_kurt_err / kurt_err >= 3.5);
      CHECK(prev_kurt_err / kurt_err <= 4.5);
    }
    prev_var_err = var_err;
    prev_kurt_err = kurt_err;
  }
}

TEST_CASE("analysis: jackknife errors scale as N^{-1/2}") {
  Stream rng(23, 0);
  auto se_of = [&](long n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = 0.05 * std::lround(20.0 * gue_table().quantile(rng.uniform()));
    return moments(make_distribution(v, 0.05, 0.0)).se;
  };
  const LawMoments a = se_of(20000), b = se_of(80000);
  CHECK(a.mean / b.mean == doctest::Approx(2.0).epsilon(0.15));
  CHECK(a.variance / b.variance == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("analysis: law-sampled data fit within the DKW bound") {
  const double delta = 0.05;
  const long lo = -160, hi = 160;
  std::vector<double> site_cdf;
  for (long k = lo; k <= hi; ++k) site_cdf.push_back(gue_table().cdf((k + 0.5) * delta));
  Stream rng(29, 0);
  const long n = 1000000;
  const LatticeDistribution d = distribution_from_masses(delta, 0.0, lo, sampled_masses(site_cdf, n, rng));
  const double dkw = std::sqrt(std::log(2.0 / 0.05) / (2.0 * n));
  const CdfFn F = [](double s) { return gue_table().cdf(s); };
  CHECK(compare_cdf(d, F, ShiftMode::midpoint) <= std::max(3 * dkw, 2 * delta * delta * 0.42));
}

TEST_CASE("analysis: midpoint comparison dominates on law-sampled data") {
  const double delta = 0.1;
  const long lo = -80, hi = 80;
  std::vector<double> site_cdf;
  for (long k = lo; k <= hi; ++k) site_cdf.push_back(gue_table().cdf((k + 0.5) * delta));
  const CdfFn F = [](double s) { return gue_table().cdf(s); };
  Stream rng(31, 0);
  int wins = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const LatticeDistribution d =
        distribution_from_masses(delta, 0.0, lo, sampled_masses(site_cdf, 1000000, rng));
    wins += compare_cdf(d, F, ShiftMode::midpoint) < compare_cdf(d, F, ShiftMode::none);
  }
  CHECK(wins >= 95);
}

TEST_CASE("analysis: a single sample is far from the law") {
  const LatticeDistribution d = distribution_from_masses(0.1, 0.0, 0, {1.0});
  CHECK(compare_cdf(d, LimitLaw::gue(), ShiftMode::midpoint) > 0.9);
}

TEST_CASE("analysis: step TASEP prefers the midpoint shift and a = 1/2") {
  ScalingConstants k = scaling_constants(Model::tasep_step, 0.25);
  const RunBatch& b = step_batch(100.0);
  const LatticeDistribution d = make_distribution(b.samples, k, 100.0, 25);
  const CdfFn F = [](double s) { return gue_table().cdf(s); };
  CHECK(compare_cdf(d, F, ShiftMode::midpoint) < compare_cdf(d, F, ShiftMode::none));

  auto density_gap = [](const LatticeDistribution& dist) {
    double gap = 0.0;
    for (const auto& [s, p] : density_points(dist))
      if (s >= -3.0 && s <= 1.0) gap = std::max(gap, std::fabs(p - law_pdf(LimitLaw::gue(), s)));
    return gap;
  };
  const double with_shift = density_gap(d);
  k.a = 0.0;
  const double without = density_gap(make_distribution(b.samples, k, 100.0, 25));
  CHECK(with_shift < without);
}

TEST_CASE("analysis: exact lattice density converges at O(delta^2)") {
  auto gap = [](double delta) {
    double g = 0.0;
    for (long k = static_cast<long>(std::ceil(-3.0 / delta)); k * delta <= 1.0; ++k) {
      const double s = k * delta;
      const double p = (law_cdf(LimitLaw::gue(), s + delta / 2) - law_cdf(LimitLaw::gue(), s - delta / 2)) / delta;
      g = std::max(g, std::fabs(p - law_pdf(LimitLaw::gue(), s)));
    }
    return g;
  };
  const double ratio = gap(0.2) / gap(0.1);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("analysis: table report on law-sampled data is consistent with zero") {
  Stream rng(37, 0);
  std::vector<double> v(1000000);
  for (double& x : v) x = 0.01 * std::lround(100.0 * gue_table().quantile(rng.uniform()));
  const auto rows = table_report(make_distribution(v, 0.01, 0.0), gue_table().moments());
  for (const TableRow& r : rows) CHECK(std::fabs(r.empirical - r.law) <= 4 * r.se + 1e-4);
}
