#include <cmath>

#include "doctest.h"
#include "kpzfit/errors.hpp"
#include "kpzfit/shifts.hpp"

using namespace kpzfit;

TEST_CASE("a_pq: boundary values and error contract") {
  CHECK(a_pq(1.0) == 0.0);
  CHECK(std::fabs(a_pq(0.7822787862) - 0.5) <= 1e-9);
  CHECK_THROWS_AS(a_pq(0.5 + 1e-6), DivergenceError);
  CHECK_THROWS_AS(a_pq(0.5), DivergenceError);
  CHECK_THROWS_AS(a_pq(0.3), DivergenceError);
  CHECK_THROWS_AS(a_pq(1.2), DomainError);
  CHECK_THROWS_AS(a_pq(NAN), DomainError);
}

TEST_CASE("a_pq: direct summation oracle") {
  for (double p : {0.6, 0.75, 0.9}) {
    const double q = 1 - p;
    long double sum = 0;
    for (int l = 1; l < 5000; ++l) sum += std::pow((long double)q, l) / (std::pow((long double)p, l) - std::pow((long double)q, l));
    CHECK(std::fabs(a_pq(p) - static_cast<double>(sum)) <= 1e-13 * static_cast<double>(sum));
  }
}

TEST_CASE("a_pq: positive and strictly decreasing") {
  double prev = a_pq(0.51);
  CHECK(prev > 0);
  for (double p = 0.52; p < 0.999; p += 0.01) {
    const double v = a_pq(p);
    CHECK(v > 0);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(a_pq(0.9999) < 1e-3);
}

TEST_CASE("p_critical and the height shift") {
  const double pc = p_critical();
  CHECK(std::fabs(pc - 0.7822787862) <= 1e-9);
  CHECK(std::fabs(a_pq(pc) - 0.5) <= 1e-11);
  CHECK(std::fabs(height_shift(pc)) <= 1e-9);
  CHECK(height_shift(1.0) == -1.0);
  CHECK(height_shift(0.6) == doctest::Approx(2 * a_pq(0.6) - 1).epsilon(1e-15));
  for (double p = 0.55; p < 0.99; p += 0.05) CHECK(height_shift(p + 0.01) < height_shift(p));
}

TEST_CASE("wasep expansion") {
  const double b = 0.1;
  CHECK(wasep_expansion(b) == doctest::Approx((0.5772156649 - std::log(2 * b)) / (2 * b) + 0.25).epsilon(1e-15));
  const double r1 = std::fabs(a_pq(0.55) - wasep_expansion(0.1));
  const double r2 = std::fabs(a_pq(0.525) - wasep_expansion(0.05));
  CHECK(r1 / r2 >= 1.4);
  CHECK(r1 / r2 <= 2.6);
  CHECK(std::fabs(a_pq(0.6) - wasep_expansion(0.2)) < 0.1 * a_pq(0.6));
  CHECK_THROWS_AS(wasep_expansion(0.0), DomainError);
  CHECK_THROWS_AS(wasep_expansion(0.25), DomainError);
}

TEST_CASE("g forms: known value and identity") {
  const GForms half = g_forms(0.5, QContext::for_tau(0.5, 1e-16));
  CHECK(std::fabs(half.g_simple - 1.6066951524152917) <= 1e-13);
  for (int k = 1; k <= 19; ++k) {
    const double tau = 0.05 * k;
    const GForms g = g_forms(tau, QContext::for_tau(tau, 1e-16));
    CHECK(std::fabs(g.g_pochhammer - g.g_simple) <= 1e-11);
  }
  for (double p : {0.6, 0.8, 0.95}) {
    const GForms g = g_forms((1 - p) / p, QContext::for_tau((1 - p) / p, 1e-16));
    CHECK(std::fabs(g.g_simple - a_pq(p)) <= 1e-12);
  }
  CHECK_THROWS_AS(g_forms(1.0, QContext::for_tau(0.5)), DomainError);
}

TEST_CASE("scaling constants: model defaults") {
  const ScalingConstants step = scaling_constants(Model::tasep_step, 0.25);
  CHECK(step.c1 == doctest::Approx(0.0));
  CHECK(step.c2 == doctest::Approx(std::pow(2.0, -1.0 / 3.0)).epsilon(1e-15));
  CHECK(step.delta(1000.0) == doctest::Approx(std::pow(500.0, -1.0 / 3.0)).epsilon(1e-14));
  CHECK(step.a == 0.5);

  const ScalingConstants alt = scaling_constants(Model::tasep_alt);
  CHECK(alt.delta(1000.0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(alt.a == 0.5);

  const ScalingConstants drop = scaling_constants(Model::png_droplet);
  CHECK(drop.c1 == 2.0);
  CHECK(drop.delta(8.0) == doctest::Approx(0.5).epsilon(1e-15));

  const ScalingConstants flat = scaling_constants(Model::png_flat);
  CHECK(flat.delta(4.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(flat.a == 0.0);
}

TEST_CASE("scaling constants: pasep at p = 1 reduces to step TASEP") {
  for (double s : {0.1, 0.25, 0.6}) {
    const ScalingConstants a = scaling_constants(Model::pasep_step, s, 1.0);
    const ScalingConstants b = scaling_constants(Model::tasep_step, s);
    CHECK(a.c1 == b.c1);
    CHECK(a.c2 == b.c2);
    CHECK(a.a == b.a);
    CHECK(a.eta == b.eta);
    CHECK(a.sigma == b.sigma);
    CHECK(a.p == b.p);
  }
  const ScalingConstants pa = scaling_constants(Model::pasep_step, 0.24, 0.7);
  CHECK(pa.a == doctest::Approx(0.5 - a_pq(0.7) / std::sqrt(0.24)).epsilon(1e-15));
}

TEST_CASE("scaling constants: a = eta + 1/2 everywhere") {
  for (Model m : {Model::tasep_step, Model::tasep_alt, Model::pasep_step, Model::png_droplet, Model::png_flat}) {
    const ScalingConstants k = scaling_constants(m, 0.3, 0.8);
    CHECK(k.a == doctest::Approx(k.eta + 0.5).epsilon(1e-15));
  }
}

TEST_CASE("scaling constants: domain errors") {
  CHECK_THROWS_AS(scaling_constants(Model::tasep_step), DomainError);
  CHECK_THROWS_AS(scaling_constants(Model::tasep_step, 1.0), DomainError);
  CHECK_THROWS_AS(scaling_constants(Model::tasep_step, 0.0), DomainError);
  CHECK_THROWS_AS(scaling_constants(Model::pasep_step, 0.25), DomainError);
  CHECK_THROWS_AS(scaling_constants(Model::pasep_step, 0.25, 0.5), DomainError);
  CHECK_THROWS_AS(scaling_constants(Model::pasep_step, 0.25, 1.1), DomainError);
}

TEST_CASE("scaling constants: rescale conventions") {
  const ScalingConstants drop = scaling_constants(Model::png_droplet);
  const double t = 27.0;
  CHECK(drop.rescale(54, t) == doctest::Approx(-0.5 / 3.0));
  const ScalingConstants step = scaling_constants(Model::tasep_step, 0.25);
  // Larger positions map to smaller s.
  CHECK(step.rescale(10, 100.0, 25) < step.rescale(9, 100.0, 25));
  CHECK(step.rescale(9, 100.0, 25) - step.rescale(10, 100.0, 25) == doctest::Approx(step.delta(100.0)));
}

TEST_CASE("model names") {
  for (Model m : {Model::tasep_step, Model::tasep_alt, Model::pasep_step, Model::png_droplet, Model::png_flat}) {
    CHECK(parse_model(model_name(m)) == m);
    std::string u(model_name(m));
    for (char& c : u)
      if (c == '-') c = '_';
    CHECK(parse_model(u) == m);
  }
  CHECK_THROWS_AS(parse_model("asep"), DomainError);
}
