#include "kpzfit/shifts.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "kpzfit/errors.hpp"

namespace kpzfit {
namespace {

constexpr double kEulerGamma = 0.5772156649;
constexpr long kSeriesCap = 1000000;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

double check_sigma(std::optional<double> sigma) {
  if (!sigma) throw DomainError("sigma is required for this model");
  if (!(*sigma > 0.0 && *sigma < 1.0)) throw DomainError("sigma must lie in (0,1)");
  return *sigma;
}

// sum tau^l / (1 - tau^l); the caller guarantees 0 < tau < 1.
double tau_series(double tau) {
  const double lt = std::log(tau);
  double sum = 0.0;
  for (long l = 1; l <= kSeriesCap; ++l) {
    const double num = std::exp(l * lt);
    const double term = num / -std::expm1(l * lt);
    sum += term;
    if (term < 1e-15 * sum) return sum;
  }
  throw DivergenceError("a_pq: series needs more than 1e6 terms (p too close to 1/2)");
}

}  // namespace

std::string_view model_name(Model m) {
  switch (m) {
    case Model::tasep_step: return "tasep-step";
    case Model::tasep_alt: return "tasep-alt";
    case Model::pasep_step: return "pasep-step";
    case Model::png_droplet: return "png-droplet";
    case Model::png_flat: return "png-flat";
  }
  return "unknown";
}

Model parse_model(std::string_view name) {
  std::string s(name);
  for (char& c : s)
    if (c == '_') c = '-';
  for (Model m : {Model::tasep_step, Model::tasep_alt, Model::pasep_step,
                  Model::png_droplet, Model::png_flat})
    if (model_name(m) == s) return m;
  throw DomainError("unknown model '" + std::string(name) + "'");
}

double ScalingConstants::delta(double t) const {
  if (!(t > 0.0)) throw DomainError("time must be positive");
  return 1.0 / (c2 * std::cbrt(t));
}

bool ScalingConstants::particle_observable() const {
  return model == Model::tasep_step || model == Model::tasep_alt ||
         model == Model::pasep_step;
}

double ScalingConstants::center(double t, long n) const {
  switch (model) {
    case Model::tasep_step:
    case Model::pasep_step: {
      const double r = 1.0 - std::sqrt(sigma);
      return -static_cast<double>(n) + r * r * t;
    }
    case Model::tasep_alt:
      return -2.0 * static_cast<double>(n) + c1 * t;
    default:
      return c1 * t;
  }
}

double ScalingConstants::rescale(long observable, double t, long n) const {
  const double c = center(t, n);
  const double v = static_cast<double>(observable);
  return particle_observable() ? (c - a - v) * delta(t) : (v - c - a) * delta(t);
}

ScalingConstants scaling_constants(Model model, std::optional<double> sigma,
                                   std::optional<double> p) {
  ScalingConstants k{model, 0.0, 1.0, 0.5, 0.0, nan(), 1.0};
  switch (model) {
    case Model::pasep_step: {
      if (!p) throw DomainError("p is required for pasep-step");
      if (!(*p > 0.5 && *p <= 1.0)) throw DomainError("p must lie in (1/2, 1]");
      k.p = *p;
      [[fallthrough]];
    }
    case Model::tasep_step: {
      const double s = check_sigma(sigma);
      const double rs = std::sqrt(s);
      k.sigma = s;
      k.c1 = 1.0 - 2.0 * rs;
      k.c2 = std::pow(s, -1.0 / 6.0) * std::pow(1.0 - rs, 2.0 / 3.0);
      k.a = 0.5 - a_pq(k.p) / rs;
      break;
    }
    case Model::tasep_alt:
      k.c1 = 0.5;
      break;
    case Model::png_droplet:
      k.c1 = 2.0;
      break;
    case Model::png_flat:
      // delta_t = (2t)^{-1/3}; no first-order correction, so a = 0.
      k.c1 = 2.0;
      k.c2 = std::cbrt(2.0);
      k.a = 0.0;
      break;
  }
  k.eta = k.a - 0.5;
  return k;
}

double a_pq(double p) {
  if (!std::isfinite(p) || p > 1.0) throw DomainError("a_pq: p must lie in (1/2, 1]");
  if (p <= 0.5) throw DivergenceError("a_pq: series diverges for p <= 1/2");
  if (p == 1.0) return 0.0;
  return tau_series((1.0 - p) / p);
}

double p_critical() {
  double lo = 0.6, hi = 0.99;  // a_pq(lo) > 1/2 > a_pq(hi)
  for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (a_pq(mid) > 0.5) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double height_shift(double p) { return 2.0 * a_pq(p) - 1.0; }

double wasep_expansion(double beta) {
  if (!(beta > 0.0 && beta <= 0.2)) throw DomainError("wasep_expansion: beta must lie in (0, 0.2]");
  return (kEulerGamma - std::log(2.0 * beta)) / (2.0 * beta) + 0.25;
}

GForms g_forms(double tau, const QContext& ctx) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("g_forms: tau must lie in (0,1)");
  const double lt = std::log(tau);
  // log1p(-tau^j) for j = 1..J, then suffix sums give log (tau^k; tau)_inf.
  std::vector<double> logs;
  for (long j = 1;; ++j) {
    const double tj = std::exp(j * lt);
    if (tj < 1e-22) break;
    logs.push_back(std::log1p(-tj));
  }
  std::vector<double> suffix(logs.size() + 1, 0.0);
  for (std::size_t j = logs.size(); j-- > 0;) suffix[j] = suffix[j + 1] + logs[j];

  GForms g{0.0, tau_series(tau)};
  const long cap = std::max<long>(ctx.truncation_order, static_cast<long>(logs.size()));
  for (long k = 1; k <= cap && k <= static_cast<long>(logs.size()); ++k) {
    const double term = -std::expm1(suffix[k - 1]);
    g.g_pochhammer += term;
    if (term < 0.01 * ctx.tolerance * g.g_pochhammer) break;
  }
  return g;
}

}  // namespace kpzfit
