#include "kpzfit/specfun.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "kpzfit/errors.hpp"

namespace kpzfit {
namespace {

using ld = long double;

constexpr ld kAi0 = 0.355028053887817239260063186004183176L;
constexpr ld kAip0 = -0.258819403792806798405183560189203963L;
constexpr double kPi = std::numbers::pi;

// Maclaurin series; long double keeps |x| <= 6 at ~1e-15 absolute.
AiryPair airy_maclaurin(ld x) {
  const ld x3 = x * x * x;
  ld f = 1, g = x, fp = 0, gp = 1;
  ld tf = 1, tg = x, tfp = x * x / 2, tgp = 1;
  fp = tfp;
  for (int k = 1; k < 200; ++k) {
    tf *= x3 / ((3 * k - 1) * (3.0L * k));
    tg *= x3 / ((3.0L * k) * (3 * k + 1));
    if (k > 1) tfp *= x3 / ((3 * k - 1) * (3.0L * k - 3));
    tgp *= x3 / ((3.0L * k) * (3 * k - 2));
    f += tf;
    g += tg;
    if (k > 1) fp += tfp;
    gp += tgp;
    const ld mag = std::fabs(tf) + std::fabs(tg) + std::fabs(tfp) +
                   std::fabs(tgp);
    if (k > 3 && mag < 1e-24L) break;
  }
  return {static_cast<double>(kAi0 * f + kAip0 * g),
          static_cast<double>(kAi0 * fp + kAip0 * gp)};
}

// Vertical line through the saddle z = sqrt(x); both integrands are even in
// y and decay like exp(-sqrt(x) y^2).
AiryPair airy_contour(double x) {
  const double c = std::sqrt(x);
  const double zeta = 2.0 / 3.0 * x * c;
  const double ymax = std::sqrt(45.0 / c);
  constexpr int kNodes = 128;
  const double h = ymax / kNodes;
  double s0 = 0.5, s1 = 0.5 * c;
  for (int k = 1; k <= kNodes; ++k) {
    const double y = k * h;
    const double w = std::exp(-c * y * y);
    const double ph = y * y * y / 3.0;
    const double cs = std::cos(ph), sn = std::sin(ph);
    s0 += w * cs;
    s1 += w * (c * cs + y * sn);
  }
  const double pref = std::exp(-zeta) / kPi * h;
  return {pref * s0, -pref * s1};
}

// Taylor stepping of y'' = x y from (x0, y0, y0').
AiryPair airy_taylor_step(ld x0, ld y, ld yp, ld x1) {
  while (x0 != x1) {
    ld hstep = x1 - x0;
    if (hstep > 0.25L) hstep = 0.25L;
    if (hstep < -0.25L) hstep = -0.25L;
    // a_{k+2} = (x0 a_k + a_{k-1}) / ((k+2)(k+1))
    ld am1 = 0, a0 = y, a1 = yp;
    ld sum = a0 + a1 * hstep, dsum = a1;
    ld hp = hstep;  // h^(k+1) for k = 0 at start of loop
    ld prev_a[3] = {am1, a0, a1};
    for (int k = 0; k < 80; ++k) {
      const ld ak2 = (x0 * prev_a[1] + prev_a[0]) / ((k + 2.0L) * (k + 1.0L));
      dsum += (k + 2) * ak2 * hp;
      hp *= hstep;
      sum += ak2 * hp;
      prev_a[0] = prev_a[1];
      prev_a[1] = prev_a[2];
      prev_a[2] = ak2;
      if (k > 8 && std::fabs(ak2 * hp) < 1e-26L &&
          std::fabs(prev_a[1] * hp) < 1e-24L)
        break;
    }
    y = sum;
    yp = dsum;
    x0 += hstep;
  }
  return {static_cast<double>(y), static_cast<double>(yp)};
}

// Oscillatory asymptotic expansion for x < -12.
AiryPair airy_asymptotic(double x) {
  const ld z = -x;
  const ld zeta = 2.0L / 3.0L * z * std::sqrt(z);
  ld u = 1, v = 1;
  ld su_even = 1, su_odd = 0, sv_even = 1, sv_odd = 0;
  ld zpow = 1;
  for (int k = 1; k < 60; ++k) {
    u *= (6.0L * k - 5) * (6.0L * k - 3) * (6.0L * k - 1) /
         ((2.0L * k - 1) * 216.0L * k);
    v = -(6.0L * k + 1) / (6.0L * k - 1) * u;
    zpow /= zeta;
    // sign pattern (-1)^{floor(k/2)} on alternating even/odd slots
    const ld sgn = ((k / 2) % 2 == 0) ? 1.0L : -1.0L;
    if (k % 2 == 0) {
      su_even += sgn * u * zpow;
      sv_even += sgn * v * zpow;
    } else {
      su_odd += sgn * u * zpow;
      sv_odd += sgn * v * zpow;
    }
    if (std::fabs(u * zpow) < 1e-22L) break;
  }
  const ld ph = zeta + std::numbers::pi_v<ld> / 4;
  const ld s = std::sin(ph), c = std::cos(ph);
  const ld rp = 1.0L / std::sqrt(std::numbers::pi_v<ld>);
  const ld z4 = std::pow(z, 0.25L);
  return {static_cast<double>(rp / z4 * (s * su_even - c * su_odd)),
          static_cast<double>(-rp * z4 * (c * sv_even + s * sv_odd))};
}

// Decaying expansion for x >= 9, truncated at the smallest term; the
// remainder is below exp(-2 zeta) relative, 2e-16 at x = 9.
AiryPair airy_decay(double x) {
  const ld z = x;
  const ld zeta = 2.0L / 3.0L * z * std::sqrt(z);
  ld u = 1, su = 1, sv = 1, zpow = 1, last = 1;
  for (int k = 1; k < 200; ++k) {
    u *= (6.0L * k - 5) * (6.0L * k - 3) * (6.0L * k - 1) /
         ((2.0L * k - 1) * 216.0L * k);
    const ld v = -(6.0L * k + 1) / (6.0L * k - 1) * u;
    zpow /= -zeta;
    const ld term = u * zpow;
    if (std::fabs(term) > last) break;
    last = std::fabs(term);
    su += term;
    sv += v * zpow;
    if (last < 1e-20L) break;
  }
  const ld e = std::exp(-zeta) / (2.0L * std::sqrt(std::numbers::pi_v<ld>));
  const ld z4 = std::pow(z, 0.25L);
  return {static_cast<double>(e / z4 * su), static_cast<double>(-e * z4 * sv)};
}

}  // namespace

AiryPair airy_pair(double x) {
  if (!std::isfinite(x)) throw RangeError("airy: non-finite argument");
  if (x < -50.0) throw RangeError("airy: argument below -50");
  if (x >= 9.0) return airy_decay(x);
  if (x > 4.0) return airy_contour(x);
  if (x >= -6.0) return airy_maclaurin(x);
  if (x >= -12.0) {
    const AiryPair start = airy_maclaurin(-6.0L);
    return airy_taylor_step(-6.0L, start.ai, start.aip, x);
  }
  return airy_asymptotic(x);
}

double airy_ai(double x) { return airy_pair(x).ai; }

double airy_ai_deriv(double x, int order) {
  switch (order) {
    case 0:
      return airy_pair(x).ai;
    case 1:
      return airy_pair(x).aip;
    case 2:
      return x * airy_pair(x).ai;
    default:
      throw DomainError("airy_ai_deriv: order must be 0, 1 or 2");
  }
}

double bessel_j(long order, double x) {
  if (x < 0 || !std::isfinite(x)) throw DomainError("bessel_j: x must be >= 0");
  if (order < 0) {
    const double v = bessel_j(-order, x);
    return (order % 2 == 0) ? v : -v;
  }
  if (x == 0.0) return order == 0 ? 1.0 : 0.0;
  if (order > 1000000 || x > 1e6) throw RangeError("bessel_j: outside validated range");

  const double n = static_cast<double>(order);
  const double r = n > x ? (n + std::sqrt((n - x) * (n + x))) / x : 1.0;
  const double A = 0.5 * x * (r - 1.0 / r);
  const ld C = 0.5L * x * (r + 1.0L / r);
  const double log_pref = A - n * std::log(r);

  // Integrand on [0, pi] with the magnitude at theta = 0 factored out.
  auto f = [&](std::int64_t j, std::int64_t m) {
    const ld theta = std::numbers::pi_v<ld> * j / m;
    const std::int64_t red = (static_cast<std::int64_t>(order) % (2 * m)) * j % (2 * m);
    const ld nphase = std::numbers::pi_v<ld> * red / m;
    const ld ph = C * std::sin(theta) - nphase;
    return static_cast<double>(std::exp(A * (std::cos(theta) - 1.0L)) * std::cos(ph));
  };

  std::int64_t m = 32;
  double sum = 0.5 * (f(0, m) + f(m, m));
  double abs_sum = std::fabs(sum);
  for (std::int64_t j = 1; j < m; ++j) {
    const double v = f(j, m);
    sum += v;
    abs_sum += std::fabs(v);
  }
  double T = sum / m;
  int agree = 0;
  while (true) {
    const std::int64_t m2 = 2 * m;
    double odd = 0.0;
    for (std::int64_t j = 1; j < m2; j += 2) {
      const double v = f(j, m2);
      odd += v;
      abs_sum += std::fabs(v);
    }
    const double T2 = 0.5 * T + odd / m2;
    const double scale = abs_sum / m2;
    agree = (std::fabs(T2 - T) <= 5e-14 * scale) ? agree + 1 : 0;
    T = T2;
    m = m2;
    if (agree >= 2) break;
    if (m > (std::int64_t{1} << 24))
      throw AccuracyError("bessel_j: trapezoid rule did not converge");
  }
  return std::exp(log_pref) * T;
}

std::vector<double> bessel_j_range(long lo, long hi, double x) {
  if (hi < lo) throw DomainError("bessel_j_range: hi < lo");
  std::vector<double> out(static_cast<std::size_t>(hi - lo + 1), 0.0);
  if (x == 0.0) {
    for (long m = lo; m <= hi; ++m) out[m - lo] = (m == 0) ? 1.0 : 0.0;
    return out;
  }
  if (hi - lo < 2) {
    for (long m = lo; m <= hi; ++m) out[m - lo] = bessel_j(m, x);
    return out;
  }
  // Start the recurrence where values are still representable.
  long top = hi;
  constexpr double kTiny = 1e-250;
  if (std::fabs(bessel_j(top, x)) < kTiny) {
    long good = lo, bad = hi;
    while (bad - good > 1) {
      const long mid = good + (bad - good) / 2;
      if (std::fabs(bessel_j(mid, x)) < kTiny) bad = mid; else good = mid;
    }
    top = std::max(good, lo + 1);
  }
  double jp1 = bessel_j(top, x);
  double j0 = bessel_j(top - 1, x);
  out[top - lo] = jp1;
  out[top - 1 - lo] = j0;
  for (long m = top - 1; m > lo; --m) {
    const double jm1 = (2.0 * m / x) * j0 - jp1;
    out[m - 1 - lo] = jm1;
    jp1 = j0;
    j0 = jm1;
  }
  return out;
}

QContext QContext::for_tau(double tau, double tol) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("QContext: tau must lie in (0,1)");
  if (!(tol > 0.0)) throw DomainError("QContext: tolerance must be positive");
  const double n = std::log(tol * (1.0 - tau)) / std::log(tau);
  return {tau, std::max<long>(1, static_cast<long>(std::ceil(n))), tol};
}

double QContext::tail_bound() const {
  return std::pow(tau, truncation_order + 1) / (1.0 - tau);
}

double q_pochhammer(double a, double q, std::optional<long> n) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("q_pochhammer: q must lie in (0,1)");
  if (n) {
    if (*n < 0) throw DomainError("q_pochhammer: n must be >= 0");
    double prod = 1.0, qk = 1.0;
    for (long k = 0; k < *n; ++k) {
      prod *= 1.0 - a * qk;
      qk *= q;
    }
    return prod;
  }
  if (std::fabs(a) >= 1.0 / q) throw DomainError("q_pochhammer: |a| must be < 1/q for n = infinity");
  const double stop = std::numeric_limits<double>::epsilon() * 1e-3;
  double prod = 1.0, term = a;
  while (std::fabs(term) >= stop) {
    prod *= 1.0 - term;
    if (prod == 0.0) return 0.0;
    term *= q;
  }
  return prod;
}

double q_hypergeometric(const std::vector<double>& upper,
                        const std::vector<double>& lower, double q, double z,
                        const QContext& ctx) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("q_hypergeometric: q must lie in (0,1)");
  const int excess = 1 + static_cast<int>(lower.size()) - static_cast<int>(upper.size());
  const long cap = std::min<long>(ctx.truncation_order, 100000);
  double term = 1.0, sum = 1.0, qn = 1.0;
  int small_run = 0, growth_run = 0;
  for (long n = 0; n < cap; ++n) {
    double ratio = z / (1.0 - qn * q);
    for (double a : upper) ratio *= 1.0 - a * qn;
    for (double b : lower) ratio /= 1.0 - b * qn;
    if (excess != 0) ratio *= std::pow(-qn, excess);
    const double next = term * ratio;
    growth_run = (next != 0.0 && std::fabs(ratio) >= 1.0) ? growth_run + 1 : 0;
    if (growth_run >= 10) throw DivergenceError("q_hypergeometric: terms are not decaying");
    term = next;
    sum += term;
    small_run = (std::fabs(term) < ctx.tolerance * std::fabs(sum)) ? small_run + 1 : 0;
    if (small_run >= 20 || term == 0.0) return sum;
    qn *= q;
  }
  throw AccuracyError("q_hypergeometric: truncation order reached before convergence");
}

}  // namespace kpzfit
