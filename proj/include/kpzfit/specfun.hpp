#pragma once

#include <optional>
#include <vector>

namespace kpzfit {

// Ai and its derivatives. Absolute error <= 1e-12 on [-15, 30].
// Throws RangeError for x < -50.
double airy_ai(double x);
// order 0, 1 or 2; the second derivative is x * Ai(x).
double airy_ai_deriv(double x, int order);
// Ai and Ai' in one evaluation.
struct AiryPair {
  double ai;
  double aip;
};
AiryPair airy_pair(double x);

// Integer-order Bessel function of the first kind, trapezoid rule on a
// saddle-radius circle. order <= 1e6, 0 <= x <= 1e6.
double bessel_j(long order, double x);
// J_lo(x) .. J_hi(x) by downward recurrence from two contour values.
std::vector<double> bessel_j_range(long lo, long hi, double x);

struct QContext {
  double tau;
  long truncation_order;
  double tolerance;

  // Smallest order with geometric tail tau^(N+1)/(1-tau) below tol.
  static QContext for_tau(double tau, double tol = 1e-15);
  // Bound on the dropped tail of a series whose terms are <= tau^k.
  double tail_bound() const;
};

// (a;q)_n; n = nullopt means n = infinity.
double q_pochhammer(double a, double q, std::optional<long> n = std::nullopt);

// r phi s (upper; lower; q, z) with the standard
// ((-1)^n q^{n(n-1)/2})^{1+s-r} factor. Stops after 20 consecutive terms
// below ctx.tolerance * |sum|, or at ctx.truncation_order terms.
double q_hypergeometric(const std::vector<double>& upper,
                        const std::vector<double>& lower, double q, double z,
                        const QContext& ctx);

}  // namespace kpzfit
