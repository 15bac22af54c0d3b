#pragma once

#include <functional>
#include <vector>

namespace kpzfit {

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

// Cached, thread-safe. Newton iteration on Legendre polynomials.
const GaussRule& gauss_legendre(int n);

// Composite Gauss-Legendre on [a, b] with panels of width <= panel.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double panel = 0.5, int order = 16);

}  // namespace kpzfit
