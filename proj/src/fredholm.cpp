#include "kpzfit/fredholm.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "kpzfit/errors.hpp"
#include "kpzfit/quadrature.hpp"

namespace kpzfit {
namespace {

using MatrixFn = std::function<std::vector<double>(const std::vector<double>&)>;

double nystrom(const MatrixFn& matrix, double s, int nodes, double span) {
  const GaussRule& g = gauss_legendre(nodes);
  std::vector<double> x(nodes), sw(nodes);
  for (int i = 0; i < nodes; ++i) {
    x[i] = s + 0.5 * span * (g.x[i] + 1.0);
    sw[i] = std::sqrt(0.5 * span * g.w[i]);
  }
  const std::vector<double> k = matrix(x);
  Eigen::MatrixXd a(nodes, nodes);
  for (int i = 0; i < nodes; ++i)
    for (int j = 0; j < nodes; ++j)
      a(i, j) = (i == j ? 1.0 : 0.0) - sw[i] * k[i * nodes + j] * sw[j];
  return a.partialPivLu().determinant();
}

double checked(const MatrixFn& matrix, double s, int nodes, double span) {
  if (nodes < 16) throw DomainError("det_continuum: nodes must be >= 16");
  const double coarse = nystrom(matrix, s, nodes, span);
  const double fine = nystrom(matrix, s, 2 * nodes, span);
  if (s >= -8.0 && std::fabs(fine - coarse) > 1e-9)
    throw AccuracyError("det_continuum: node doubling changed the result by " +
                        std::to_string(std::fabs(fine - coarse)));
  return fine;
}

MatrixFn model_matrix(const KernelModel& kernel) {
  if (kernel.is_prelimit())
    throw DomainError("det_continuum: prelimit kernels live on a lattice");
  return [kernel](const std::vector<double>& x) { return kernel_matrix(kernel, x); };
}

MatrixFn fn_matrix(const KernelFn& kernel) {
  return [kernel](const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> k(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) k[i * n + j] = kernel(x[i], x[j]);
    return k;
  };
}

MatrixFn law_matrix(const LimitLaw& law) {
  return law.kind == LawKind::custom ? fn_matrix(law.custom_kernel)
                                     : model_matrix(law.kernel);
}

double lattice_det(const MatrixFn& matrix, const LatticeGrid& grid, double s,
                   double span) {
  if (!(grid.delta > 0.0)) throw DomainError("det_lattice: delta must be positive");
  const double hi = std::min(grid.s_max, s + span);
  std::vector<double> x;
  // Strictly above s; a point within 1e-9 delta of s counts as s itself.
  for (long k = grid.floor_index(s + 1e-9 * grid.delta) + 1; grid.at(k) <= hi; ++k)
    if (grid.at(k) >= grid.s_min) x.push_back(grid.at(k));
  const int n = static_cast<int>(x.size());
  if (n == 0) return 1.0;
  const std::vector<double> k = matrix(x);
  if (std::fabs(grid.delta * k[(n - 1) * n + (n - 1)]) > 1e-12)
    warn("det_lattice: kernel has not decayed at the upper cut s = " + std::to_string(x.back()));
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a(i, j) = (i == j ? 1.0 : 0.0) - grid.delta * k[i * n + j];
  return a.partialPivLu().determinant();
}

double cdf_unchecked(const LimitLaw& law, double s) {
  return nystrom(law_matrix(law), s, law.nodes, law.span);
}

double pdf_unchecked(const LimitLaw& law, double s) {
  constexpr double h = 1e-4;
  const MatrixFn m = law_matrix(law);
  auto diff = [&](double step) {
    return (nystrom(m, s + step, law.nodes, law.span) -
            nystrom(m, s - step, law.nodes, law.span)) / (2.0 * step);
  };
  return (4.0 * diff(0.5 * h) - diff(h)) / 3.0;
}

void check_law_range(double s) {
  if (!(s >= -10.0 && s <= 10.0)) throw RangeError("law: s outside [-10, 10]");
}

}  // namespace

LimitLaw LimitLaw::gue() {
  LimitLaw law;
  law.kind = LawKind::gue;
  law.kernel.family = KernelFamily::airy2;
  return law;
}

LimitLaw LimitLaw::goe2() {
  LimitLaw law;
  law.kind = LawKind::goe2;
  law.kernel.family = KernelFamily::airy1;
  return law;
}

LimitLaw LimitLaw::custom(KernelFn kernel) {
  LimitLaw law;
  law.kind = LawKind::custom;
  law.custom_kernel = std::move(kernel);
  return law;
}

std::vector<double> LatticeGrid::points() const {
  std::vector<double> out;
  for (long k = floor_index(s_min - 1e-12) ; at(k) <= s_max; ++k)
    if (at(k) >= s_min) out.push_back(at(k));
  return out;
}

long LatticeGrid::floor_index(double s) const {
  return static_cast<long>(std::floor((s - anchor) / delta));
}

double det_continuum(const KernelModel& kernel, double s, int nodes, double span) {
  return checked(model_matrix(kernel), s, nodes, span);
}

double det_continuum(const KernelFn& kernel, double s, int nodes, double span) {
  return checked(fn_matrix(kernel), s, nodes, span);
}

double det_lattice(const KernelModel& kernel, const LatticeGrid& grid, double s,
                   double span) {
  return lattice_det(model_matrix(kernel), grid, s, span);
}

double det_lattice(const KernelFn& kernel, const LatticeGrid& grid, double s,
                   double span) {
  return lattice_det(fn_matrix(kernel), grid, s, span);
}

double det_lattice(PrelimitKernel& kernel, double s, double span) {
  const double anchor = kernel.s_of(kernel.coordinate(0.0));
  LatticeGrid grid{kernel.delta(), anchor, -1e300, 1e300};
  MatrixFn m = [&kernel](const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<long> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = kernel.coordinate(x[i]);
    std::vector<double> k(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) k[i * n + j] = kernel.conjugated(c[i], c[j]) / kernel.delta();
    return k;
  };
  return lattice_det(m, grid, s, span);
}

double law_cdf(const LimitLaw& law, double s) {
  check_law_range(s);
  const double v = checked(law_matrix(law), s, law.nodes, law.span);
  return std::clamp(v, 0.0, 1.0);
}

double law_cdf_raw(const LimitLaw& law, double s) { return cdf_unchecked(law, s); }

double law_pdf(const LimitLaw& law, double s) {
  check_law_range(s);
  return pdf_unchecked(law, s);
}

LawMoments law_moments(const LimitLaw& law, int max_order) {
  if (max_order < 1 || max_order > 4) throw DomainError("law_moments: max_order must be 1..4");
  // E s^m = int m s^(m-1) (1{s>=0} - F(s)) ds; F is below 1e-15 left of -8
  // and 1 - F is below 1e-15 right of 12 for both Tracy-Widom laws.
  const GaussRule& g = gauss_legendre(10);
  constexpr double lo = -8.0, hi = 12.0, panel = 0.5;
  const int panels = static_cast<int>((hi - lo) / panel);
  double raw[5] = {1, 0, 0, 0, 0};
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * panel;
    for (int i = 0; i < 10; ++i) {
      const double s = mid + 0.5 * panel * g.x[i];
      const double tail = (s >= 0.0 ? 1.0 : 0.0) - cdf_unchecked(law, s);
      const double w = 0.5 * panel * g.w[i] * tail;
      double sp = 1.0;
      for (int m = 1; m <= 4; ++m) {
        raw[m] += w * m * sp;
        sp *= s;
      }
    }
  }
  const double mean = raw[1] / raw[0];
  double c[5] = {1, 0, 0, 0, 0};
  for (int m = 2; m <= 4; ++m) {
    // central moments from raw moments about the origin
    double acc = 0.0, binom = 1.0;
    for (int k = 0; k <= m; ++k) {
      acc += binom * raw[k] / raw[0] * std::pow(-mean, m - k);
      binom = binom * (m - k) / (k + 1);
    }
    c[m] = acc;
  }
  LawMoments out{mean, std::nan(""), std::nan(""), std::nan("")};
  if (max_order >= 2) out.variance = c[2];
  if (max_order >= 3) out.skewness = c[3] / std::pow(c[2], 1.5);
  if (max_order >= 4) out.kurtosis = c[4] / (c[2] * c[2]) - 3.0;
  return out;
}

double midpoint_gap(const std::function<double(double)>& f, double delta, double upper) {
  if (!(delta > 0.0)) throw DomainError("midpoint_gap: delta must be positive");
  const long last = static_cast<long>(std::floor(upper / delta));
  double sum = 0.0;
  for (long x = 0; x <= last; ++x) sum += f(x * delta);
  sum *= delta;
  const double integral = integrate(f, -0.5 * delta, (last + 0.5) * delta, 0.25, 20);
  return std::fabs(sum - integral);
}

}  // namespace kpzfit
