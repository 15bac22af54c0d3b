#pragma once

#include <functional>
#include <vector>

#include "kpzfit/kernels.hpp"

namespace kpzfit {

using KernelFn = std::function<double(double, double)>;

enum class LawKind { gue, goe2, custom };

struct LimitLaw {
  LawKind kind = LawKind::gue;
  KernelModel kernel;  // airy2 for gue, airy1 for goe2
  KernelFn custom_kernel;  // kind == custom only
  int nodes = 64;
  double span = 16.0;

  static LimitLaw gue();
  static LimitLaw goe2();  // F_GOE(2s)
  static LimitLaw custom(KernelFn kernel);
};

// I_t points anchor + delta Z inside [s_min, s_max].
struct LatticeGrid {
  double delta;
  double anchor;
  double s_min;
  double s_max;

  std::vector<double> points() const;
  // Largest grid index with anchor + k delta <= s (s itself may be off-grid).
  long floor_index(double s) const;
  double at(long k) const { return anchor + static_cast<double>(k) * delta; }
};

// det(I - K) on L^2((s, s + span)) by Gauss-Legendre Nystrom. Evaluates at
// nodes and 2 nodes and throws AccuracyError when they differ by more than
// 1e-9 (checked for s >= -8 only).
double det_continuum(const KernelModel& kernel, double s, int nodes = 64,
                     double span = 16.0);
double det_continuum(const KernelFn& kernel, double s, int nodes = 64,
                     double span = 16.0);

// det(I - delta K) over grid points in (s, min(s_max, s + span)].
double det_lattice(const KernelModel& kernel, const LatticeGrid& grid, double s,
                   double span = 16.0);
double det_lattice(const KernelFn& kernel, const LatticeGrid& grid, double s,
                   double span = 16.0);
// Same with a prelimit kernel on its own lattice.
double det_lattice(PrelimitKernel& kernel, double s, double span = 16.0);

double law_cdf(const LimitLaw& law, double s);  // RangeError outside [-10, 10]
double law_pdf(const LimitLaw& law, double s);
// Nystrom value at law.nodes with no range or self-convergence check.
double law_cdf_raw(const LimitLaw& law, double s);

struct LawMoments {
  double mean;
  double variance;
  double skewness;
  double kurtosis;  // excess
};
LawMoments law_moments(const LimitLaw& law, int max_order = 4);

// |delta sum_{x>=0} f(x delta) - int_{-delta/2}^{upper} f|.
double midpoint_gap(const std::function<double(double)>& f, double delta,
                    double upper = 60.0);

}  // namespace kpzfit
