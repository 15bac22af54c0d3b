#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kpzfit/fredholm.hpp"
#include "kpzfit/shifts.hpp"
#include "kpzfit/simulate.hpp"

namespace kpzfit {

struct LatticeDistribution {
  LatticeGrid grid;
  long first_index = 0;       // grid index of mass[0]
  std::vector<double> mass;   // consecutive sites
  long count = 0;             // sample size; 0 for exact masses
  std::vector<long> site;     // per-sample site offset into mass (jackknife)

  double s_at(std::size_t i) const { return grid.at(first_index + static_cast<long>(i)); }
  double cdf(double s) const;  // F_t(s) = sum of masses at sites <= s
};

// Bins integer observables onto I_t. n is the tagged label (particle models).
LatticeDistribution make_distribution(const std::vector<long>& samples,
                                      const ScalingConstants& constants,
                                      double t, long n = 0);
// Bins already-rescaled values that lie on anchor + delta Z.
LatticeDistribution make_distribution(const std::vector<double>& lattice_values,
                                      double delta, double anchor);
// Exact masses (count = 0, no standard errors).
LatticeDistribution distribution_from_masses(double delta, double anchor,
                                             long first_index,
                                             std::vector<double> masses);

struct Moments {
  LawMoments value;
  LawMoments se;  // jackknife, 100 blocks; NaN without samples
};
Moments moments(const LatticeDistribution& dist);

enum class ShiftMode { midpoint, none };
using CdfFn = std::function<double(double)>;

// sup over sites in [-4, 2] of |F_t(s) - F(s + delta/2)| or |F_t(s) - F(s)|.
double compare_cdf(const LatticeDistribution& dist, const LimitLaw& law, ShiftMode mode);
double compare_cdf(const LatticeDistribution& dist, const CdfFn& law_cdf, ShiftMode mode);

// (s, p_t(s)) with p_t = mass / delta.
std::vector<std::pair<double, double>> density_points(const LatticeDistribution& dist);

// Tabulated CDF of a law for repeated evaluation and inverse-CDF sampling.
class LawTable {
 public:
  LawTable(const LimitLaw& law, double lo = -8.0, double hi = 8.0, double step = 0.01);
  double cdf(double s) const;
  double quantile(double u) const;
  const LawMoments& moments() const { return moments_; }

 private:
  double lo_, step_;
  std::vector<double> f_;
  LawMoments moments_;
};

// How step (3) turns the per-time means into a.
enum class ShiftFit {
  origin,     // y = a x
  intercept,  // y = a x + c, c absorbs finite-N error in <zeta> and Gamma
  quadratic   // y = a x + b x^2, allows the next-order lattice correction
};

// How step (2) turns the per-time variances into Gamma.
enum class VarianceFit {
  plain,     // Var_t = (Gamma t)^{2/3} Var(zeta)
  corrected  // Var_t / t^{2/3} = Gamma^{2/3} Var(zeta) + c t^{-2/3}
};

struct FitOptions {
  double epsilon = 1.0;  // raw lattice spacing
  ShiftFit shift_fit = ShiftFit::quadratic;
  VarianceFit variance_fit = VarianceFit::corrected;
  bool negate = false;   // fit -observable (particle positions)
  // Skips step (1). With few times the fitted velocity dominates the error of a.
  std::optional<double> velocity;
};

struct TableRow {
  std::string name;
  double empirical;
  double se;
  double law;
  double rel_error;
};

struct FitReport {
  double v_inf = 0.0;
  double Gamma = 0.0;
  double variance_slope = 0.0;
  double a_hat = 0.0;
  double a_hat_se = 0.0;
  double max_cdf_gap = 0.0;
  std::vector<double> times;
  std::vector<double> cdf_shift;  // epsilon / 2 / (Gamma t)^{1/3} per time
  std::vector<TableRow> moment_table;  // at the largest time
  std::vector<std::string> warnings;
};

using TimedSamples = std::pair<double, std::vector<long>>;
// law_table provides Var(zeta), E(zeta) and the CDF used in step (4.2).
FitReport fit_protocol(const std::vector<TimedSamples>& batches,
                       const LawTable& law_table, const FitOptions& options);
FitReport fit_protocol(const std::vector<std::pair<double, RunBatch>>& batches,
                       const LawTable& law_table, FitOptions options);

std::vector<TableRow> table_report(const LatticeDistribution& dist, const LawMoments& law);
std::vector<TableRow> table_report(const LatticeDistribution& dist, const LimitLaw& law);
std::string table_csv(const std::vector<TableRow>& rows);
std::string table_json(const std::vector<TableRow>& rows);
std::string fit_report_json(const FitReport& report);

}  // namespace kpzfit
