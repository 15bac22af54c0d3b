#pragma once

#include <complex>
#include <map>
#include <memory>
#include <vector>

namespace kpzfit {

enum class KernelFamily {
  airy2,
  airy1,
  flat_png,
  png_droplet,
  tasep_flat,
  tasep_step,
  asym_flat,
  asym_step
};

struct KernelModel {
  KernelFamily family = KernelFamily::airy2;
  double t = 0.0;       // prelimit families
  double sigma = 0.25;  // tasep_step, asym_step
  double a = 0.5;       // lattice shift of the rescaling
  int quadrature = 2048;  // initial contour node count (doubled until converged)
  long n = 0;  // tagged label; 0 means round(sigma t) for tasep_step, t for tasep_flat

  bool is_limit() const;
  bool is_prelimit() const;
  bool is_correction() const;
};

// Limit kernel reached by a prelimit family (airy1 or airy2).
KernelFamily limit_family(KernelFamily prelimit);

double k_airy2(double x, double y);  // closed form; RangeError outside [-15, 40]
double k_airy2_quadrature(double x, double y);  // lambda-integral reference
double k_airy1(double x, double y);
double airy_shift_combo(KernelFamily kind, double s1, double s2);
double k_correction(const KernelModel& model, double s1, double s2);

// Any continuous-argument family (limit or correction).
double k_continuous(const KernelModel& model, double x, double y);
// Row-major n x n matrix K(xs[i], xs[j]); Airy values are computed once per node.
std::vector<double> kernel_matrix(const KernelModel& model,
                                  const std::vector<double>& xs);

// Prelimit kernel of one model with its lattice map and contour caches.
// Not thread-safe; use one instance per thread.
class PrelimitKernel {
 public:
  explicit PrelimitKernel(const KernelModel& model);

  double delta() const { return delta_; }
  // Integer coordinate of the lattice point nearest to s.
  long coordinate(double s) const;
  double s_of(long coordinate) const;
  double snap(double s) const { return s_of(coordinate(s)); }

  double raw(long x1, long x2);
  // Conjugated and scaled entry at lattice points nearest to s1, s2.
  double rescaled(double s1, double s2);
  // Conjugated raw entry (rescaled() without the 1/delta factor).
  double conjugated(long x1, long x2);

 private:
  double conjugated_at(long x1, long x2, int m);
  double flat_tasep_entry(long m1, long m2, int m);
  double step_tasep_entry(long x1, long x2, int m);
  void ensure_bessel(long lo, long hi);

  KernelModel model_;
  double delta_;
  double base_;
  int orient_;  // +1: coordinate increases with s
  long n_;
  double xi_;
  int nodes_;

  std::vector<double> bessel_;  // J_j(2t), j = bessel_lo_ ..
  long bessel_lo_ = 0;

  std::map<std::pair<int, long>, std::vector<std::complex<double>>> flat_cols_;
  std::map<int, std::vector<std::complex<double>>> step_a_;
  struct StepB {
    long top;
    std::vector<std::complex<double>> nodes;  // current weighted integrand
    std::vector<std::complex<double>> ratio;
    std::vector<double> values;  // B(top), B(top-1), ...
  };
  std::map<int, StepB> step_b_;
  double step_b_value(int m, long index);
};

double k_prelimit(const KernelModel& model, long x1, long x2);
double k_rescaled(const KernelModel& model, double s1, double s2);

}  // namespace kpzfit
