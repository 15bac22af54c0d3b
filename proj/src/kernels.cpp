#include "kpzfit/kernels.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "kpzfit/errors.hpp"
#include "kpzfit/quadrature.hpp"
#include "kpzfit/specfun.hpp"

namespace kpzfit {
namespace {

using cplx = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxNodes = 1 << 23;

void check_window(double x, double y) {
  if (!(x >= -15.0 && x <= 40.0 && y >= -15.0 && y <= 40.0))
    throw RangeError("airy kernel: arguments outside [-15, 40]");
}

// Diagonal value at the midpoint plus the d^2 term; d = (x - y) / 2.
double airy2_near_diagonal(double x, double y) {
  const double m = 0.5 * (x + y), d = 0.5 * (x - y);
  const AiryPair p = airy_pair(m);
  const double A = p.ai, B = p.aip;
  const double c0 = B * B - m * A * A;
  const double c2 = A * B / 3.0 + 2.0 / 3.0 * m * B * B - 2.0 / 3.0 * m * m * A * A;
  return c0 + c2 * d * d;
}

double airy2_from_pairs(double x, const AiryPair& px, double y, const AiryPair& py) {
  if (std::fabs(x - y) < 1e-4) return airy2_near_diagonal(x, y);
  return (px.ai * py.aip - px.aip * py.ai) / (x - y);
}

// P(s1, s2) with Ai'' and Ai'''' reduced through Ai'' = x Ai.
double p_step(double s1, double s2, double sigma) {
  const double kappa = (1.0 - 2.0 * std::sqrt(sigma)) / (2.0 * std::sqrt(sigma));
  const double upper = std::max(0.0, 15.0 - std::min(s1, s2));
  auto f = [&](double lam) {
    const double u = s2 + lam;
    const AiryPair p2 = airy_pair(u);
    const double d2 = u * p2.ai;
    const double d4 = u * u * p2.ai + 2.0 * p2.aip;
    return airy_ai(s1 + lam) * (p2.aip + s2 * d2 - kappa * d4);
  };
  return 0.5 * integrate(f, 0.0, upper, 0.25, 20);
}

std::vector<cplx> fft_forward(std::vector<cplx> data) {
  static std::mutex plan_mu;
  const int n = static_cast<int>(data.size());
  std::vector<cplx> out(data.size());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mu);
    plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(data.data()),
                            reinterpret_cast<fftw_complex*>(out.data()),
                            FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(plan_mu);
    fftw_destroy_plan(plan);
  }
  return out;
}

int next_pow2(double v) {
  int m = 1;
  while (m < v) m <<= 1;
  return m;
}

}  // namespace

bool KernelModel::is_limit() const {
  return family == KernelFamily::airy1 || family == KernelFamily::airy2;
}
bool KernelModel::is_correction() const {
  return family == KernelFamily::asym_flat || family == KernelFamily::asym_step;
}
bool KernelModel::is_prelimit() const { return !is_limit() && !is_correction(); }

KernelFamily limit_family(KernelFamily prelimit) {
  switch (prelimit) {
    case KernelFamily::flat_png:
    case KernelFamily::tasep_flat:
      return KernelFamily::airy1;
    case KernelFamily::png_droplet:
    case KernelFamily::tasep_step:
      return KernelFamily::airy2;
    default:
      throw DomainError("limit_family: not a prelimit family");
  }
}

double k_airy2(double x, double y) {
  check_window(x, y);
  return airy2_from_pairs(x, airy_pair(x), y, airy_pair(y));
}

double k_airy2_quadrature(double x, double y) {
  check_window(x, y);
  const double upper = std::max(0.0, 14.0 - std::min(x, y));
  return integrate([&](double l) { return airy_ai(x + l) * airy_ai(y + l); }, 0.0,
                   upper, 0.25, 20);
}

double k_airy1(double x, double y) { return airy_ai(x + y); }

double airy_shift_combo(KernelFamily kind, double s1, double s2) {
  switch (kind) {
    case KernelFamily::airy2:
      return -airy_ai(s1) * airy_ai(s2);
    case KernelFamily::airy1:
      return 2.0 * airy_ai_deriv(s1 + s2, 1);
    default:
      throw DomainError("airy_shift_combo: kind must be airy1 or airy2");
  }
}

double k_correction(const KernelModel& model, double s1, double s2) {
  switch (model.family) {
    case KernelFamily::asym_flat:
      return 0.5 * (s2 * s2 - s1 * s1) * airy_ai(s1 + s2);
    case KernelFamily::asym_step:
      if (!(model.sigma > 0.0 && model.sigma < 1.0))
        throw DomainError("k_correction: sigma must lie in (0,1)");
      if (s1 == s2) return 0.0;
      return p_step(s1, s2, model.sigma) - p_step(s2, s1, model.sigma);
    default:
      throw DomainError("k_correction: family must be asym_flat or asym_step");
  }
}

double k_continuous(const KernelModel& model, double x, double y) {
  switch (model.family) {
    case KernelFamily::airy2: return k_airy2(x, y);
    case KernelFamily::airy1: return k_airy1(x, y);
    case KernelFamily::asym_flat:
    case KernelFamily::asym_step: return k_correction(model, x, y);
    default: throw DomainError("k_continuous: prelimit family needs lattice coordinates");
  }
}

std::vector<double> kernel_matrix(const KernelModel& model,
                                  const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<double> k(n * n);
  if (model.family == KernelFamily::airy2) {
    std::vector<AiryPair> pairs(n);
    for (std::size_t i = 0; i < n; ++i) {
      check_window(xs[i], xs[i]);
      pairs[i] = airy_pair(xs[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      k[i * n + i] = pairs[i].aip * pairs[i].aip - xs[i] * pairs[i].ai * pairs[i].ai;
      for (std::size_t j = 0; j < i; ++j)
        k[i * n + j] = k[j * n + i] = airy2_from_pairs(xs[i], pairs[i], xs[j], pairs[j]);
    }
    return k;
  }
  if (model.family == KernelFamily::airy1) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) k[i * n + j] = k[j * n + i] = k_airy1(xs[i], xs[j]);
    return k;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) k[i * n + j] = k_continuous(model, xs[i], xs[j]);
  return k;
}

PrelimitKernel::PrelimitKernel(const KernelModel& model) : model_(model) {
  if (!model.is_prelimit()) throw DomainError("PrelimitKernel: family must be a prelimit kernel");
  const double t = model.t;
  if (!(t > 0.0)) throw DomainError("PrelimitKernel: t must be positive");
  if (t > 1e4 * (1 + 1e-12)) throw RangeError("PrelimitKernel: t above validated range 1e4");
  if (model.quadrature < 16) throw DomainError("PrelimitKernel: quadrature must be >= 16");
  nodes_ = next_pow2(model.quadrature);
  xi_ = 0.5;
  switch (model.family) {
    case KernelFamily::flat_png:
      delta_ = std::cbrt(1.0 / (2.0 * t));
      base_ = 2.0 * t;
      orient_ = 1;
      n_ = 0;
      break;
    case KernelFamily::png_droplet:
      delta_ = 1.0 / std::cbrt(t);
      base_ = 2.0 * t;
      orient_ = 1;
      n_ = 0;
      break;
    case KernelFamily::tasep_flat:
      delta_ = 1.0 / std::cbrt(t);
      n_ = model.n > 0 ? model.n : static_cast<long>(std::ceil(t));
      base_ = -2.0 * n_ + 0.5 * t;
      orient_ = -1;
      break;
    case KernelFamily::tasep_step: {
      const double s = model.sigma;
      if (!(s > 0.0 && s < 1.0)) throw DomainError("PrelimitKernel: sigma must lie in (0,1)");
      const double rs = std::sqrt(s);
      const double c2 = std::pow(s, -1.0 / 6.0) * std::pow(1.0 - rs, 2.0 / 3.0);
      delta_ = 1.0 / (c2 * std::cbrt(t));
      n_ = model.n > 0 ? model.n : std::lround(s * t);
      if (n_ < 1) throw DomainError("PrelimitKernel: tagged label must be >= 1");
      base_ = -static_cast<double>(n_) + (1.0 - rs) * (1.0 - rs) * t;
      orient_ = -1;
      xi_ = 1.0 - rs;
      break;
    }
    default:
      break;
  }
}

long PrelimitKernel::coordinate(double s) const {
  return std::lround(base_ + orient_ * (s / delta_ + model_.a));
}

double PrelimitKernel::s_of(long c) const {
  return (orient_ * (static_cast<double>(c) - base_) - model_.a) * delta_;
}

void PrelimitKernel::ensure_bessel(long lo, long hi) {
  const long cur_hi = bessel_lo_ + static_cast<long>(bessel_.size()) - 1;
  if (!bessel_.empty() && lo >= bessel_lo_ && hi <= cur_hi) return;
  if (!bessel_.empty()) {
    lo = std::min(lo, bessel_lo_);
    hi = std::max(hi, cur_hi);
  }
  bessel_ = bessel_j_range(lo, hi, 2.0 * model_.t);
  bessel_lo_ = lo;
}

double PrelimitKernel::raw(long x1, long x2) {
  switch (model_.family) {
    case KernelFamily::flat_png:
      return bessel_j(x1 + x2, 4.0 * model_.t);
    case KernelFamily::png_droplet: {
      const double t = model_.t;
      const long top = static_cast<long>(std::ceil(std::max<double>({2.0 * t, double(x1), double(x2)}) +
                                                   30.0 * std::cbrt(t) + 30.0));
      ensure_bessel(std::min(x1, x2), top);
      double sum = 0.0;
      for (long l = 0; x1 + l <= top && x2 + l <= top; ++l)
        sum += bessel_[x1 + l - bessel_lo_] * bessel_[x2 + l - bessel_lo_];
      return sum;
    }
    case KernelFamily::tasep_flat:
      return std::ldexp(conjugated(x1, x2), static_cast<int>(x1 - x2));
    case KernelFamily::tasep_step:
      return conjugated(x1, x2) * std::pow(xi_, static_cast<double>(x2 - x1));
    default:
      throw DomainError("raw: unsupported family");
  }
}

double PrelimitKernel::conjugated(long x1, long x2) {
  if (model_.family == KernelFamily::flat_png || model_.family == KernelFamily::png_droplet)
    return raw(x1, x2);
  // Coefficient index must stay well below the node count to avoid aliasing.
  long index = model_.family == KernelFamily::tasep_flat ? 2 * n_ + x1 : n_ + x1;
  int m = std::max(nodes_, next_pow2(2.0 * std::max(0L, index) + 64.0));
  double v = conjugated_at(x1, x2, m);
  while (true) {
    if (2 * m > kMaxNodes)
      throw AccuracyError("prelimit kernel: contour quadrature did not converge");
    const double v2 = conjugated_at(x1, x2, 2 * m);
    if (std::fabs(v2 - v) <= 1e-9 * delta_) {
      nodes_ = std::max(nodes_, m);
      return v2;
    }
    v = v2;
    m *= 2;
  }
}

double PrelimitKernel::conjugated_at(long x1, long x2, int m) {
  if (model_.family == KernelFamily::tasep_flat)
    return flat_tasep_entry(2 * n_ + x1, 2 * n_ + x2, m);
  return step_tasep_entry(x1, x2, m);
}

// [u^{m1}] exp(t(u-1)) (2-u)^{m2} on |u| = 1; |integrand| <= 1 with the
// maximum at u = 1.
double PrelimitKernel::flat_tasep_entry(long m1, long m2, int m) {
  if (m1 < 0) return 0.0;
  auto key = std::make_pair(m, m2);
  auto it = flat_cols_.find(key);
  if (it == flat_cols_.end()) {
    std::vector<cplx> phi(m);
    const double t = model_.t;
    for (int l = 0; l < m; ++l) {
      const double th = kTwoPi * l / m;
      const cplx u = std::polar(1.0, th);
      phi[l] = std::exp(t * (u - 1.0) + static_cast<double>(m2) * std::log(2.0 - u));
    }
    it = flat_cols_.emplace(key, fft_forward(std::move(phi))).first;
  }
  if (m1 >= m) return 0.0;
  return it->second[m1].real() / m;
}

double PrelimitKernel::step_b_value(int m, long index) {
  auto it = step_b_.find(m);
  if (it == step_b_.end() || index > it->second.top) {
    StepB b;
    b.top = index + 64;
    b.nodes.resize(m);
    b.ratio.resize(m);
    const double t = model_.t, rs = std::sqrt(model_.sigma);
    const double xi = xi_;
    const double n = static_cast<double>(n_);
    for (int l = 0; l < m; ++l) {
      const double ph = kTwoPi * l / m;
      const cplx e = std::polar(1.0, ph);
      const cplx w = 1.0 - rs * e;
      const cplx expo = -t * (w - xi) - cplx(0.0, n * ph) +
                        (n + static_cast<double>(b.top)) * std::log(w / xi);
      b.nodes[l] = std::exp(expo) * (-rs * e) / static_cast<double>(m);
      b.ratio[l] = xi / w;
    }
    it = step_b_.insert_or_assign(m, std::move(b)).first;
  }
  StepB& b = it->second;
  const long need = b.top - index;
  while (static_cast<long>(b.values.size()) <= need) {
    if (!b.values.empty())
      for (int l = 0; l < m; ++l) b.nodes[l] *= b.ratio[l];
    cplx s = 0.0;
    for (int l = 0; l < m; ++l) s += b.nodes[l];
    b.values.push_back(s.real());
  }
  return b.values[need];
}

// xi^{x1-x2} K(x1,x2) = -xi^{-1} sum_k A(x1-k) B(x2-k-1), with A and B the
// saddle-normalized z- and w-contour integrals.
double PrelimitKernel::step_tasep_entry(long x1, long x2, int m) {
  const long jtop = n_ + x1;
  if (jtop < 0) return 0.0;
  auto it = step_a_.find(m);
  if (it == step_a_.end()) {
    std::vector<cplx> phi(m);
    const double t = model_.t, xi = xi_;
    const double n = static_cast<double>(n_);
    for (int l = 0; l < m; ++l) {
      const cplx e = std::polar(1.0, kTwoPi * l / m);
      phi[l] = std::exp(t * xi * (e - 1.0) + n * std::log((1.0 - xi * e) / (1.0 - xi)));
    }
    std::vector<cplx> c = fft_forward(std::move(phi));
    for (auto& v : c) v /= static_cast<double>(m);
    it = step_a_.emplace(m, std::move(c)).first;
  }
  const std::vector<cplx>& A = it->second;
  double sum = 0.0;
  int quiet = 0;
  for (long k = 0; k <= jtop; ++k) {
    const long j = jtop - k;
    if (j >= m) continue;
    const double term = A[j].real() * step_b_value(m, x2 - k - 1);
    sum += term;
    quiet = (std::fabs(term) < 1e-18) ? quiet + 1 : 0;
    if (k > 10 && quiet >= 30) break;
  }
  return -sum / xi_;
}

double PrelimitKernel::rescaled(double s1, double s2) {
  return conjugated(coordinate(s1), coordinate(s2)) / delta_;
}

double k_prelimit(const KernelModel& model, long x1, long x2) {
  return PrelimitKernel(model).raw(x1, x2);
}

double k_rescaled(const KernelModel& model, double s1, double s2) {
  return PrelimitKernel(model).rescaled(s1, s2);
}

}  // namespace kpzfit
