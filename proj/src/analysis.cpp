#include "kpzfit/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "kpzfit/errors.hpp"

namespace kpzfit {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct PowerSums {
  double s[5] = {0, 0, 0, 0, 0};
  void add(double x, double w = 1.0) {
    double p = w;
    for (double& v : s) {
      v += p;
      p *= x;
    }
  }
};

// Mean and central moments from power sums about a reference point c.
LawMoments from_sums(const double* s, double c) {
  const double n = s[0];
  const double m1 = s[1] / n, m2 = s[2] / n, m3 = s[3] / n, m4 = s[4] / n;
  const double var = m2 - m1 * m1;
  const double c3 = m3 - 3 * m1 * m2 + 2 * m1 * m1 * m1;
  const double c4 = m4 - 4 * m1 * m3 + 6 * m1 * m1 * m2 - 3 * m1 * m1 * m1 * m1;
  return {c + m1, var, c3 / std::pow(var, 1.5), c4 / (var * var) - 3.0};
}

LatticeDistribution bin_indices(const std::vector<long>& idx, double delta, double anchor) {
  if (idx.empty()) throw DomainError("make_distribution: empty sample");
  const auto [lo, hi] = std::minmax_element(idx.begin(), idx.end());
  LatticeDistribution d;
  d.grid = {delta, anchor, anchor + static_cast<double>(*lo) * delta,
            anchor + static_cast<double>(*hi) * delta};
  d.first_index = *lo;
  d.mass.assign(static_cast<std::size_t>(*hi - *lo + 1), 0.0);
  d.site.resize(idx.size());
  d.count = static_cast<long>(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    d.site[i] = idx[i] - *lo;
    d.mass[static_cast<std::size_t>(d.site[i])] += 1.0;
  }
  for (double& m : d.mass) m /= static_cast<double>(idx.size());
  return d;
}

double sample_mean(const std::vector<double>& h) {
  double s = 0.0;
  for (double v : h) s += v;
  return s / static_cast<double>(h.size());
}

double sample_var(const std::vector<double>& h, double mean) {
  double s = 0.0;
  for (double v : h) s += (v - mean) * (v - mean);
  return s / static_cast<double>(h.size() - 1);
}

// Least squares y = sum_j coef_j basis_j(x); returns coefficients and the
// weights w with coef_0 = sum_i w_i y_i.
struct LinearFit {
  std::vector<double> coef;
  std::vector<double> weights0;
};

LinearFit least_squares(const std::vector<std::vector<double>>& basis,
                        const std::vector<double>& y) {
  const std::size_t p = basis.size(), n = y.size();
  Eigen::MatrixXd X(n, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) X(i, j) = basis[j][i];
  Eigen::VectorXd Y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  const Eigen::MatrixXd pinv = (X.transpose() * X).ldlt().solve(X.transpose());
  const Eigen::VectorXd c = pinv * Y;
  LinearFit f;
  f.coef.assign(c.data(), c.data() + p);
  f.weights0.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.weights0[i] = pinv(0, i);
  return f;
}

}  // namespace

double LatticeDistribution::cdf(double s) const {
  const long k = grid.floor_index(s + 1e-9 * grid.delta) - first_index;
  if (k < 0) return 0.0;
  double acc = 0.0;
  for (long i = 0; i <= k && i < static_cast<long>(mass.size()); ++i) acc += mass[i];
  return std::min(acc, 1.0);
}

LatticeDistribution make_distribution(const std::vector<long>& samples,
                                      const ScalingConstants& k, double t, long n) {
  if (samples.empty()) throw DomainError("make_distribution: empty sample");
  const double delta = k.delta(t);
  // Site index is the observable itself (heights) or minus it (positions).
  const double anchor = k.rescale(0, t, n);
  std::vector<long> idx(samples.size());
  const bool flip = k.particle_observable();
  for (std::size_t i = 0; i < samples.size(); ++i) idx[i] = flip ? -samples[i] : samples[i];
  return bin_indices(idx, delta, anchor);
}

LatticeDistribution make_distribution(const std::vector<double>& values, double delta,
                                      double anchor) {
  std::vector<long> idx(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    idx[i] = std::lround((values[i] - anchor) / delta);
  return bin_indices(idx, delta, anchor);
}

LatticeDistribution distribution_from_masses(double delta, double anchor, long first_index,
                                             std::vector<double> masses) {
  double total = 0.0;
  for (double m : masses) {
    if (m < 0.0) throw DomainError("distribution_from_masses: negative mass");
    total += m;
  }
  if (masses.empty() || !(total > 0.0)) throw DomainError("distribution_from_masses: no mass");
  for (double& m : masses) m /= total;
  LatticeDistribution d;
  d.grid = {delta, anchor, anchor + static_cast<double>(first_index) * delta,
            anchor + static_cast<double>(first_index + static_cast<long>(masses.size()) - 1) * delta};
  d.first_index = first_index;
  d.mass = std::move(masses);
  return d;
}

Moments moments(const LatticeDistribution& d) {
  PowerSums all;
  double mean = 0.0;
  for (std::size_t i = 0; i < d.mass.size(); ++i) mean += d.mass[i] * d.s_at(i);
  for (std::size_t i = 0; i < d.mass.size(); ++i) all.add(d.s_at(i) - mean, d.mass[i]);
  Moments out{from_sums(all.s, mean), {kNaN, kNaN, kNaN, kNaN}};
  if (d.count < 2 || d.site.size() != static_cast<std::size_t>(d.count)) return out;

  const long blocks = std::min<long>(100, d.count);
  std::vector<PowerSums> per(static_cast<std::size_t>(blocks));
  PowerSums total;
  for (long i = 0; i < d.count; ++i) {
    const double x = d.s_at(static_cast<std::size_t>(d.site[i])) - mean;
    per[static_cast<std::size_t>(i * blocks / d.count)].add(x);
    total.add(x);
  }
  std::vector<LawMoments> loo(static_cast<std::size_t>(blocks));
  for (long b = 0; b < blocks; ++b) {
    double s[5];
    for (int k = 0; k < 5; ++k) s[k] = total.s[k] - per[b].s[k];
    loo[b] = from_sums(s, mean);
  }
  auto jack = [&](double LawMoments::*field) {
    double avg = 0.0;
    for (const auto& m : loo) avg += m.*field;
    avg /= static_cast<double>(blocks);
    double ss = 0.0;
    for (const auto& m : loo) ss += (m.*field - avg) * (m.*field - avg);
    return std::sqrt(ss * (blocks - 1) / static_cast<double>(blocks));
  };
  out.se = {jack(&LawMoments::mean), jack(&LawMoments::variance),
            jack(&LawMoments::skewness), jack(&LawMoments::kurtosis)};
  return out;
}

double compare_cdf(const LatticeDistribution& d, const CdfFn& F, ShiftMode mode) {
  const double shift = mode == ShiftMode::midpoint ? 0.5 * d.grid.delta : 0.0;
  double gap = 0.0, acc = 0.0;
  const long k0 = d.grid.floor_index(-4.0 - 1e-12) + 1;
  const long k1 = d.grid.floor_index(2.0 + 1e-12);
  long k = d.first_index;
  std::size_t i = 0;
  // Sites below the support carry F_t = 0.
  for (long site = k0; site <= k1; ++site) {
    while (i < d.mass.size() && k <= site) {
      acc += d.mass[i++];
      ++k;
    }
    const double s = d.grid.at(site);
    gap = std::max(gap, std::fabs(std::min(acc, 1.0) - F(s + shift)));
  }
  return gap;
}

double compare_cdf(const LatticeDistribution& d, const LimitLaw& law, ShiftMode mode) {
  return compare_cdf(d, [&law](double s) { return law_cdf(law, std::clamp(s, -10.0, 10.0)); }, mode);
}

std::vector<std::pair<double, double>> density_points(const LatticeDistribution& d) {
  std::vector<std::pair<double, double>> out;
  out.reserve(d.mass.size());
  for (std::size_t i = 0; i < d.mass.size(); ++i)
    out.emplace_back(d.s_at(i), d.mass[i] / d.grid.delta);
  return out;
}

LawTable::LawTable(const LimitLaw& law, double lo, double hi, double step)
    : lo_(lo), step_(step) {
  if (!(hi > lo && step > 0.0)) throw DomainError("LawTable: bad grid");
  // Tables and moments of the two Tracy-Widom laws are shared.
  static std::mutex mu;
  static std::map<std::tuple<int, double, double, double>, std::pair<std::vector<double>, LawMoments>> cache;
  const auto key = std::make_tuple(static_cast<int>(law.kind), lo, hi, step);
  if (law.kind != LawKind::custom) {
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(key); it != cache.end()) {
      f_ = it->second.first;
      moments_ = it->second.second;
      return;
    }
  }
  const long n = std::lround((hi - lo) / step);
  f_.resize(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) {
    const double s = lo + step * static_cast<double>(i);
    f_[i] = std::clamp(law_cdf_raw(law, s), 0.0, 1.0);
    if (i > 0) f_[i] = std::max(f_[i], f_[i - 1]);
  }
  moments_ = law_moments(law);
  if (law.kind != LawKind::custom) {
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(key, std::make_pair(f_, moments_));
  }
}

double LawTable::cdf(double s) const {
  const double pos = (s - lo_) / step_;
  if (pos <= 0.0) return f_.front();
  if (pos >= static_cast<double>(f_.size() - 1)) return f_.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return f_[i] + frac * (f_[i + 1] - f_[i]);
}

double LawTable::quantile(double u) const {
  if (u <= f_.front()) return lo_;
  if (u >= f_.back()) return lo_ + step_ * static_cast<double>(f_.size() - 1);
  const auto it = std::lower_bound(f_.begin(), f_.end(), u);
  const auto i = static_cast<std::size_t>(it - f_.begin());
  const double f0 = f_[i - 1], f1 = f_[i];
  const double frac = f1 > f0 ? (u - f0) / (f1 - f0) : 0.0;
  return lo_ + step_ * (static_cast<double>(i - 1) + frac);
}

FitReport fit_protocol(const std::vector<TimedSamples>& input, const LawTable& table,
                       const FitOptions& opt) {
  std::vector<TimedSamples> batches = input;
  std::sort(batches.begin(), batches.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < batches.size(); ++i)
    if (batches[i].first == batches[i - 1].first)
      throw DomainError("fit_protocol: duplicate time");
  if (batches.size() < 3) throw DomainError("fit_protocol: need at least 3 distinct times");
  if (!(opt.epsilon > 0.0)) throw DomainError("fit_protocol: epsilon must be positive");

  const LawMoments& law = table.moments();
  const std::size_t T = batches.size();
  std::vector<double> t(T), mean(T), var(T), count(T);
  std::vector<std::vector<double>> h(T);
  for (std::size_t i = 0; i < T; ++i) {
    t[i] = batches[i].first;
    if (batches[i].second.size() < 2) throw DomainError("fit_protocol: batch too small");
    h[i].reserve(batches[i].second.size());
    for (long v : batches[i].second) h[i].push_back(opt.negate ? -double(v) : double(v));
    mean[i] = sample_mean(h[i]);
    var[i] = sample_var(h[i], mean[i]);
    count[i] = static_cast<double>(h[i].size());
  }

  FitReport r;
  r.times = t;

  // (1) secant slopes against 3 (t2^{1/3} - t1^{1/3}) / (t2 - t1).
  std::vector<double> xs, ys, ones;
  for (std::size_t i = 0; i + 1 < T; ++i) {
    xs.push_back(3.0 * (std::cbrt(t[i + 1]) - std::cbrt(t[i])) / (t[i + 1] - t[i]));
    ys.push_back((mean[i + 1] - mean[i]) / (t[i + 1] - t[i]));
    ones.push_back(1.0);
  }
  // dv[j]: weight of mean j in v_inf.
  std::vector<double> dv(T, 0.0);
  if (opt.velocity) {
    r.v_inf = *opt.velocity;
  } else {
    const LinearFit vf = least_squares({ones, xs}, ys);
    r.v_inf = vf.coef[0];
    for (std::size_t k = 0; k + 1 < T; ++k) {
      const double w = vf.weights0[k] / (t[k + 1] - t[k]);
      dv[k + 1] += w;
      dv[k] -= w;
    }
  }

  // (2) log-log slope, then Gamma with the exponent fixed at 2/3.
  std::vector<double> lt(T), lv(T), one(T, 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    lt[i] = std::log(t[i]);
    lv[i] = std::log(var[i]);
    acc += lv[i] - 2.0 / 3.0 * lt[i] - std::log(law.variance);
  }
  r.variance_slope = least_squares({one, lt}, lv).coef[1];
  if (std::fabs(r.variance_slope - 2.0 / 3.0) > 0.05) {
    r.warnings.push_back("variance exponent " + std::to_string(r.variance_slope) +
                         " outside 2/3 +- 0.05");
    warn(r.warnings.back());
  }
  r.Gamma = std::exp(1.5 * acc / static_cast<double>(T));
  if (opt.variance_fit == VarianceFit::corrected) {
    std::vector<double> scaled(T), inv(T);
    for (std::size_t i = 0; i < T; ++i) {
      scaled[i] = var[i] / std::pow(t[i], 2.0 / 3.0);
      inv[i] = std::pow(t[i], -2.0 / 3.0);
    }
    const double c0 = least_squares({one, inv}, scaled).coef[0];
    if (c0 > 0.0) {
      r.Gamma = std::pow(c0 / law.variance, 1.5);
    } else {
      r.warnings.push_back("corrected variance fit has no positive limit; using the plain fit");
      warn(r.warnings.back());
    }
  }

  // (3) <h~> - E zeta against (Gamma t)^{-1/3}.
  std::vector<double> x3(T), y3(T);
  for (std::size_t i = 0; i < T; ++i) {
    const double scale = std::cbrt(r.Gamma * t[i]);
    x3[i] = 1.0 / scale;
    y3[i] = (mean[i] - r.v_inf * t[i]) / scale - law.mean;
  }
  LinearFit fit;
  switch (opt.shift_fit) {
    case ShiftFit::origin: fit = least_squares({x3}, y3); break;
    case ShiftFit::intercept: fit = least_squares({x3, one}, y3); break;
    case ShiftFit::quadratic: {
      std::vector<double> x2(T);
      for (std::size_t i = 0; i < T; ++i) x2[i] = x3[i] * x3[i];
      fit = least_squares({x3, x2}, y3);
      break;
    }
  }
  r.a_hat = fit.coef[0];
  // a_hat is linear in the means once Gamma is fixed; the velocity error enters through dv.
  double through_v = 0.0;
  for (std::size_t i = 0; i < T; ++i) through_v += fit.weights0[i] * t[i] / std::cbrt(r.Gamma * t[i]);
  double se2 = 0.0;
  for (std::size_t j = 0; j < T; ++j) {
    const double c = fit.weights0[j] / std::cbrt(r.Gamma * t[j]) - through_v * dv[j];
    se2 += c * c * var[j] / count[j];
  }
  r.a_hat_se = std::sqrt(se2);

  // (4.2) CDF of (h - v t - a)/(Gamma t)^{1/3} against F(s + eps/2/(Gamma t)^{1/3}).
  for (std::size_t i = 0; i < T; ++i) {
    const double scale = std::cbrt(r.Gamma * t[i]);
    const double spacing = opt.epsilon / scale;
    const double anchor = (-r.v_inf * t[i] - r.a_hat) / scale;
    std::vector<long> idx(h[i].size());
    for (std::size_t j = 0; j < h[i].size(); ++j) idx[j] = std::lround(h[i][j] / opt.epsilon);
    const LatticeDistribution d = bin_indices(idx, spacing, anchor);
    r.cdf_shift.push_back(0.5 * spacing);
    r.max_cdf_gap = std::max(r.max_cdf_gap,
                             compare_cdf(d, [&table](double s) { return table.cdf(s); },
                                         ShiftMode::midpoint));
    if (i + 1 == T) r.moment_table = table_report(d, law);
  }
  return r;
}

FitReport fit_protocol(const std::vector<std::pair<double, RunBatch>>& batches,
                       const LawTable& table, FitOptions opt) {
  std::vector<TimedSamples> plain;
  for (const auto& [t, b] : batches) {
    if (b.config.model == Model::tasep_step || b.config.model == Model::tasep_alt ||
        b.config.model == Model::pasep_step)
      opt.negate = true;
    plain.emplace_back(t, b.samples);
  }
  return fit_protocol(plain, table, opt);
}

std::vector<TableRow> table_report(const LatticeDistribution& d, const LawMoments& law) {
  const Moments m = moments(d);
  auto row = [](std::string name, double e, double se, double l) {
    return TableRow{std::move(name), e, se, l, (e - l) / std::fabs(l)};
  };
  return {row("mean", m.value.mean, m.se.mean, law.mean),
          row("variance", m.value.variance, m.se.variance, law.variance),
          row("skewness", m.value.skewness, m.se.skewness, law.skewness),
          row("kurtosis", m.value.kurtosis, m.se.kurtosis, law.kurtosis)};
}

std::vector<TableRow> table_report(const LatticeDistribution& d, const LimitLaw& law) {
  return table_report(d, law_moments(law));
}

std::string table_csv(const std::vector<TableRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "quantity,empirical,se,law,rel_error\n";
  for (const auto& r : rows)
    os << r.name << ',' << r.empirical << ',' << r.se << ',' << r.law << ',' << r.rel_error << '\n';
  return os.str();
}

namespace {
nlohmann::json rows_json(const std::vector<TableRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"quantity", r.name},
                 {"empirical", r.empirical},
                 {"se", std::isfinite(r.se) ? nlohmann::json(r.se) : nlohmann::json()},
                 {"law", r.law},
                 {"rel_error", r.rel_error}});
  }
  return j;
}
}  // namespace

std::string table_json(const std::vector<TableRow>& rows) { return rows_json(rows).dump(2); }

std::string fit_report_json(const FitReport& r) {
  nlohmann::json j{{"v_inf", r.v_inf},
                   {"Gamma", r.Gamma},
                   {"variance_slope", r.variance_slope},
                   {"a_hat", r.a_hat},
                   {"a_hat_se", r.a_hat_se},
                   {"max_cdf_gap", r.max_cdf_gap},
                   {"times", r.times},
                   {"cdf_shift", r.cdf_shift},
                   {"density_abscissa", "s = (h - v_inf t - a_hat) / (Gamma t)^(1/3)"},
                   {"cdf_abscissa", "F(s + epsilon / (2 (Gamma t)^(1/3)))"},
                   {"moment_table", rows_json(r.moment_table)},
                   {"warnings", r.warnings}};
  return j.dump(2);
}

}  // namespace kpzfit
