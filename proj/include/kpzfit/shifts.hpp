#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "kpzfit/specfun.hpp"

namespace kpzfit {

enum class Model { tasep_step, tasep_alt, pasep_step, png_droplet, png_flat };

std::string_view model_name(Model m);  // "tasep-step", ...
Model parse_model(std::string_view name);  // accepts '-' or '_'

// Macroscopic constants of one model. The observable is an integer h
// (height) or x (tagged particle position); rescale() maps it to I_t.
struct ScalingConstants {
  Model model;
  double c1;
  double c2;
  double a;
  double eta;
  double sigma;  // NaN where not applicable
  double p;      // 1 for totally asymmetric models

  double delta(double t) const;
  // Deterministic center: c1 t for heights, the position X(s=0, a=0)
  // for particle models (needs the tagged label n).
  double center(double t, long n = 0) const;
  bool particle_observable() const;
  // (h - center - a) delta for heights, (center - a - x) delta for positions.
  double rescale(long observable, double t, long n = 0) const;
};

// Domain errors on sigma and p.
ScalingConstants scaling_constants(Model model,
                                   std::optional<double> sigma = std::nullopt,
                                   std::optional<double> p = std::nullopt);

// sum_{l>=1} q^l / (p^l - q^l), q = 1 - p. Exactly 0 at p = 1.
double a_pq(double p);
double p_critical();
double height_shift(double p);
// (gamma_E - ln 2 beta) / (2 beta) + 1/4, beta = 2p - 1 in (0, 0.2].
double wasep_expansion(double beta);

struct GForms {
  double g_pochhammer;  // sum_k (1 - (tau^k; tau)_inf)
  double g_simple;      // sum_l tau^l / (1 - tau^l)
};
GForms g_forms(double tau, const QContext& ctx);

}  // namespace kpzfit
