#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kpzfit/shifts.hpp"

namespace kpzfit {

struct SimConfig {
  Model model = Model::tasep_step;
  double t = 1.0;
  double p = 1.0;   // pasep_step only
  long n = 1;       // tagged label, particle models
  long runs = 1;
  std::uint64_t seed = 0;
  long window = 0;  // 0: ceil(2T + 10 sqrt(T)) with T the simulated horizon
};

struct RunBatch {
  SimConfig config;
  std::vector<long> samples;  // ordered by run index
  long window_warnings = 0;   // runs where the light-cone check failed
};

// Thrown by batch(); carries the failing run index.
class RunError : public std::runtime_error {
 public:
  RunError(long run, const std::string& what);
  long run() const { return run_; }

 private:
  long run_;
};

void validate(const SimConfig& config);
long default_window(double horizon);

struct TasepResult {
  long position;
  bool window_ok;  // tagged particle provably unaffected by the cutoff
};

// x_n(t) for tasep_step (particles 1..n, exact) or tasep_alt (labels
// n-window..n; leading particle free). For tasep_alt the same clocks are
// replayed with the leading particle frozen; by monotone coupling the
// true x_n lies between the two, so equality certifies the window.
TasepResult tasep_run(const SimConfig& config, std::uint64_t run);
// Final positions of every simulated particle, rightmost first.
std::vector<long> tasep_configuration(const SimConfig& config, std::uint64_t run);

// x_n(t / gamma) for pasep_step; labels max(1, n-window)..n+window.
long pasep_run(const SimConfig& config, std::uint64_t run);
std::vector<long> pasep_configuration(const SimConfig& config, std::uint64_t run);

struct Point {
  double u;
  double v;
};
// Nucleations of png_droplet / png_flat in (u, v) = (tau + x, tau - x),
// sorted by u.
std::vector<Point> png_points(const SimConfig& config, std::uint64_t run);
// Longest strictly increasing chain in v of points sorted by u.
long longest_chain(const std::vector<Point>& points);
long png_height(const SimConfig& config, std::uint64_t run);

struct Nucleation {
  double x;
  double tau;
};
// Literal step dynamics; nucleations must be sorted by tau.
long png_dynamics_height(const std::vector<Nucleation>& nucleations, double t);
// Samples every nucleation of the model up to time t (t <= 5) and runs the
// step dynamics.
long png_direct_oracle(const SimConfig& config, std::uint64_t run);

long simulate_one(const SimConfig& config, std::uint64_t run);

// Worker count from KPZFIT_THREADS, else hardware concurrency. Output does
// not depend on it.
unsigned default_workers();
RunBatch batch(const SimConfig& config, unsigned workers = 0);

}  // namespace kpzfit
