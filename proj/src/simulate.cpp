#include "kpzfit/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

#include "kpzfit/errors.hpp"
#include "kpzfit/rng.hpp"

namespace kpzfit {
namespace {

// Substream ids; particle clocks use their label.
constexpr std::uint32_t kPaseSub = 0x80000001u;
constexpr std::uint32_t kPngSub = 0x80000002u;
constexpr std::uint32_t kOracleSub = 0x80000003u;

bool is_particle(Model m) {
  return m == Model::tasep_step || m == Model::tasep_alt || m == Model::pasep_step;
}

// One particle following a predecessor trajectory (initial position y0,
// jump times prev). Writes its own jump times to out.
long follow(Stream& clock, long x0, double t, bool free, long y0,
            const std::vector<double>& prev, std::vector<double>& out) {
  out.clear();
  long x = x0;
  std::size_t seen = 0;
  double time = 0.0;
  while (true) {
    time += clock.exponential();
    if (time > t) break;
    if (!free) {
      while (seen < prev.size() && prev[seen] <= time) ++seen;
      if (y0 + static_cast<long>(seen) == x + 1) continue;
    }
    ++x;
    out.push_back(time);
  }
  return x;
}

struct Window {
  long first;
  long last;
};

Window tasep_window(const SimConfig& c) {
  if (c.model == Model::tasep_step) return {1, c.n};
  const long w = c.window > 0 ? c.window : default_window(c.t);
  return {c.n - w, c.n};
}

long initial_position(Model m, long label) {
  return m == Model::tasep_alt ? -2 * label : -label;
}

// Returns final positions; certifies the tagged particle when asked.
std::vector<long> run_tasep(const SimConfig& c, std::uint64_t run, bool* window_ok) {
  const Window win = tasep_window(c);
  std::vector<long> pos;
  pos.reserve(static_cast<std::size_t>(win.last - win.first + 1));
  std::vector<double> prev, cur, prev_b, cur_b;
  long y0 = 0;
  bool coupled = c.model != Model::tasep_alt;  // step IC has a true first particle
  for (long k = win.first; k <= win.last; ++k) {
    const long x0 = initial_position(c.model, k);
    const bool lead = (k == win.first);
    Stream clock(c.seed, run, static_cast<std::uint32_t>(k));
    const long x = follow(clock, x0, c.t, lead, y0, prev, cur);
    if (!coupled) {
      // Lower bound: leading particle frozen at its start.
      if (lead) {
        cur_b.clear();
      } else {
        Stream replay(c.seed, run, static_cast<std::uint32_t>(k));
        follow(replay, x0, c.t, false, y0, prev_b, cur_b);
      }
      if (!lead && cur_b == cur) coupled = true;
      std::swap(prev_b, cur_b);
    }
    pos.push_back(x);
    std::swap(prev, cur);
    y0 = x0;
  }
  if (window_ok) *window_ok = coupled;
  return pos;
}

Window pasep_window(const SimConfig& c) {
  const double horizon = c.t / (2.0 * c.p - 1.0);
  const long w = c.window > 0 ? c.window : default_window(horizon);
  return {std::max(1L, c.n - w), c.n + w};
}

std::vector<long> run_pasep(const SimConfig& c, std::uint64_t run) {
  const double horizon = c.t / (2.0 * c.p - 1.0);
  const auto [first, last] = pasep_window(c);
  const long count = last - first + 1;
  std::vector<long> pos(static_cast<std::size_t>(count));
  for (long k = first; k <= last; ++k) pos[k - first] = -k;
  Stream rng(c.seed, run, kPaseSub);
  const double rate = static_cast<double>(count);
  const std::uint64_t right_cut = static_cast<std::uint64_t>(c.p * 4294967296.0);
  double time = 0.0;
  while (true) {
    time += rng.exponential(rate);
    if (time > horizon) break;
    const std::uint64_t r = rng.next_u64();
    const std::size_t i = static_cast<std::size_t>(((r >> 32) * static_cast<std::uint64_t>(count)) >> 32);
    if ((r & 0xffffffffu) < right_cut) {
      if (i == 0 || pos[i - 1] > pos[i] + 1) ++pos[i];
    } else {
      if (i + 1 == pos.size() || pos[i + 1] < pos[i] - 1) --pos[i];
    }
  }
  return pos;
}

}  // namespace

RunError::RunError(long run, const std::string& what)
    : std::runtime_error("run " + std::to_string(run) + ": " + what), run_(run) {}

long default_window(double horizon) {
  return static_cast<long>(std::ceil(2.0 * horizon + 10.0 * std::sqrt(horizon)));
}

void validate(const SimConfig& c) {
  if (!(c.t >= 0.0) || !std::isfinite(c.t)) throw DomainError("t must be >= 0");
  if (c.runs < 1) throw DomainError("runs must be >= 1");
  if (c.window < 0) throw DomainError("window must be >= 0");
  if (is_particle(c.model) && c.n < 1) throw DomainError("n must be >= 1");
  if (c.model == Model::pasep_step) {
    if (!(c.p > 0.5 && c.p <= 1.0)) throw DomainError("p must lie in (1/2, 1]");
  }
  if (c.model == Model::pasep_step && c.window > 0 &&
      c.window < default_window(c.t / (2.0 * c.p - 1.0)) / 4)
    warn("pasep window is far below the light-cone bound");
}

TasepResult tasep_run(const SimConfig& c, std::uint64_t run) {
  if (c.model != Model::tasep_step && c.model != Model::tasep_alt)
    throw DomainError("tasep_run: model must be tasep-step or tasep-alt");
  bool ok = true;
  const std::vector<long> pos = run_tasep(c, run, &ok);
  return {pos.back(), ok};
}

std::vector<long> tasep_configuration(const SimConfig& c, std::uint64_t run) {
  if (c.model != Model::tasep_step && c.model != Model::tasep_alt)
    throw DomainError("tasep_configuration: model must be tasep-step or tasep-alt");
  return run_tasep(c, run, nullptr);
}

long pasep_run(const SimConfig& c, std::uint64_t run) {
  if (c.model != Model::pasep_step) throw DomainError("pasep_run: model must be pasep-step");
  const std::vector<long> pos = run_pasep(c, run);
  return pos[static_cast<std::size_t>(c.n - pasep_window(c).first)];
}

std::vector<long> pasep_configuration(const SimConfig& c, std::uint64_t run) {
  if (c.model != Model::pasep_step) throw DomainError("pasep_configuration: model must be pasep-step");
  return run_pasep(c, run);
}

std::vector<Point> png_points(const SimConfig& c, std::uint64_t run) {
  Stream rng(c.seed, run, kPngSub);
  std::vector<Point> pts;
  const double t = c.t;
  if (t <= 0.0) return pts;
  if (c.model == Model::png_droplet) {
    // [0, t]^2 at unit intensity: u-gaps Exp(t), v uniform.
    for (double u = rng.exponential(t); u <= t; u += rng.exponential(t))
      pts.push_back({u, t * rng.uniform()});
  } else if (c.model == Model::png_flat) {
    // Triangle u, v <= t, u + v >= 0, by thinning the square [-t, t]^2.
    for (double u = -t + rng.exponential(2.0 * t); u <= t; u += rng.exponential(2.0 * t)) {
      const double v = -t + 2.0 * t * rng.uniform();
      if (u + v >= 0.0) pts.push_back({u, v});
    }
  } else {
    throw DomainError("png_points: model must be png-droplet or png-flat");
  }
  return pts;
}

long longest_chain(const std::vector<Point>& points) {
  std::vector<double> piles;
  for (const Point& p : points) {
    auto it = std::lower_bound(piles.begin(), piles.end(), p.v);
    if (it == piles.end()) piles.push_back(p.v); else *it = p.v;
  }
  return static_cast<long>(piles.size());
}

long png_height(const SimConfig& c, std::uint64_t run) {
  return longest_chain(png_points(c, run));
}

long png_dynamics_height(const std::vector<Nucleation>& nucs, double t) {
  struct Step {
    double x0, tau0;
    int dir;  // -1 up-step (moves left), +1 down-step (moves right)
    double at(double tau) const { return x0 + dir * (tau - tau0); }
  };
  std::vector<Step> steps;
  double now = 0.0;
  std::size_t next = 0;
  while (true) {
    double t_coll = t;
    std::size_t hit = steps.size();
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
      if (steps[i].dir == 1 && steps[i + 1].dir == -1) {
        const double tc = now + 0.5 * (steps[i + 1].at(now) - steps[i].at(now));
        if (tc < t_coll) {
          t_coll = tc;
          hit = i;
        }
      }
    }
    const double t_nuc = next < nucs.size() ? nucs[next].tau : t;
    if (hit < steps.size() && t_coll <= t_nuc) {
      now = t_coll;
      steps.erase(steps.begin() + static_cast<long>(hit), steps.begin() + static_cast<long>(hit) + 2);
      continue;
    }
    if (next < nucs.size() && t_nuc <= t) {
      now = t_nuc;
      const Nucleation& nu = nucs[next++];
      auto it = std::find_if(steps.begin(), steps.end(),
                             [&](const Step& s) { return s.at(now) > nu.x; });
      it = steps.insert(it, Step{nu.x, now, 1});
      steps.insert(it, Step{nu.x, now, -1});
      continue;
    }
    break;
  }
  long h = 0;
  for (const Step& s : steps)
    if (s.at(t) < 0.0) h += (s.dir == -1) ? 1 : -1;
  return h;
}

long png_direct_oracle(const SimConfig& c, std::uint64_t run) {
  if (c.t > 5.0) throw DomainError("png_direct_oracle: t must be <= 5");
  Stream rng(c.seed, run, kOracleSub);
  const double t = c.t;
  std::vector<Nucleation> nucs;
  if (t > 0.0) {
    // Intensity 2 in (x, tau); the region is bounded by |x| <= t + 1 for the
    // flat case and |x| <= tau for the droplet.
    const double half = (c.model == Model::png_droplet) ? t : t + 1.0;
    const double rate = 2.0 * 2.0 * half;
    for (double tau = rng.exponential(rate); tau <= t; tau += rng.exponential(rate)) {
      const double x = -half + 2.0 * half * rng.uniform();
      if (c.model == Model::png_droplet && std::fabs(x) > tau) continue;
      nucs.push_back({x, tau});
    }
  }
  return png_dynamics_height(nucs, t);
}

long simulate_one(const SimConfig& c, std::uint64_t run) {
  switch (c.model) {
    case Model::tasep_step:
    case Model::tasep_alt:
      return tasep_run(c, run).position;
    case Model::pasep_step:
      return pasep_run(c, run);
    case Model::png_droplet:
    case Model::png_flat:
      return png_height(c, run);
  }
  throw DomainError("simulate_one: unknown model");
}

unsigned default_workers() {
  if (const char* env = std::getenv("KPZFIT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

RunBatch batch(const SimConfig& c, unsigned workers) {
  validate(c);
  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<long>(workers, c.runs));
  RunBatch out{c, std::vector<long>(static_cast<std::size_t>(c.runs)), 0};
  std::vector<char> flags(static_cast<std::size_t>(c.runs), 0);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<long> error_run(workers, -1);

  auto work = [&](unsigned w) {
    for (long r = w; r < c.runs; r += workers) {
      try {
        if (c.model == Model::tasep_alt) {
          const TasepResult res = tasep_run(c, static_cast<std::uint64_t>(r));
          out.samples[r] = res.position;
          flags[r] = res.window_ok ? 0 : 1;
        } else {
          out.samples[r] = simulate_one(c, static_cast<std::uint64_t>(r));
        }
      } catch (...) {
        errors[w] = std::current_exception();
        error_run[w] = r;
        return;
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  long first_bad = -1;
  std::exception_ptr first_err;
  for (unsigned w = 0; w < workers; ++w)
    if (errors[w] && (first_bad < 0 || error_run[w] < first_bad)) {
      first_bad = error_run[w];
      first_err = errors[w];
    }
  if (first_err) {
    try {
      std::rethrow_exception(first_err);
    } catch (const std::exception& e) {
      throw RunError(first_bad, e.what());
    }
  }
  for (char f : flags) out.window_warnings += f;
  if (out.window_warnings > 0)
    warn(std::to_string(out.window_warnings) +
         " runs: truncation window may influence the tagged particle");
  return out;
}

}  // namespace kpzfit
