#include "kpzfit/cli.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kpzfit/analysis.hpp"
#include "kpzfit/errors.hpp"
#include "kpzfit/fredholm.hpp"
#include "kpzfit/kernels.hpp"
#include "kpzfit/shifts.hpp"
#include "kpzfit/simulate.hpp"

namespace kpzfit::cli {
namespace {

struct Grid {
  double lo, hi, step;
  std::vector<double> points() const {
    std::vector<double> v;
    const long n = std::lround((hi - lo) / step);
    for (long i = 0; i <= n; ++i) v.push_back(lo + step * static_cast<double>(i));
    return v;
  }
};

Grid parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw DomainError("grid must be lo:hi:step, got '" + text + "'");
    }
  }
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
    throw DomainError("grid must be lo:hi:step with step > 0 and hi >= lo");
  return {parts[0], parts[1], parts[2]};
}

LimitLaw parse_law(const std::string& name) {
  if (name == "gue") return LimitLaw::gue();
  if (name == "goe2") return LimitLaw::goe2();
  throw DomainError("law must be gue or goe2");
}

KernelFamily parse_family(std::string name) {
  for (char& c : name)
    if (c == '-') c = '_';
  static const std::map<std::string, KernelFamily> m{
      {"airy2", KernelFamily::airy2},           {"airy1", KernelFamily::airy1},
      {"flat_png", KernelFamily::flat_png},     {"png_droplet", KernelFamily::png_droplet},
      {"tasep_flat", KernelFamily::tasep_flat}, {"tasep_step", KernelFamily::tasep_step},
      {"asym_flat", KernelFamily::asym_flat},   {"asym_step", KernelFamily::asym_step}};
  auto it = m.find(name);
  if (it == m.end()) throw DomainError("unknown kernel family '" + name + "'");
  return it->second;
}

// Output goes to a file when a path is given, else to the command stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw DomainError("cannot open output file '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::vector<long> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open samples file '" + path + "'");
  std::vector<long> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("run,", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DomainError("bad samples line '" + line + "'");
    try {
      out.push_back(std::stol(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw DomainError("bad samples line '" + line + "'");
    }
  }
  if (out.empty()) throw DomainError("samples file '" + path + "' has no rows");
  return out;
}

std::string resolved_config(const CLI::App& sub) {
  std::istringstream all(sub.config_to_str(true, false));
  std::string line, kept;
  while (std::getline(all, line))
    if (line.rfind("threads", 0) != 0) kept += line + '\n';
  return kept;
}

std::string header(const CLI::App& sub) {
  return "# kpzfit " KPZFIT_VERSION " " + sub.get_name() +
         " config=" + config_hash(resolved_config(sub));
}

std::string fmt(double v, int digits = 12) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string config_hash(const std::string& resolved) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : resolved) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-time corrections to Tracy-Widom laws in KPZ models", "kpzfit"};
  app.set_config("--config", "", "flat key = value file; flags override it");
  app.set_version_flag("--version", KPZFIT_VERSION);
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "sample a tagged position or a height");
  std::string sim_model = "tasep-step", sim_out;
  SimConfig sc;
  unsigned threads = 0;
  sim->add_option("--model", sim_model, "tasep-step|tasep-alt|pasep-step|png-droplet|png-flat")->required();
  sim->add_option("--t", sc.t, "time")->required();
  sim->add_option("--n", sc.n, "tagged particle label");
  sim->add_option("--p", sc.p, "right-jump rate (pasep-step)");
  sim->add_option("--runs", sc.runs, "replicas")->required();
  sim->add_option("--seed", sc.seed, "master seed");
  sim->add_option("--window", sc.window, "label window (0: light-cone default)");
  sim->add_option("--threads", threads, "workers (default KPZFIT_THREADS or all cores)");
  sim->add_option("--out", sim_out, "samples CSV");

  // tw
  auto* tw = app.add_subcommand("tw", "limit-law CDF and density on a grid");
  std::string tw_law = "gue", tw_grid, tw_out;
  tw->add_option("--law", tw_law, "gue|goe2");
  tw->add_option("--grid", tw_grid, "lo:hi:step")->required();
  tw->add_option("--out", tw_out, "CSV path");

  // shift
  auto* sh = app.add_subcommand("shift", "shift and scaling constants");
  bool sh_pc = false;
  double sh_apq = NAN, sh_height = NAN, sh_sigma = NAN, sh_p = NAN;
  std::string sh_constants;
  sh->add_flag("--pc", sh_pc, "critical asymmetry p_c");
  sh->add_option("--apq", sh_apq, "a_{p,q} at p");
  sh->add_option("--height", sh_height, "height shift 2 a_{p,q} - 1 at p");
  sh->add_option("--constants", sh_constants, "model whose scaling constants to print (JSON)");
  sh->add_option("--sigma", sh_sigma, "density parameter");
  sh->add_option("--p", sh_p, "right-jump rate");

  // kernels
  auto* ke = app.add_subcommand("kernels", "dump a kernel on an s-grid");
  std::string ke_family = "airy2", ke_grid, ke_out;
  KernelModel km;
  ke->add_option("--family", ke_family, "airy2|airy1|flat-png|png-droplet|tasep-flat|tasep-step|asym-flat|asym-step");
  ke->add_option("--grid", ke_grid, "lo:hi:step")->required();
  ke->add_option("--t", km.t, "time (prelimit families)");
  ke->add_option("--sigma", km.sigma, "density parameter");
  ke->add_option("--a", km.a, "lattice shift");
  ke->add_option("--n", km.n, "tagged label (0: derived)");
  ke->add_option("--out", ke_out, "CSV path");

  // fit
  auto* fi = app.add_subcommand("fit", "experimental fit protocol over several times");
  std::vector<std::string> fi_batches;
  std::string fi_law = "gue", fi_out, fi_shift_fit = "quadratic", fi_variance_fit = "corrected";
  double fi_velocity = 0.0;
  double fi_eps = 1.0;
  bool fi_negate = false;
  fi->add_option("--batch", fi_batches, "t:samples.csv (repeat for each time)")->required();
  fi->add_option("--law", fi_law, "gue|goe2");
  fi->add_option("--epsilon", fi_eps, "raw lattice spacing");
  fi->add_option("--shift-fit", fi_shift_fit, "origin|intercept|quadratic");
  fi->add_option("--variance-fit", fi_variance_fit, "plain|corrected");
  fi->add_option("--velocity", fi_velocity, "known asymptotic velocity (skips its fit)");
  fi->add_flag("--negate", fi_negate, "fit minus the observable (particle positions)");
  fi->add_option("--out", fi_out, "JSON path");

  // report
  auto* re = app.add_subcommand("report", "moment table and CDF gap for one sample");
  std::string re_samples, re_model = "tasep-step", re_law, re_shift = "midpoint", re_csv, re_json;
  double re_t = 0.0, re_sigma = NAN, re_p = NAN;
  long re_n = 0;
  re->add_option("--samples", re_samples, "samples CSV")->required();
  re->add_option("--model", re_model, "model of the samples");
  re->add_option("--t", re_t, "time")->required();
  re->add_option("--n", re_n, "tagged label");
  re->add_option("--sigma", re_sigma, "density parameter (default n/t)");
  re->add_option("--p", re_p, "right-jump rate (pasep-step)");
  re->add_option("--law", re_law, "gue|goe2 (default from model)");
  re->add_option("--shift", re_shift, "midpoint|none");
  re->add_option("--out-csv", re_csv, "table CSV path");
  re->add_option("--out-json", re_json, "report JSON path");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForVersion&) {
      out << KPZFIT_VERSION << '\n';
      return 0;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    err << "# resolved config (" << sub->get_name() << ")\n" << sub->config_to_str(true, false);

    if (sub == sim) {
      sc.model = parse_model(sim_model);
      if (sc.model != Model::pasep_step && sim->count("--p") && sc.p != 1.0)
        throw DomainError("--p applies to pasep-step only");
      const RunBatch b = batch(sc, threads);
      Sink s(sim_out, out);
      *s << header(*sim) << '\n' << "run,observable\n";
      for (std::size_t i = 0; i < b.samples.size(); ++i) *s << i << ',' << b.samples[i] << '\n';
      return 0;
    }
    if (sub == tw) {
      const LimitLaw law = parse_law(tw_law);
      const Grid g = parse_grid(tw_grid);
      Sink s(tw_out, out);
      *s << header(*tw) << '\n' << "s,cdf,pdf\n";
      for (double x : g.points())
        *s << fmt(x, 10) << ',' << fmt(law_cdf(law, x)) << ',' << fmt(law_pdf(law, x)) << '\n';
      return 0;
    }
    if (sub == sh) {
      const int chosen = int(sh_pc) + int(sh->count("--apq") > 0) + int(sh->count("--height") > 0) +
                         int(!sh_constants.empty());
      if (chosen != 1) throw DomainError("shift: choose exactly one of --pc, --apq, --height, --constants");
      if (sh_pc) {
        out << std::fixed << std::setprecision(10) << p_critical() << '\n';
      } else if (sh->count("--apq")) {
        out << fmt(a_pq(sh_apq), 15) << '\n';
      } else if (sh->count("--height")) {
        out << fmt(height_shift(sh_height), 15) << '\n';
      } else {
        const Model m = parse_model(sh_constants);
        std::optional<double> sig, pp;
        if (sh->count("--sigma")) sig = sh_sigma;
        if (sh->count("--p")) pp = sh_p;
        const ScalingConstants k = scaling_constants(m, sig, pp);
        nlohmann::json j{{"model", std::string(model_name(k.model))},
                         {"c1", k.c1},
                         {"c2", k.c2},
                         {"a", k.a},
                         {"eta", k.eta},
                         {"sigma", std::isnan(k.sigma) ? nlohmann::json() : nlohmann::json(k.sigma)},
                         {"p", k.p},
                         {"delta_t", "1 / (c2 t^(1/3))"}};
        out << j.dump(2) << '\n';
      }
      return 0;
    }
    if (sub == ke) {
      km.family = parse_family(ke_family);
      const Grid g = parse_grid(ke_grid);
      Sink s(ke_out, out);
      *s << header(*ke) << '\n' << "s1,s2,value\n";
      if (km.is_prelimit()) {
        PrelimitKernel pk(km);
        for (double a : g.points())
          for (double b : g.points())
            *s << fmt(pk.snap(a)) << ',' << fmt(pk.snap(b)) << ',' << fmt(pk.rescaled(a, b)) << '\n';
      } else {
        for (double a : g.points())
          for (double b : g.points())
            *s << fmt(a, 10) << ',' << fmt(b, 10) << ',' << fmt(k_continuous(km, a, b)) << '\n';
      }
      return 0;
    }
    if (sub == fi) {
      std::vector<TimedSamples> data;
      for (const std::string& spec : fi_batches) {
        const auto colon = spec.find(':');
        if (colon == std::string::npos) throw DomainError("--batch expects t:file");
        double t = 0.0;
        try {
          t = std::stod(spec.substr(0, colon));
        } catch (const std::exception&) {
          throw DomainError("--batch expects t:file, got '" + spec + "'");
        }
        data.emplace_back(t, read_samples(spec.substr(colon + 1)));
      }
      FitOptions opt;
      opt.epsilon = fi_eps;
      opt.negate = fi_negate;
      if (fi->count("--velocity")) opt.velocity = fi_velocity;
      if (fi_shift_fit == "origin") opt.shift_fit = ShiftFit::origin;
      else if (fi_shift_fit == "intercept") opt.shift_fit = ShiftFit::intercept;
      else if (fi_shift_fit == "quadratic") opt.shift_fit = ShiftFit::quadratic;
      else throw DomainError("--shift-fit must be origin, intercept or quadratic");
      if (fi_variance_fit == "plain") opt.variance_fit = VarianceFit::plain;
      else if (fi_variance_fit == "corrected") opt.variance_fit = VarianceFit::corrected;
      else throw DomainError("--variance-fit must be plain or corrected");
      const LawTable table(parse_law(fi_law));
      const FitReport r = fit_protocol(data, table, opt);
      Sink s(fi_out, out);
      *s << fit_report_json(r) << '\n';
      return 0;
    }
    if (sub == re) {
      const Model m = parse_model(re_model);
      const std::vector<long> samples = read_samples(re_samples);
      std::optional<double> sig, pp;
      if (m == Model::tasep_step || m == Model::pasep_step) {
        if (re->count("--sigma")) sig = re_sigma;
        else if (re_n > 0 && re_t > 0) sig = static_cast<double>(re_n) / re_t;
      }
      if (m == Model::pasep_step) pp = re_p;
      const ScalingConstants k = scaling_constants(m, sig, pp);
      std::string law_name = re_law;
      if (law_name.empty())
        law_name = (m == Model::tasep_alt || m == Model::png_flat) ? "goe2" : "gue";
      const LimitLaw law = parse_law(law_name);
      if (re_shift != "midpoint" && re_shift != "none") throw DomainError("--shift must be midpoint or none");
      const LatticeDistribution d = make_distribution(samples, k, re_t, re_n);
      const auto rows = table_report(d, law);
      const double gap = compare_cdf(d, law, re_shift == "midpoint" ? ShiftMode::midpoint : ShiftMode::none);
      const std::string head = header(*re);
      {
        Sink s(re_csv, out);
        *s << head << '\n' << table_csv(rows);
      }
      nlohmann::json j{{"model", std::string(model_name(m))},
                       {"t", re_t},
                       {"n", re_n},
                       {"delta_t", k.delta(re_t)},
                       {"a", k.a},
                       {"law", law_name},
                       {"shift", re_shift},
                       {"max_cdf_gap", gap},
                       {"samples", samples.size()},
                       {"table", nlohmann::json::parse(table_json(rows))},
                       {"config", config_hash(resolved_config(*re))}};
      if (!re_json.empty()) {
        Sink s(re_json, out);
        *s << j.dump(2) << '\n';
      }
      return 0;
    }
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const RangeError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DivergenceError& e) {
    // Divergent series only arise from out-of-domain parameters.
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const AccuracyError& e) {
    err << "accuracy failure: " << e.what() << '\n';
    return 1;
  } catch (const RunError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace kpzfit::cli
