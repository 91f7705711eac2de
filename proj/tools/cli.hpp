#pragma once

// Command-line front end: figure data as CSV plus single-point evaluation.
// All flags are dimensionless (gamma = 1 sets the time unit).

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "stimemit/oracle.hpp"
#include "stimemit/stimemit.hpp"

namespace stimemit::cli {

/// Bad flags or flag combinations; maps to exit status 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumeric = 2;

/// Shortest text that reads back to the same double.
inline std::string fmt(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct GridSpec {
  double start = 0.0;
  double stop = 1.0;
  std::size_t count = 2;
  bool log = false;

  std::vector<double> values() const {
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double f = static_cast<double>(i) / static_cast<double>(count - 1);
      v[i] = log ? std::exp(std::log(start) + f * (std::log(stop) - std::log(start))) : start + f * (stop - start);
    }
    // Pin the ends so that, e.g., a grid ending at 1.0 evaluates at exactly 1.0.
    v.front() = start;
    v.back() = stop;
    return v;
  }

  std::string str() const {
    return fmt(start) + ":" + fmt(stop) + ":" + std::to_string(count) + (log ? ":log" : "");
  }
};

inline double parse_number(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError(std::string("cannot parse ") + what + " '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw UsageError(std::string("cannot parse ") + what + " '" + s + "'");
  return v;
}

/// start:stop:count[:log]
inline GridSpec parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.size() < 3 || parts.size() > 4) throw UsageError("grid must be start:stop:count[:log]");
  GridSpec g;
  g.start = parse_number(parts[0], "grid start");
  g.stop = parse_number(parts[1], "grid stop");
  const double count = parse_number(parts[2], "grid count");
  if (count != std::floor(count) || count < 2 || count > 1e7) throw UsageError("grid count must be an integer >= 2");
  g.count = static_cast<std::size_t>(count);
  if (parts.size() == 4) {
    if (parts[3] != "log" && parts[3] != "lin") throw UsageError("grid spacing must be 'log' or 'lin'");
    g.log = parts[3] == "log";
  }
  if (!(g.start < g.stop)) throw UsageError("grid start must be below stop");
  if (g.log && !(g.start > 0.0)) throw UsageError("log grid requires start > 0");
  return g;
}

struct SweepConfig {
  std::string subcommand;
  std::optional<GridSpec> grid;
  std::vector<unsigned> n_list;
  double gamma = 1.0;
  std::optional<double> tau;
  std::string pulse = "exp";
  std::string pulse_file;
  unsigned precision_bits = ExtendedReal::kDefaultBits;
  std::string out;
  unsigned threads = 1;
  // fig3
  bool short_form = false;
  // fig4
  std::string method = "closed";
  // eval
  unsigned n = 0;
  std::optional<double> t;
  // coherent
  double alpha = 0.0;
  std::optional<double> beta;
  double duration = 1.0;
  // oracle
  std::size_t points = 201;
  // tolerance overrides for the ODE integrators
  std::optional<double> rel_tol;
  std::optional<std::size_t> max_steps;

  ode::Controls controls(ode::Controls base = {}) const {
    if (rel_tol) base.rel_tol = *rel_tol;
    if (max_steps) base.max_steps = *max_steps;
    return base;
  }

  EvalOptions eval_options() const {
    EvalOptions opts;
    opts.sum = sum_options();
    opts.chain.controls = controls();
    return opts;
  }

  SumOptions sum_options() const {
    SumOptions s = EvalOptions{}.sum;
    s.start_bits = precision_bits;
    s.max_bits = std::max(s.max_bits, precision_bits);
    return s;
  }

  /// Config summary for the metadata line; omits the output path and thread
  /// count, which do not affect the data.
  std::string header(const std::string& extra = "") const {
    std::ostringstream os;
    os << "# stimemit " << kVersion << " " << subcommand;
    if (grid) os << " grid=" << grid->str();
    if (!n_list.empty()) {
      os << " n_list=";
      for (std::size_t i = 0; i < n_list.size(); ++i) os << (i ? "," : "") << n_list[i];
    }
    os << " gamma=" << fmt(gamma) << " precision_bits=" << precision_bits;
    if (rel_tol) os << " rel_tol=" << fmt(*rel_tol);
    if (max_steps) os << " max_steps=" << *max_steps;
    if (!extra.empty()) os << " " << extra;
    return os.str();
  }
};

/// Runs f(0..count-1) on `threads` workers. Results come back in index order;
/// the lowest-index failure is rethrown.
template <typename Result, typename F>
std::vector<Result> parallel_map(std::size_t count, unsigned threads, F&& f) {
  std::vector<std::optional<Result>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  auto work = [&](std::size_t worker, std::size_t stride) {
    for (std::size_t i = worker; i < count; i += stride) {
      try {
        slots[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t stride = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < stride; ++w) pool.emplace_back(work, w, stride);
  work(0, stride);
  for (auto& th : pool) th.join();
  std::vector<Result> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

inline pulses::PulseShape load_pulse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open pulse file '" + path + "'");
  return pulses::read_pulse_table(in);
}

/// The drive pulse selected by --pulse; `length` is tau (exp) or T (square).
inline pulses::PulseShape make_pulse(const SweepConfig& c, double length) {
  if (c.pulse == "exp") return pulses::PulseShape::exponential(length);
  if (c.pulse == "square") return pulses::PulseShape::square(length);
  if (c.pulse == "file") {
    if (c.pulse_file.empty()) throw UsageError("--pulse file requires --pulse-file PATH");
    return load_pulse_file(c.pulse_file);
  }
  throw UsageError("unknown pulse '" + c.pulse + "' (exp|square|file)");
}

inline void require_n_list(const SweepConfig& c) {
  if (c.n_list.empty()) throw UsageError(c.subcommand + " requires --n-list (e.g. --n-list 1,4,16,64)");
}

inline void cmd_fig2(const SweepConfig& c, std::ostream& out) {
  require_n_list(c);
  if (c.pulse != "exp") throw UsageError("fig2 sweeps the exponential pulse length; use --pulse exp");
  const std::vector<double> taus = (c.grid ? *c.grid : GridSpec{0.01, 10.0, 200, true}).values();
  const std::size_t nn = c.n_list.size();
  const EvalOptions opts = c.eval_options();
  auto rows = parallel_map<std::string>(taus.size() * nn, c.threads, [&](std::size_t k) {
    const double x = taus[k / nn];
    const unsigned n = c.n_list[k % nn];
    const double tau = x / c.gamma;
    StimResult r = pstim_exact(DriveSpec{n, pulses::PulseShape::exponential(tau), c.gamma}, asymptotic, opts);
    return fmt(x) + "," + std::to_string(n) + "," + fmt(r.p_stim) + "," + fmt(pstim_sin2(n, tau, c.gamma));
  });
  SweepConfig shown = c;
  if (!shown.grid) shown.grid = GridSpec{0.01, 10.0, 200, true};
  out << shown.header("pulse=exp") << "\n";
  out << "gamma_tau,n,p_stim_exact,p_stim_sin2\n";
  for (const auto& row : rows) out << row << "\n";
}

inline void cmd_fig3(const SweepConfig& c, std::ostream& out, std::ostream& err) {
  require_n_list(c);
  const double length = c.tau.value_or(0.01) / c.gamma;
  const pulses::PulseShape pulse = make_pulse(c, length);
  const double span = c.pulse == "file" ? pulse.support_end() : 10.0 * length;
  const GridSpec g = c.grid ? *c.grid : GridSpec{0.0, span * c.gamma, 201, false};
  const std::vector<double> gamma_t = g.values();
  if (gamma_t.front() < 0.0) throw UsageError("fig3 time grid must start at t >= 0");
  std::vector<double> times(gamma_t.size());
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = gamma_t[i] / c.gamma;

  const EvalOptions opts = c.eval_options();
  auto series = parallel_map<std::vector<StimResult>>(c.n_list.size(), c.threads, [&](std::size_t k) {
    DriveSpec drive{c.n_list[k], pulse, c.gamma};
    if (c.short_form) return rabi_timeseries_short(drive, times, opts.sum);
    return pstim_timeseries(drive, times, opts);
  });
  for (const auto& s : series) {
    if (!s.empty() && !s.front().warnings.empty()) err << "warning: " << s.front().warnings.front() << "\n";
  }
  SweepConfig shown = c;
  shown.grid = g;
  std::string extra = "pulse=" + pulse.describe() + " mode=" + (c.short_form ? "short" : "exact");
  out << shown.header(extra) << "\n";
  out << "gamma_t,n,p_stim,p0,sum\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t k = 0; k < c.n_list.size(); ++k) {
      const StimResult& r = series[k][i];
      const double p0 = r.p0.value_or(0.0);
      out << fmt(gamma_t[i]) << "," << c.n_list[k] << "," << fmt(r.p_stim) << "," << fmt(p0) << ","
          << fmt(r.p_stim + p0) << "\n";
    }
  }
}

inline void cmd_fig4(const SweepConfig& c, std::ostream& out) {
  scatter::ProjectionMethod method;
  if (c.method == "closed") {
    method = scatter::ProjectionMethod::ClosedForm;
  } else if (c.method == "quadrature") {
    method = scatter::ProjectionMethod::Quadrature;
  } else {
    throw UsageError("unknown method '" + c.method + "' (closed|quadrature)");
  }
  const GridSpec g = c.grid ? *c.grid : GridSpec{0.05, 2.0, 196, false};
  if (!(g.start > 0.0)) throw UsageError("fig4 grid must have tau' > 0");
  const std::vector<double> xs = g.values();
  auto values = parallel_map<double>(xs.size(), c.threads,
                                     [&](std::size_t i) { return scatter::projection(xs[i] / c.gamma, c.gamma, method); });
  SweepConfig shown = c;
  shown.grid = g;
  out << shown.header("drive_gamma_tau=1/3 method=" + c.method) << "\n";
  out << "gamma_tau_prime,projection\n";
  for (std::size_t i = 0; i < xs.size(); ++i) out << fmt(xs[i]) << "," << fmt(values[i]) << "\n";
}

inline void cmd_eval(const SweepConfig& c, std::ostream& out, std::ostream& err) {
  if (!c.tau && c.pulse != "file") throw UsageError("eval requires --tau (--gamma-tau)");
  const pulses::PulseShape pulse = make_pulse(c, c.tau.value_or(1.0) / c.gamma);
  DriveSpec drive{c.n, pulse, c.gamma};
  const EvalOptions opts = c.eval_options();
  StimResult r = c.t ? pstim_exact(drive, *c.t / c.gamma, opts) : pstim_exact(drive, asymptotic, opts);
  for (const auto& w : r.warnings) err << "warning: " << w << "\n";
  out << "n=" << c.n << " pulse=" << pulse.describe() << " t=" << (c.t ? fmt(*c.t) : std::string("asymptotic"))
      << " p_stim=" << fmt(r.p_stim);
  if (r.p0) out << " p0=" << fmt(*r.p0);
  out << " max_term=" << r.max_term_magnitude.str(6) << " precision_bits_used=" << r.precision_bits_used << "\n";
}

inline void cmd_coherent(const SweepConfig& c, std::ostream& out) {
  if (!(c.duration > 0.0)) throw UsageError("--duration must be positive");
  const double width = c.duration / c.gamma;
  // Amplitude densities are given in units of sqrt(gamma).
  const double root_gamma = std::sqrt(c.gamma);
  const double beta = c.beta.value_or(c.alpha);
  const auto drive =
      coherent::CoherentDrive::square(Complex{c.alpha * root_gamma, 0.0}, Complex{beta * root_gamma, 0.0}, width, c.gamma);
  const GridSpec g = c.grid ? *c.grid : GridSpec{0.0, c.duration, 101, false};
  if (g.start < 0.0) throw UsageError("coherent time grid must start at t >= 0");
  const std::vector<double> gamma_t = g.values();
  std::vector<double> times(gamma_t.size());
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = gamma_t[i] / c.gamma;
  auto amps = coherent::evolve_two_level(drive, times, c.controls({1e-10, 1e-14, std::size_t{1} << 20}));
  SweepConfig shown = c;
  shown.grid = g;
  out << shown.header("alpha=" + fmt(c.alpha) + " beta=" + fmt(beta) + " duration=" + fmt(c.duration)) << "\n";
  out << "gamma_t,p_e,p_g,overlap_mag\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    out << fmt(gamma_t[i]) << "," << fmt(amps[i].p_e()) << "," << fmt(amps[i].p_g()) << ","
        << fmt(amps[i].overlap_magnitude()) << "\n";
  }
}

/// Cross-checks of the chain evaluator and the projection against the
/// brute-force oracles and closed forms.
inline void cmd_oracle(const SweepConfig& c, std::ostream& out) {
  if (c.points < 3) throw UsageError("--points must be at least 3");
  struct Check {
    std::string name;
    std::size_t p;
    double x;
    double reference;
    double value;
  };
  std::vector<std::function<Check()>> jobs;
  const double gamma = c.gamma;
  for (std::size_t p : {0u, 1u}) {
    jobs.emplace_back([=] {
      const double tau = 0.5 / gamma;
      auto pulse = pulses::PulseShape::exponential(tau);
      const double t[] = {20.0 * tau};
      return Check{"bruteforce_exp", p, 0.5, oracle::fp_bruteforce(p, t[0], pulse, gamma, c.points),
                   fp_general(p, t, pulse, gamma, Parity::Odd).front().to_double()};
    });
    jobs.emplace_back([=] {
      const double width = 1.0 / gamma;
      auto pulse = pulses::PulseShape::square(width);
      const double t[] = {width};
      return Check{"bruteforce_square", p, 1.0, oracle::fp_bruteforce(p, width, pulse, gamma, c.points),
                   fp_general(p, t, pulse, gamma, Parity::Odd).front().to_double()};
    });
  }
  for (double x : {0.01, 0.1, 1.0, 10.0}) {
    for (std::size_t p = 0; p <= 10; ++p) {
      jobs.emplace_back([=] {
        const double tau = x / gamma;
        const double t[] = {40.0 * tau};
        auto pulse = pulses::PulseShape::exponential(tau);
        return Check{"closed_form", p, x, fp_exponential_limit(p, tau, gamma).to_double(),
                     fp_general(p, t, pulse, gamma, Parity::Odd).front().to_double()};
      });
    }
  }
  jobs.emplace_back([=] {
    const double tp = 1.0 / (3.0 * gamma);
    return Check{"projection", 0, 1.0 / 3.0, oracle::projection_bruteforce(tp, gamma, std::max<std::size_t>(c.points, 100)),
                 scatter::projection(tp, gamma)};
  });
  auto checks = parallel_map<Check>(jobs.size(), c.threads, [&](std::size_t i) { return jobs[i](); });
  SweepConfig shown = c;
  out << shown.header("points=" + std::to_string(c.points)) << "\n";
  out << "check,p,gamma_tau,reference,value,rel_error\n";
  for (const auto& k : checks) {
    out << k.name << "," << k.p << "," << fmt(k.x) << "," << fmt(k.reference) << "," << fmt(k.value) << ","
        << fmt(std::fabs(k.value / k.reference - 1.0)) << "\n";
  }
}

inline void write_output(const SweepConfig& c, const std::string& text, std::ostream& stdout_stream) {
  if (c.out.empty() || c.out == "-") {
    stdout_stream << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary | std::ios::trunc);
  if (!f) throw UsageError("cannot open output file '" + c.out + "'");
  f << text;
  f.flush();
  if (!f) throw UsageError("failed writing output file '" + c.out + "'");
}

/// Parses argv and runs one subcommand. Returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stimulated emission of a waveguide-coupled two-level atom", "stimemit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  SweepConfig c;
  std::string grid_text;

  auto common = [&](CLI::App* sub, bool with_grid) {
    if (with_grid) sub->add_option("--grid", grid_text, "start:stop:count[:log]");
    sub->add_option("--gamma", c.gamma, "coupling rate (sets the time unit)")->check(CLI::PositiveNumber);
    sub->add_option("--precision-bits", c.precision_bits, "starting mantissa width for series sums")
        ->check(CLI::Range(64u, 8192u));
    sub->add_option("--out", c.out, "output path (default stdout)");
    sub->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1u, 256u));
    sub->add_option("--rel-tol", c.rel_tol, "ODE relative tolerance override")->check(CLI::Range(1e-14, 1e-2));
    sub->add_option("--max-steps", c.max_steps, "ODE step limit override")->check(CLI::PositiveNumber);
  };
  auto pulse_opts = [&](CLI::App* sub) {
    sub->add_option("--tau,--gamma-tau", c.tau, "pulse length gamma*tau (width gamma*T for square)");
    sub->add_option("--pulse", c.pulse, "exp|square|file")->check(CLI::IsMember({"exp", "square", "file"}));
    sub->add_option("--pulse-file", c.pulse_file, "two-column 'time amplitude' table");
  };

  auto* fig2 = app.add_subcommand("fig2", "P_stim against gamma*tau for each n");
  common(fig2, true);
  fig2->add_option("--n-list", c.n_list, "photon numbers a,b,c")->delimiter(',');
  fig2->add_option("--pulse", c.pulse, "exp")->check(CLI::IsMember({"exp", "square", "file"}));

  auto* fig3 = app.add_subcommand("fig3", "time-resolved P_stim and P_0");
  common(fig3, true);
  pulse_opts(fig3);
  fig3->add_option("--n-list", c.n_list, "photon numbers a,b,c (suggested 1,4,16,64)")->delimiter(',');
  fig3->add_flag("--short", c.short_form, "use the short-pulse closed forms instead of the full chain");

  auto* fig4 = app.add_subcommand("fig4", "projection onto a two-photon mode of width tau'");
  common(fig4, true);
  fig4->add_option("--method", c.method, "closed|quadrature");

  auto* eval = app.add_subcommand("eval", "single-point P_stim");
  common(eval, false);
  pulse_opts(eval);
  eval->add_option("--n", c.n, "photon number")->required();
  eval->add_option("--t", c.t, "evaluation time gamma*t (default asymptotic)");

  auto* coh = app.add_subcommand("coherent", "two-level atom under a square coherent pulse");
  common(coh, true);
  coh->add_option("--alpha", c.alpha, "amplitude density in units of sqrt(gamma)");
  coh->add_option("--beta", c.beta, "reference amplitude density (default alpha)");
  coh->add_option("--duration", c.duration, "pulse duration gamma*T");

  auto* orc = app.add_subcommand("oracle", "chain evaluator against brute-force and closed forms");
  common(orc, false);
  orc->add_option("--points", c.points, "brute-force grid points per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  c.subcommand = chosen->get_name();
  try {
    if (!grid_text.empty()) c.grid = parse_grid(grid_text);
    std::sort(c.n_list.begin(), c.n_list.end());
    c.n_list.erase(std::unique(c.n_list.begin(), c.n_list.end()), c.n_list.end());
    std::ostringstream buffer;
    if (c.subcommand == "fig2") {
      cmd_fig2(c, buffer);
    } else if (c.subcommand == "fig3") {
      cmd_fig3(c, buffer, err);
    } else if (c.subcommand == "fig4") {
      cmd_fig4(c, buffer);
    } else if (c.subcommand == "eval") {
      cmd_eval(c, buffer, err);
    } else if (c.subcommand == "coherent") {
      cmd_coherent(c, buffer);
    } else {
      cmd_oracle(c, buffer);
    }
    write_output(c, buffer.str(), out);
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << " (estimate " << e.estimate() << ")\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace stimemit::cli
