#include "specquant/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "specquant/experiments.hpp"
#include "specquant/mmse.hpp"
#include "specquant/quantizer.hpp"
#include "specquant/sampler.hpp"

#ifndef SPECQUANT_VERSION
#define SPECQUANT_VERSION "0.0.0-unknown"
#endif

namespace specquant::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Bad input supplied by the user: reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::optional<long> n;
  std::optional<std::string> snr_db;  // number or "inf"
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out;
  std::optional<std::string> config;
  std::optional<double> epsilon_scale;
};

void add_common(CLI::App& cmd, CommonFlags& f, const std::string& default_out) {
  f.out = default_out;
  cmd.add_option("--n", f.n, "observation window length N");
  cmd.add_option("--snr-db", f.snr_db, "signal-to-noise ratio in dB, or inf");
  cmd.add_option("--trials", f.trials, "Monte Carlo trials per grid point");
  cmd.add_option("--seed", f.seed, "master seed");
  cmd.add_option("--threads", f.threads, "worker threads (default: SPECQUANT_THREADS, else all cores)");
  cmd.add_option("--out", f.out, "output path")->capture_default_str();
  cmd.add_option("--config", f.config, "JSON config file; flags override its values");
  cmd.add_option("--epsilon-scale", f.epsilon_scale, "multiplier on the default noise radius");
}

double parse_snr(const std::string& text) {
  if (text == "inf" || text == "+inf") return kNoiseless;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("--snr-db expects a number or inf, got '" + text + "'");
  }
}

unsigned env_threads() {
  const char* env = std::getenv("SPECQUANT_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t used = 0;
    const long v = std::stol(env, &used);
    if (used != std::string(env).size() || v < 0) throw std::invalid_argument(env);
    return static_cast<unsigned>(v);
  } catch (const std::exception&) {
    throw UsageError(fmt::format("SPECQUANT_THREADS must be a non-negative integer, got '{}'", env));
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("{}: invalid JSON: {}", path, e.what()));
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

/// fig3.csv -> fig3.<suffix>
std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  p.replace_extension();
  return p.string() + "." + suffix;
}

void write_provenance(const std::string& out, const std::string& command, json config, json seeds) {
  json j = {{"command", command},
            {"version", version()},
            {"config", std::move(config)},
            {"seeds", std::move(seeds)}};
  write_text(sibling(out, "provenance.json"), j.dump(2) + "\n");
}

SweepConfig resolve_sweep(const CommonFlags& f) {
  SweepConfig c;
  if (f.config) {
    try {
      apply_json(read_json_file(*f.config), c);
    } catch (const std::invalid_argument& e) {
      throw UsageError(fmt::format("{}: {}", *f.config, e.what()));
    }
  }
  if (f.n) c.n = *f.n;
  if (f.snr_db) c.snr_db = parse_snr(*f.snr_db);
  if (f.trials) c.trials = *f.trials;
  if (f.seed) c.master_seed = *f.seed;
  if (f.epsilon_scale) c.epsilon_scale = *f.epsilon_scale;
  if (f.threads) {
    c.threads = *f.threads;
  } else if (!f.config || c.threads == 0) {
    if (const unsigned t = env_threads(); t > 0) c.threads = t;
  }
  return c;
}

void validate_or_usage(const SweepConfig& c) {
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

int finish_sweep(const SweepConfig& c, const SweepResult& result, const std::string& out,
                 const std::string& command) {
  write_text(out, sweep_csv(result));
  json cfg = c;
  write_provenance(out, command, cfg,
                   {{"master", c.master_seed},
                    {"trial_seed", "derive_seed(master, {sweep tag, bits(grid value), trial index})"}});
  const int total = result.total_trials();
  const int failed = result.total_failures();
  fmt::print(stderr, "wrote {} ({} trials, {} solver failures)\n", out, total, failed);
  if (total > 0 && static_cast<double>(failed) > 0.2 * static_cast<double>(total)) {
    fmt::print(stderr, "error: solver failure rate {:.1f}% exceeds 20%\n",
               100.0 * failed / static_cast<double>(total));
    return kFailure;
  }
  return kOk;
}

ProgressFn progress_log(const char* name) {
  return [name](const SweepPoint& p) {
    fmt::print(stderr, "{} = {}: e_mmse = {:.4g} (se {:.2g}), e_blind = {:.4g} (se {:.2g}), failures {}/{}\n",
               name, p.value, p.e_mmse_mean, p.e_mmse_se, p.e_blind_mean, p.e_blind_se, p.failures,
               p.trials);
  };
}

/// Reads complex samples from CSV with columns re,im. A header line is
/// optional; blank lines are skipped.
cvec read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::vector<cplx> values;
  std::string line;
  int line_no = 0;
  auto parse_double = [&](const std::string& field) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    const auto rest = field.find_first_not_of(" \t\r", used);
    if (used == 0 || rest != std::string::npos || !std::isfinite(v))
      throw UsageError(fmt::format("{}:{}: malformed number '{}'", path, line_no, field));
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (values.empty() && line_no == 1 && line.find_first_of("0123456789") == std::string::npos) {
      if (line != "re,im") throw UsageError(fmt::format("{}:1: expected header 're,im'", path));
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw UsageError(fmt::format("{}:{}: expected two comma-separated columns", path, line_no));
    values.emplace_back(parse_double(line.substr(0, comma)), parse_double(line.substr(comma + 1)));
  }
  if (values.empty()) throw UsageError(path + ": no samples");
  cvec y(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) y(static_cast<Eigen::Index>(i)) = values[i];
  return y;
}

std::string vector_csv(const cvec& g, Eigen::Index first_index) {
  std::string out = "t,re,im\n";
  for (Eigen::Index i = 0; i < g.size(); ++i)
    out += fmt::format("{},{},{}\n", first_index + i, g(i).real(), g(i).imag());
  return out;
}

std::string samples_csv(const cvec& y) {
  std::string out = "re,im\n";
  for (Eigen::Index i = 0; i < y.size(); ++i) out += fmt::format("{},{}\n", y(i).real(), y(i).imag());
  return out;
}

std::string dual_trace_csv(const cvec& q, int grid_size) {
  const rvec mags = dual_polynomial_grid(q, grid_size).cwiseAbs();
  std::string out = "xi,abs_Q\n";
  for (int k = 0; k < grid_size; ++k) out += fmt::format("{},{}\n", grid_frequency(k, grid_size), mags(k));
  return out;
}

/// Spectrum used to illustrate the dual certificate: two lines and a band.
SpectralModel demo_dual_model(double pc) {
  ModelTemplate tmpl;
  tmpl.band = {0.2, 0.3, 0.0};
  return continuous_power_model(tmpl, pc);
}

SpectralModel load_model(const std::string& path) {
  try {
    return spectral_model_from_json(read_json_file(path));
  } catch (const std::invalid_argument& e) {
    throw UsageError(fmt::format("{}: {}", path, e.what()));
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("{}: {}", path, e.what()));
  }
}

}  // namespace

std::string version() { return SPECQUANT_VERSION; }

int run(const std::vector<std::string>& args) {
  CLI::App app{"Blind prediction of stationary processes by spectral quantization", "specquant"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  CommonFlags pc_flags;
  auto* pc_cmd = app.add_subcommand("sweep-pc", "error versus continuous power P_c");
  add_common(*pc_cmd, pc_flags, "fig3.csv");
  std::optional<double> pc_max, pc_step;
  pc_cmd->add_option("--pc-max", pc_max, "largest P_c of the grid (default 0.5)");
  pc_cmd->add_option("--pc-step", pc_step, "P_c grid step (default 0.1)");

  CommonFlags k_flags;
  auto* k_cmd = app.add_subcommand("sweep-k", "error versus number of spectral lines k");
  add_common(*k_cmd, k_flags, "fig4.csv");
  std::optional<double> k_pc;
  std::optional<int> k_max;
  k_cmd->add_option("--pc", k_pc, "continuous power (default 0.3)");
  k_cmd->add_option("--k-max", k_max, "grid k = 1..k-max (default 5)");

  CommonFlags pr_flags;
  auto* pr_cmd = app.add_subcommand("predict", "blind prediction from an observed window");
  add_common(*pr_cmd, pr_flags, "prediction.csv");
  std::string pr_input;
  std::optional<double> pr_sigma2;
  std::optional<long> pr_horizon;
  std::string pr_trace;
  bool demo_dual = false;
  double demo_pc = 0.3;
  pr_cmd->add_option("--input", pr_input, "CSV of observed samples with columns re,im");
  pr_cmd->add_option("--sigma2", pr_sigma2, "noise variance (overrides --snr-db)");
  pr_cmd->add_option("--horizon", pr_horizon, "number of future samples (default N)");
  pr_cmd->add_option("--dual-trace", pr_trace, "also write (xi, |Q|) over the dual grid");
  pr_cmd->add_flag("--demo-dual", demo_dual,
                   "use a synthetic window: lines at -0.4, -0.2 and a band on [0.2, 0.3)");
  pr_cmd->add_option("--demo-pc", demo_pc, "continuous power of the demo window")->capture_default_str();

  CommonFlags th_flags;
  auto* th_cmd = app.add_subcommand("theorem1", "analytic MMSE and genie bound versus horizon T");
  add_common(*th_cmd, th_flags, "theorem1.csv");
  std::string th_model;
  std::optional<double> th_pc, th_sigma2;
  std::optional<long> th_tmax, th_tstep;
  th_cmd->add_option("--model", th_model, "spectral model JSON (default: lines at -0.4, -0.2, band [0.05, 0.15))");
  th_cmd->add_option("--pc", th_pc, "continuous power of the default model (default 0.3)");
  th_cmd->add_option("--sigma2", th_sigma2, "noise variance (default 0, overrides --snr-db)");
  th_cmd->add_option("--t-max", th_tmax, "largest horizon (default 10 N)");
  th_cmd->add_option("--t-step", th_tstep, "horizon step (default 1)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*pc_cmd) {
      SweepConfig c = resolve_sweep(pc_flags);
      c.kind = SweepKind::ContinuousPower;
      if (pc_max || pc_step) {
        const double hi = pc_max.value_or(0.5);
        const double step = pc_step.value_or(0.1);
        if (!(step > 0.0) || !(hi >= 0.0)) throw UsageError("--pc-step must be > 0 and --pc-max >= 0");
        c.pc_grid.clear();
        const long count = std::lround(std::floor(hi / step + 1e-9));
        for (long i = 0; i <= count; ++i) c.pc_grid.push_back(static_cast<double>(i) * step);
      }
      validate_or_usage(c);
      const SweepResult result = run_sweep(c, progress_log("P_c"));
      return finish_sweep(c, result, pc_flags.out, "sweep-pc");
    }

    if (*k_cmd) {
      SweepConfig c = resolve_sweep(k_flags);
      c.kind = SweepKind::AtomCount;
      if (k_pc) c.pc = *k_pc;
      if (k_max) {
        if (*k_max < 1) throw UsageError("--k-max must be >= 1");
        c.k_grid.clear();
        for (int k = 1; k <= *k_max; ++k) c.k_grid.push_back(k);
      }
      validate_or_usage(c);
      const SweepResult result = run_sweep(c, progress_log("k"));
      return finish_sweep(c, result, k_flags.out, "sweep-k");
    }

    if (*pr_cmd) {
      if (pr_flags.config) throw UsageError("predict does not take --config");
      if (pr_flags.trials || pr_flags.threads) throw UsageError("predict does not take --trials or --threads");
      if (demo_dual == !pr_input.empty())
        throw UsageError("predict needs exactly one of --input and --demo-dual");
      const double snr_db = pr_flags.snr_db ? parse_snr(*pr_flags.snr_db) : 20.0;
      const std::uint64_t seed = pr_flags.seed.value_or(1);
      json cfg = {{"epsilon_scale", pr_flags.epsilon_scale.value_or(1.0)}};
      json seeds = json::object();
      cvec y;
      double sigma2 = 0.0;
      if (demo_dual) {
        if (!(demo_pc >= 0.0 && demo_pc < 1.0)) throw UsageError("--demo-pc must lie in [0, 1)");
        const Eigen::Index n = pr_flags.n.value_or(64);
        if (n < 4) throw UsageError("--n must be >= 4");
        const ProcessSample sample = draw(demo_dual_model(demo_pc), n, snr_db, seed);
        y = sample.y;
        sigma2 = sample.sigma2;
        cfg["demo_dual"] = {{"n", n}, {"pc", demo_pc}, {"snr_db", std::isinf(snr_db) ? json("inf") : json(snr_db)}};
        seeds["sample"] = seed;
        write_text(sibling(pr_flags.out, "input.csv"), samples_csv(y));
        if (pr_trace.empty()) pr_trace = sibling(pr_flags.out, "dual.csv");
      } else {
        y = read_samples_csv(pr_input);
        if (pr_flags.n && *pr_flags.n != y.size())
          throw UsageError(fmt::format("--n {} does not match the {} samples in {}", *pr_flags.n, y.size(), pr_input));
        sigma2 = pr_sigma2 ? *pr_sigma2 : noise_variance(snr_db);
        cfg["input"] = pr_input;
      }
      if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw UsageError("noise variance must be finite and >= 0");
      const Eigen::Index horizon = pr_horizon.value_or(y.size());
      if (horizon < 1) throw UsageError("--horizon must be >= 1");
      cfg["sigma2"] = sigma2;
      cfg["horizon"] = horizon;
      cfg["n"] = y.size();

      BlindOptions opts;
      opts.epsilon_scale = pr_flags.epsilon_scale.value_or(1.0);
      if (!(opts.epsilon_scale >= 0.0)) throw UsageError("--epsilon-scale must be >= 0");
      const BlindPrediction pred = blind_predict(y, sigma2, horizon, opts);

      write_text(pr_flags.out, vector_csv(pred.g_hat, y.size()));
      json spectrum = pred.spectrum;
      spectrum["epsilon"] = pred.epsilon;
      spectrum["converged"] = pred.converged;
      spectrum["max_abs_q"] = pred.max_abs_q;
      write_text(sibling(pr_flags.out, "spectrum.json"), spectrum.dump(2) + "\n");
      if (!pr_trace.empty()) write_text(pr_trace, dual_trace_csv(pred.solution.q_star, kDualGridSize));
      write_provenance(pr_flags.out, "predict", cfg, seeds);
      fmt::print(stderr, "recovered {} spectral lines, epsilon = {:.4g}, solver {}\n", pred.spectrum.size(),
                 pred.epsilon, pred.converged ? "converged" : "did not converge");
      return pred.converged ? kOk : kFailure;
    }

    if (*th_cmd) {
      if (th_flags.config || th_flags.trials || th_flags.threads || th_flags.seed || th_flags.epsilon_scale)
        throw UsageError("theorem1 takes only --n, --snr-db, --sigma2, --model, --pc, --t-max, --t-step, --out");
      const Eigen::Index n = th_flags.n.value_or(64);
      if (n < 1) throw UsageError("--n must be >= 1");
      SpectralModel model = SpectralModel::white();
      if (!th_model.empty()) {
        if (th_pc) throw UsageError("--pc applies only to the default model");
        model = load_model(th_model);
      } else {
        const double pc = th_pc.value_or(0.3);
        if (!(pc >= 0.0 && pc <= 1.0)) throw UsageError("--pc must lie in [0, 1]");
        model = continuous_power_model(ModelTemplate{}, pc);
      }
      double sigma2 = 0.0;
      if (th_sigma2) {
        sigma2 = *th_sigma2;
      } else if (th_flags.snr_db) {
        sigma2 = noise_variance(parse_snr(*th_flags.snr_db));
      }
      if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw UsageError("noise variance must be finite and >= 0");
      const long tmax = th_tmax.value_or(10 * static_cast<long>(n));
      const long tstep = th_tstep.value_or(1);
      if (tmax < 0 || tstep < 1) throw UsageError("--t-max must be >= 0 and --t-step >= 1");
      std::vector<long> horizons;
      for (long t = 0; t <= tmax; t += tstep) horizons.push_back(t);
      if (horizons.back() != tmax) horizons.push_back(tmax);

      const Theorem1Probe probe = theorem1_probe(model, sigma2, n, horizons);
      write_text(th_flags.out, theorem1_csv(probe));
      json model_json = model;
      write_provenance(th_flags.out, "theorem1",
                       {{"n", n}, {"sigma2", sigma2}, {"t_max", tmax}, {"t_step", tstep}, {"model", model_json}},
                       json::object());
      const double final_mmse = probe.curve.back().mmse;
      const double floor = probe.continuous_power - 0.02;
      fmt::print("mmse(T = {}) = {:.6f}, P_c = {:.6f}: floor P_c - 0.02 {}\n", tmax, final_mmse,
                 probe.continuous_power, final_mmse >= floor ? "holds" : "VIOLATED");
      fmt::print("genie <= mmse + 1e-8 at every T: {}\n", probe.genie_ordered ? "yes" : "NO");
      return kOk;
    }
  } catch (const UsageError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailure;
  }
  return kUsage;
}

}  // namespace specquant::cli
