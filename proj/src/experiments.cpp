#include "specquant/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>

#include "specquant/mmse.hpp"
#include "specquant/sampler.hpp"

namespace specquant {

namespace {

constexpr std::uint64_t kPcSweepTag = 0x5043;  // "PC"
constexpr std::uint64_t kKSweepTag = 0x4b;     // "K"

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> sq(v.size());
  std::transform(v.begin(), v.end(), sq.begin(), [mean](double x) { return (x - mean) * (x - mean); });
  const double var = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(v.size() - 1);
  return std::sqrt(var / static_cast<double>(v.size()));
}

nlohmann::json snr_to_json(double snr_db) {
  if (std::isinf(snr_db)) return "inf";
  return snr_db;
}

double snr_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kNoiseless;
    throw std::invalid_argument("snr_db must be a number or \"inf\"");
  }
  return j.get<double>();
}

}  // namespace

double pairwise_sum(const double* data, std::size_t count) {
  if (count <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += data[i];
    return s;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

void SweepConfig::validate() const {
  if (n < 4) throw std::invalid_argument("N must be >= 4");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("snr_db must be finite or +inf");
  if (!(epsilon_scale >= 0.0)) throw std::invalid_argument("epsilon_scale must be >= 0");
  if (!(model.band.a >= -0.5 && model.band.b <= 0.5 && model.band.a < model.band.b))
    throw std::invalid_argument("band must satisfy -1/2 <= a < b <= 1/2");
  if (kind == SweepKind::ContinuousPower) {
    if (pc_grid.empty()) throw std::invalid_argument("pc grid is empty");
    for (double pc_value : pc_grid)
      if (!(pc_value >= 0.0 && pc_value <= 1.0)) throw std::invalid_argument("pc values must lie in [0, 1]");
    if (model.atom_freqs.empty())
      for (double pc_value : pc_grid)
        if (pc_value < 1.0) throw std::invalid_argument("pc < 1 needs at least one atom frequency");
  } else {
    if (k_grid.empty()) throw std::invalid_argument("k grid is empty");
    for (int k : k_grid)
      if (k < 1) throw std::invalid_argument("k values must be >= 1");
    if (!(pc >= 0.0 && pc <= 1.0)) throw std::invalid_argument("pc must lie in [0, 1]");
  }
}

std::size_t SweepConfig::grid_size() const {
  return kind == SweepKind::ContinuousPower ? pc_grid.size() : k_grid.size();
}

double SweepConfig::grid_value(std::size_t point) const {
  return kind == SweepKind::ContinuousPower ? pc_grid.at(point) : static_cast<double>(k_grid.at(point));
}

void to_json(nlohmann::json& j, const SweepConfig& c) {
  j = {{"kind", c.kind == SweepKind::ContinuousPower ? "pc" : "k"},
       {"n", c.n},
       {"snr_db", snr_to_json(c.snr_db)},
       {"trials", c.trials},
       {"seed", c.master_seed},
       {"pc_grid", c.pc_grid},
       {"k_grid", c.k_grid},
       {"pc", c.pc},
       {"epsilon_scale", c.epsilon_scale},
       {"threads", c.threads},
       {"model",
        {{"atom_freqs", c.model.atom_freqs},
         {"band", {{"a", c.model.band.a}, {"b", c.model.band.b}}},
         {"separation_scale", c.model.separation_scale}}}};
}

void apply_json(const nlohmann::json& j, SweepConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "kind") {
        const auto kind = value.get<std::string>();
        if (kind != "pc" && kind != "k") throw std::invalid_argument("kind must be \"pc\" or \"k\"");
        c.kind = kind == "pc" ? SweepKind::ContinuousPower : SweepKind::AtomCount;
      } else if (key == "n") {
        c.n = value.get<Eigen::Index>();
      } else if (key == "snr_db") {
        c.snr_db = snr_from_json(value);
      } else if (key == "trials") {
        c.trials = value.get<int>();
      } else if (key == "seed") {
        c.master_seed = value.get<std::uint64_t>();
      } else if (key == "pc_grid") {
        c.pc_grid = value.get<std::vector<double>>();
      } else if (key == "k_grid") {
        c.k_grid = value.get<std::vector<int>>();
      } else if (key == "pc") {
        c.pc = value.get<double>();
      } else if (key == "epsilon_scale") {
        c.epsilon_scale = value.get<double>();
      } else if (key == "threads") {
        c.threads = value.get<unsigned>();
      } else if (key == "model") {
        for (const auto& [mkey, mvalue] : value.items()) {
          if (mkey == "atom_freqs") {
            c.model.atom_freqs = mvalue.get<std::vector<double>>();
          } else if (mkey == "band") {
            c.model.band.a = mvalue.at("a").get<double>();
            c.model.band.b = mvalue.at("b").get<double>();
          } else if (mkey == "separation_scale") {
            c.model.separation_scale = mvalue.get<double>();
          } else {
            throw std::invalid_argument("unknown model key: " + mkey);
          }
        }
      } else {
        throw std::invalid_argument("unknown config key: " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed config: ") + e.what());
  }
}

SpectralModel continuous_power_model(const ModelTemplate& tmpl, double pc) {
  std::vector<Atom> atoms;
  std::vector<Segment> segments;
  if (pc < 1.0) {
    const double each = (1.0 - pc) / static_cast<double>(tmpl.atom_freqs.size());
    for (double xi : tmpl.atom_freqs) atoms.push_back({xi, each});
  }
  if (pc > 0.0) segments.push_back({tmpl.band.a, tmpl.band.b, pc});
  return SpectralModel::renormalize(std::move(atoms), std::move(segments));
}

SpectralModel atom_count_model(const ModelTemplate& tmpl, double pc, int k, Eigen::Index n,
                               std::uint64_t seed) {
  const double min_gap = tmpl.separation_scale / static_cast<double>(n);
  Rng rng(seed);
  boost::random::uniform_real_distribution<double> uniform(-0.5, 0.5);
  std::vector<double> freqs;
  int attempts = 0;
  while (static_cast<int>(freqs.size()) < k) {
    if (++attempts > tmpl.max_rejections)
      throw std::runtime_error(fmt::format(
          "could not place {} atoms with separation > {}/N (N = {}) after {} attempts", k,
          tmpl.separation_scale, n, tmpl.max_rejections));
    const double xi = uniform(rng);
    const bool clash = std::any_of(freqs.begin(), freqs.end(),
                                   [&](double f) { return circular_distance(f, xi) <= min_gap; });
    if (!clash) freqs.push_back(xi);
  }
  std::vector<Atom> atoms;
  if (pc < 1.0)
    for (double xi : freqs) atoms.push_back({xi, (1.0 - pc) / static_cast<double>(k)});
  std::vector<Segment> segments;
  if (pc > 0.0) segments.push_back({tmpl.band.a, tmpl.band.b, pc});
  return SpectralModel::renormalize(std::move(atoms), std::move(segments));
}

int SweepResult::total_trials() const {
  int total = 0;
  for (const auto& p : points) total += p.trials;
  return total;
}

int SweepResult::total_failures() const {
  int total = 0;
  for (const auto& p : points) total += p.failures;
  return total;
}

double normalized_error(const cvec& g_hat, const cvec& g) {
  if (g_hat.size() != g.size()) throw std::invalid_argument("normalized_error needs equal lengths");
  if (g.size() == 0) return 0.0;
  return (g_hat - g).squaredNorm() / static_cast<double>(g.size());
}

std::uint64_t trial_seed(const SweepConfig& config, std::size_t point, int trial_index) {
  const std::uint64_t tag = config.kind == SweepKind::ContinuousPower ? kPcSweepTag : kKSweepTag;
  return derive_seed(config.master_seed,
                     {tag, seed_key(config.grid_value(point)), static_cast<std::uint64_t>(trial_index)});
}

TrialOutcome run_trial(const SweepConfig& config, std::size_t point, int trial_index) {
  const double value = config.grid_value(point);
  TrialOutcome out;
  out.seed = trial_seed(config, point, trial_index);
  const SpectralModel model =
      config.kind == SweepKind::ContinuousPower
          ? continuous_power_model(config.model, value)
          : atom_count_model(config.model, config.pc, static_cast<int>(value), config.n,
                             derive_seed(out.seed, {3}));

  const ProcessSample sample = draw(model, config.n, config.snr_db, out.seed);
  const LinearPredictor mmse(model, sample.sigma2, config.n);
  out.e_mmse = normalized_error(mmse.predict(sample.y), sample.g);
  out.e_mmse_expected = expected_window_mmse(model, sample.sigma2, config.n);

  BlindOptions opts;
  opts.epsilon_scale = config.epsilon_scale;
  const BlindPrediction blind = blind_predict(sample.y, sample.sigma2, config.n, opts);
  out.e_blind = normalized_error(blind.g_hat, sample.g);
  out.converged = blind.converged;
  out.iterations = blind.solution.iterations;
  out.max_abs_q = blind.max_abs_q;
  out.min_peak_abs_q = blind.min_peak_abs_q;
  out.atoms_found = blind.spectrum.size();
  out.fit_gap = blind.fit.duality_gap;
  return out;
}

SweepResult run_sweep(const SweepConfig& config, const ProgressFn& progress) {
  config.validate();
  const std::size_t points = config.grid_size();
  const auto trials = static_cast<std::size_t>(config.trials);
  std::vector<TrialOutcome> outcomes(points * trials);
  parallel_for(outcomes.size(), config.threads, [&](std::size_t i) {
    outcomes[i] = run_trial(config, i / trials, static_cast<int>(i % trials));
  });

  SweepResult result;
  result.kind = config.kind;
  for (std::size_t p = 0; p < points; ++p) {
    SweepPoint sp;
    sp.value = config.grid_value(p);
    sp.outcomes.assign(outcomes.begin() + static_cast<std::ptrdiff_t>(p * trials),
                       outcomes.begin() + static_cast<std::ptrdiff_t>((p + 1) * trials));
    std::vector<double> mmse, blind, expected;
    for (const auto& o : sp.outcomes) {
      mmse.push_back(o.e_mmse);
      blind.push_back(o.e_blind);
      expected.push_back(o.e_mmse_expected);
      if (!o.converged) ++sp.failures;
    }
    sp.trials = config.trials;
    sp.e_mmse_mean = mean_of(mmse);
    sp.e_mmse_se = standard_error(mmse, sp.e_mmse_mean);
    sp.e_blind_mean = mean_of(blind);
    sp.e_blind_se = standard_error(blind, sp.e_blind_mean);
    sp.e_mmse_expected = mean_of(expected);
    if (progress) progress(sp);
    result.points.push_back(std::move(sp));
  }
  return result;
}

SweepResult sweep_pc(SweepConfig config, const ProgressFn& progress) {
  config.kind = SweepKind::ContinuousPower;
  return run_sweep(config, progress);
}

SweepResult sweep_k(SweepConfig config, const ProgressFn& progress) {
  config.kind = SweepKind::AtomCount;
  return run_sweep(config, progress);
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = "sweep_var,e_mmse_mean,e_mmse_se,e_blind_mean,e_blind_se,trials,failures\n";
  for (const auto& p : result.points)
    out += fmt::format("{},{},{},{},{},{},{}\n", p.value, p.e_mmse_mean, p.e_mmse_se, p.e_blind_mean,
                       p.e_blind_se, p.trials, p.failures);
  return out;
}

Theorem1Probe theorem1_probe(const SpectralModel& model, double sigma2, Eigen::Index n,
                             const std::vector<long>& horizons) {
  const MmseProbe direct(model, sigma2, n);
  const GenieProbe genie(model, sigma2, n);
  Theorem1Probe probe;
  probe.continuous_power = model.continuous_power();
  for (long t : horizons) {
    ProbePoint p{t, direct.at(t), genie.at(t)};
    if (p.genie > p.mmse + 1e-8) probe.genie_ordered = false;
    probe.curve.push_back(p);
  }
  return probe;
}

std::string theorem1_csv(const Theorem1Probe& probe) {
  std::string out = "T,mmse,genie_mmse\n";
  for (const auto& p : probe.curve) out += fmt::format("{},{},{}\n", p.horizon, p.mmse, p.genie);
  return out;
}

}  // namespace specquant
