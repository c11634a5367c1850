#include <doctest.h>

#include <atomic>

#include "specquant/experiments.hpp"
#include "specquant/sampler.hpp"

using namespace specquant;

namespace {

SweepConfig small_config() {
  SweepConfig c;
  c.n = 16;
  c.trials = 3;
  c.pc_grid = {0.0, 0.3};
  c.k_grid = {1, 2};
  return c;
}

}  // namespace

TEST_CASE("normalized error") {
  const cvec g = cvec::Random(10);
  CHECK(normalized_error(g, g) == 0.0);
  CHECK(normalized_error(cvec::Zero(2), cvec::Ones(2)) == 1.0);
  CHECK_THROWS_AS(normalized_error(cvec::Zero(2), cvec::Zero(3)), std::invalid_argument);

  const auto model = continuous_power_model(ModelTemplate{}, 0.3);
  const GaussianFactor factor(model, 128);
  std::vector<double> e;
  for (std::uint64_t s = 0; s < 1000; ++s) e.push_back(normalized_error(cvec::Zero(64), draw(factor, 20.0, s).g));
  const double mean = pairwise_sum(e.data(), e.size()) / e.size();
  double sq = 0.0;
  for (double v : e) sq += (v - mean) * (v - mean);
  CHECK(std::abs(mean - 1.0) <= 3.0 * std::sqrt(sq / 999 / 1000));
}

TEST_CASE("pairwise sum") {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  CHECK(pairwise_sum(v.data(), v.size()) == 499500.0);
  CHECK(pairwise_sum(v.data(), 0) == 0.0);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> hits(257);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }),
                  std::runtime_error);
}

TEST_CASE("model builders") {
  const auto m0 = continuous_power_model(ModelTemplate{}, 0.0);
  CHECK(m0.segments().empty());
  CHECK(m0.atoms().size() == 2);
  const auto m1 = continuous_power_model(ModelTemplate{}, 1.0);
  CHECK(m1.atoms().empty());
  const auto m3 = continuous_power_model(ModelTemplate{}, 0.3);
  CHECK(m3.atoms()[0].power == doctest::Approx(0.35));
  CHECK(m3.continuous_power() == doctest::Approx(0.3));

  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto m = atom_count_model(ModelTemplate{}, 0.3, 5, 64, s);
    REQUIRE(m.atoms().size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(m.atoms()[i].power == doctest::Approx(0.7 / 5));
      CHECK(m.atoms()[i].xi >= -0.5);
      CHECK(m.atoms()[i].xi < 0.5);
      for (std::size_t j = 0; j < i; ++j) CHECK(circular_distance(m.atoms()[i].xi, m.atoms()[j].xi) > 1.0 / 64);
    }
  }
  ModelTemplate crowded;
  crowded.max_rejections = 100;
  CHECK_THROWS_AS(atom_count_model(crowded, 0.3, 40, 16, 1), std::runtime_error);
}

TEST_CASE("config validation and JSON") {
  SweepConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  SweepConfig bad = c;
  bad.trials = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.pc_grid = {};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.pc_grid = {1.5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  nlohmann::json j = c;
  SweepConfig back;
  apply_json(j, back);
  CHECK(nlohmann::json(back) == j);

  SweepConfig noiseless = c;
  noiseless.snr_db = kNoiseless;
  nlohmann::json jn = noiseless;
  CHECK(jn["snr_db"] == "inf");
  apply_json(jn, back);
  CHECK(std::isinf(back.snr_db));

  CHECK_THROWS_AS(apply_json(nlohmann::json::parse(R"({"trails": 3})"), back), std::invalid_argument);
  CHECK_THROWS_AS(apply_json(nlohmann::json::parse(R"({"n": "x"})"), back), std::invalid_argument);
  CHECK_THROWS_AS(apply_json(nlohmann::json::parse(R"({"model": {"x": 1}})"), back), std::invalid_argument);
}

TEST_CASE("trial seeds are content-addressed") {
  SweepConfig a = small_config();
  SweepConfig b = a;
  b.pc_grid = {0.1, 0.3, 0.5};
  CHECK(trial_seed(a, 1, 2) == trial_seed(b, 1, 2));
  CHECK(trial_seed(a, 0, 2) != trial_seed(a, 1, 2));
  CHECK(trial_seed(a, 1, 1) != trial_seed(a, 1, 2));
  SweepConfig k = a;
  k.kind = SweepKind::AtomCount;
  CHECK(trial_seed(k, 0, 0) != trial_seed(a, 0, 0));
}

TEST_CASE("run_trial is deterministic") {
  const SweepConfig c = small_config();
  const auto x = run_trial(c, 1, 2);
  const auto y = run_trial(c, 1, 2);
  CHECK(x.e_mmse == y.e_mmse);
  CHECK(x.e_blind == y.e_blind);
  CHECK(x.seed == y.seed);
  CHECK(x.e_mmse >= 0.0);
}

TEST_CASE("noiseless lines only: blind prediction is exact") {
  SweepConfig c;
  c.snr_db = kNoiseless;
  c.pc_grid = {0.0};
  for (int t = 0; t < 3; ++t) {
    const auto o = run_trial(c, 0, t);
    CHECK(o.converged);
    CHECK(o.e_blind <= 1e-4);
  }
}

TEST_CASE("sweeps do not depend on the thread count") {
  SweepConfig c = small_config();
  c.threads = 1;
  const std::string one = sweep_csv(sweep_pc(c));
  c.threads = 3;
  const std::string three = sweep_csv(sweep_pc(c));
  CHECK(one == three);
  CHECK(one.rfind("sweep_var,e_mmse_mean,e_mmse_se,e_blind_mean,e_blind_se,trials,failures\n", 0) == 0);

  c.threads = 2;
  const auto k = sweep_k(c);
  REQUIRE(k.points.size() == 2);
  CHECK(k.points[1].value == 2.0);
  CHECK(k.total_trials() == 6);
}

TEST_CASE("sweep statistics") {
  SweepConfig c = small_config();
  c.trials = 1;
  int calls = 0;
  const auto r = sweep_pc(c, [&](const SweepPoint&) { ++calls; });
  CHECK(calls == 2);
  CHECK(std::isnan(r.points[0].e_mmse_se));

  c.trials = 4;
  const auto r4 = sweep_pc(c);
  for (const auto& p : r4.points) {
    std::vector<double> v;
    for (const auto& o : p.outcomes) v.push_back(o.e_blind);
    CHECK(p.e_blind_mean == doctest::Approx((v[0] + v[1] + v[2] + v[3]) / 4));
    CHECK(p.e_blind_se >= 0.0);
    CHECK(p.failures == 0);
  }
}

TEST_CASE("Theorem 1 probe") {
  const auto white = theorem1_probe(SpectralModel::white(), 0.0, 16, {1, 5, 50});
  for (const auto& p : white.curve) CHECK(p.mmse == doctest::Approx(1.0));
  const auto fig = theorem1_probe(continuous_power_model(ModelTemplate{}, 0.3), 0.0, 64, {0, 64, 640});
  CHECK(fig.genie_ordered);
  CHECK(fig.curve.back().mmse >= 0.3 - 0.02);
  CHECK(theorem1_csv(fig).rfind("T,mmse,genie_mmse\n", 0) == 0);
}
