#include <doctest.h>

#include <map>
#include <set>

#include "fedhpn/baselines.hpp"
#include "fedhpn/client_encoding.hpp"
#include "fedhpn/data_gen.hpp"
#include "support/oracles.hpp"

using namespace fedhpn;

namespace {

Dimension discrete(std::string name, std::vector<double> candidates) {
  Dimension d;
  d.name = std::move(name);
  d.kind = DimKind::Discrete;
  d.candidates = std::move(candidates);
  return d;
}

Federation tiny_fed(std::uint64_t seed, int clients = 2) {
  ClusterSpec spec;
  spec.num_clusters = 1;
  spec.clients_per_cluster = clients;
  spec.feature_scale = {1.0};
  spec.num_features = 4;
  spec.num_classes = 2;
  spec.examples_per_client = 60;
  spec.seed = seed;
  return make_cluster_federation(spec).fed;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("one-combination space wins trivially; K = 1 returns the single draw") {
  const Federation fed = tiny_fed(1);
  const ModelSpec model = ModelSpec::logistic_regression(4, 2);
  SearchSpace space;
  space.dims = {discrete("learning_rate", {0.1})};
  LocalTrainConfig base;
  base.local_steps = 1;
  base.batch_size = 16;

  BaselineConfig cfg;
  cfg.num_candidates = 3;
  cfg.seed = 1;
  const BaselineResult one = rs_global(model, fed, space, base, 30, cfg);
  CHECK(one.winner.per_client[0].values[0].index == 0);
  CHECK(one.rounds_consumed == 30);

  cfg.num_candidates = 1;
  SearchSpace grid;
  grid.dims = {discrete("learning_rate", {0.01, 0.1, 1.0})};
  const BaselineResult single = rs_global(model, fed, grid, base, 30, cfg);
  CHECK(single.candidates.size() == 1);
  CHECK(single.winner_id == 0);
}

TEST_CASE("per-dimension marginals of uniform draws pass chi-square") {
  SearchSpace space;
  space.dims = {discrete("learning_rate", {1, 2, 3, 4, 5}),
                discrete("local_steps", {1, 2, 3})};
  Rng rng = derive_rng(3, "u");
  std::vector<long> c0(5, 0), c1(3, 0);
  for (int i = 0; i < 10000; ++i) {
    const ConfigSample s = uniform_config_draw(space, rng);
    c0[static_cast<std::size_t>(s.values[0].index)]++;
    c1[static_cast<std::size_t>(s.values[1].index)]++;
    CHECK(s.log_prob == doctest::Approx(-std::log(15.0)));
  }
  CHECK(oracles::chi_square_uniform_p(c0) > 0.01);
  CHECK(oracles::chi_square_uniform_p(c1) > 0.01);
}

TEST_CASE("rs matches the exhaustive oracle when draws cover the space") {
  // 4-combination space with one clearly dominant combo (sane lr, no
  // crushing weight decay); K = 16 draws make full coverage overwhelmingly
  // likely, standing in for forced-distinct draws.
  SearchSpace space;
  space.dims = {discrete("learning_rate", {0.002, 0.2}),
                discrete("weight_decay", {0.0, 4.0})};
  const ModelSpec model = ModelSpec::logistic_regression(4, 2);
  LocalTrainConfig base;
  base.batch_size = 16;

  int matches = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Federation fed = tiny_fed(100 + seed);

    // exhaustive full-evaluation oracle over all 4 combos
    double best_acc = -1.0;
    int best_combo = -1;
    for (int i0 = 0; i0 < 2; ++i0)
      for (int i1 = 0; i1 < 2; ++i1) {
        ConfigSample s;
        DimValue v0, v1;
        v0.index = i0;
        v1.index = i1;
        s.values = {v0, v1};
        PersonalizedAssignment a;
        a.per_client.assign(fed.clients.size(), s);
        const FinalOutcome out = evaluate_assignment(model, fed, space, a, base, 40,
                                                     seed, kCourseFinalEval);
        if (out.best_valid_accuracy > best_acc) {
          best_acc = out.best_valid_accuracy;
          best_combo = i0 * 2 + i1;
        }
      }

    BaselineConfig cfg;
    cfg.num_candidates = 16;
    cfg.rounds_per_candidate = 40;
    cfg.seed = seed;
    const BaselineResult rs = rs_global(model, fed, space, base, 16 * 40, cfg);
    const auto& w = rs.winner.per_client[0].values;
    const int rs_combo = w[0].index * 2 + w[1].index;
    matches += rs_combo == best_combo ? 1 : 0;
  }
  CHECK(matches >= 4);
}

TEST_CASE("rs_personalized draws independent per-client tuples") {
  const Federation fed = tiny_fed(5, 3);
  const ModelSpec model = ModelSpec::logistic_regression(4, 2);
  SearchSpace space;
  space.dims = {discrete("learning_rate", {0.01, 0.1, 1.0}),
                discrete("local_steps", {1, 2})};
  LocalTrainConfig base;
  base.batch_size = 16;

  BaselineConfig cfg;
  cfg.subsample_size = 4;
  cfg.rounds_per_candidate = 2;
  cfg.seed = 9;
  const BaselineResult prs = rs_personalized(model, fed, space, base, 8, cfg);
  CHECK(prs.candidates.size() == 4);
  CHECK(prs.rounds_consumed == 8);
  bool any_heterogeneous = false;
  for (const auto& c : prs.candidates) {
    REQUIRE(c.assignment.per_client.size() == 3);
    for (std::size_t i = 1; i < 3; ++i)
      any_heterogeneous = any_heterogeneous ||
                          c.assignment.per_client[i].values[0].index !=
                              c.assignment.per_client[0].values[0].index;
  }
  CHECK(any_heterogeneous);

  // subsample of one returns that joint draw
  cfg.subsample_size = 1;
  const BaselineResult solo = rs_personalized(model, fed, space, base, 8, cfg);
  CHECK(solo.candidates.size() == 1);
  CHECK(solo.winner_id == 0);
}

TEST_CASE("joint draws on the 16^5 space are distinct with high probability") {
  SearchSpace space;
  space.dims = {discrete("learning_rate", {1e-4, 1e-3, 1e-2, 1e-1}),
                discrete("local_steps", {1, 2, 3, 4})};
  const int n = 5;
  std::vector<double> dup_rates;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng = derive_rng(seed, "joint");
    std::set<std::string> seen;
    int dups = 0;
    for (int k = 0; k < 100; ++k) {
      std::string key;
      for (int i = 0; i < n; ++i) {
        const ConfigSample s = uniform_config_draw(space, rng);
        key += std::to_string(s.values[0].index) + ":" +
               std::to_string(s.values[1].index) + ";";
      }
      if (!seen.insert(key).second) ++dups;
    }
    dup_rates.push_back(dups / 100.0);
  }
  CHECK(oracles::mean(dup_rates) < 0.01);
}

TEST_CASE("budget splitting and infeasibility errors") {
  const Federation fed = tiny_fed(7);
  const ModelSpec model = ModelSpec::logistic_regression(4, 2);
  SearchSpace space;
  space.dims = {discrete("learning_rate", {0.01, 0.1})};
  LocalTrainConfig base;
  base.batch_size = 16;

  BaselineConfig cfg;
  cfg.num_candidates = 4;
  const BaselineResult even = rs_global(model, fed, space, base, 43, cfg);
  CHECK(even.candidates[0].rounds_consumed == 10);  // floor(43 / 4)
  CHECK(even.rounds_consumed == 40);

  cfg.num_candidates = 50;
  CHECK_THROWS_AS(rs_global(model, fed, space, base, 10, cfg), ConfigError);

  cfg.num_candidates = 2;
  cfg.rounds_per_candidate = 50;  // 2 * 50 > 10
  CHECK_THROWS_AS(rs_global(model, fed, space, base, 10, cfg), ConfigError);
}

}  // TEST_SUITE
