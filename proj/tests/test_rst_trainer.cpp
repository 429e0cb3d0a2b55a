#include <doctest.h>

#include <cmath>
#include <set>

#include "fedhpn/client_encoding.hpp"
#include "fedhpn/data_gen.hpp"
#include "fedhpn/rst_trainer.hpp"
#include "support/oracles.hpp"

using namespace fedhpn;

namespace {

struct Bench {
  Federation fed;
  ModelSpec model;
  SearchSpace space;
  RstConfig rst;
};

Dimension lr_dim(std::vector<double> candidates) {
  Dimension d;
  d.name = "learning_rate";
  d.kind = DimKind::Discrete;
  d.candidates = std::move(candidates);
  return d;
}

// Small two-cluster benchmark with encodings filled.
Bench small_bench(std::uint64_t seed, int pretrain_rounds = 10,
                  long long budget = 40) {
  ClusterSpec spec;
  spec.num_clusters = 2;
  spec.clients_per_cluster = 2;
  spec.feature_scale = {1.0, 2.0};
  spec.num_features = 4;
  spec.num_classes = 2;
  spec.examples_per_client = 60;
  spec.seed = seed;

  Bench b;
  b.fed = make_cluster_federation(spec).fed;
  const RffProjection proj = draw_projection(4, 16, seed);
  encode_federation(b.fed, proj);
  b.model = ModelSpec::logistic_regression(4, 2);
  b.space.dims = {lr_dim({0.01, 0.1, 1.0})};
  b.rst.pretrain_rounds = pretrain_rounds;
  b.rst.segment_rounds = 1;
  b.rst.round_budget = budget;
  b.rst.default_config.learning_rate = 0.1;
  b.rst.default_config.local_steps = 1;
  b.rst.default_config.batch_size = 16;
  b.rst.seed = seed;
  return b;
}

PolicyParams fresh_policy(const Bench& b, std::uint64_t seed) {
  PolicyArch arch;
  arch.input_dim = static_cast<int>(b.fed.clients.front().encoding.size());
  arch.hidden = {16};
  arch.space = b.space;
  return policy_init(arch, seed);
}

}  // namespace

TEST_SUITE("rst-trainer") {

TEST_CASE("config invariants") {
  RstConfig cfg;
  cfg.pretrain_rounds = 10;
  cfg.segment_rounds = 11;  // T_s > T
  cfg.round_budget = 100;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.segment_rounds = 1;
  cfg.round_budget = 10;  // < T + T_s
  try {
    cfg.validate();
    FAIL("expected budget error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("budget infeasible") != std::string::npos);
  }
}

TEST_CASE("pretraining snapshots every round deterministically") {
  Bench b = small_bench(3, 1, 10);
  const PretrainResult single = rst_pretrain(b.model, b.fed, b.rst);
  CHECK(single.store.rounds() == 1);

  Bench b5 = small_bench(3, 5, 20);
  const PretrainResult a = rst_pretrain(b5.model, b5.fed, b5.rst);
  const PretrainResult c = rst_pretrain(b5.model, b5.fed, b5.rst);
  REQUIRE(a.store.rounds() == 5);
  for (int t = 1; t <= 5; ++t)
    CHECK(oracles::byte_hash(a.store.at(t)) == oracles::byte_hash(c.store.at(t)));
  CHECK(a.metrics.size() == 5);
  // training helps on this benchmark
  CHECK(a.metrics.back().valid_loss <= a.metrics.front().valid_loss);
}

TEST_CASE("sample_start_round is uniform on 1..T") {
  Rng one = derive_rng(1, "s");
  for (int i = 0; i < 20; ++i) CHECK(sample_start_round(1, one) == 1);

  Rng rng = derive_rng(2, "s");
  const int T = 50;
  std::vector<long> counts(T, 0);
  for (int i = 0; i < 10000; ++i) {
    const int s = sample_start_round(T, rng);
    REQUIRE(s >= 1);
    REQUIRE(s <= T);
    counts[s - 1]++;
  }
  CHECK(oracles::chi_square_uniform_p(counts) > 0.01);
}

TEST_CASE("replay with the pretraining stream reproduces checkpoints bit-exactly") {
  Bench b = small_bench(5, 12, 50);
  const PretrainResult pre = rst_pretrain(b.model, b.fed, b.rst);
  const std::vector<LocalTrainConfig> configs(b.fed.clients.size(),
                                              b.rst.default_config);
  const LocalStreams streams{b.rst.seed, kCoursePretrain};
  Rng rng = derive_rng(77, "pick");
  for (int rep = 0; rep < 10; ++rep) {
    const int s = sample_start_round(pre.store.rounds() - 1, rng);
    const int T_s = 1 + (rep % 2);
    const int end = std::min(s + T_s, pre.store.rounds());
    const CourseResult replay =
        run_course(b.model, pre.store.at(s), b.fed, configs, end - s,
                   /*capture=*/false, streams, s + 1);
    CHECK(oracles::byte_hash(replay.final) == oracles::byte_hash(pre.store.at(end)));
    // replay identity makes the reward gain exactly zero
    const double gain =
        metric_value(b.rst.reward_metric, evaluate(b.model, replay.final, b.fed, Split::Valid)) -
        metric_value(b.rst.reward_metric, evaluate(b.model, pre.store.at(end), b.fed, Split::Valid));
    CHECK(gain == 0.0);
  }
}

TEST_CASE("reward anti-symmetry") {
  Bench b = small_bench(7, 6, 30);
  const PretrainResult pre = rst_pretrain(b.model, b.fed, b.rst);
  const FedEval e1 = evaluate(b.model, pre.store.at(2), b.fed, Split::Valid);
  const FedEval e2 = evaluate(b.model, pre.store.at(6), b.fed, Split::Valid);
  for (RewardMetric m : {RewardMetric::NegLossGain, RewardMetric::AccuracyGain}) {
    const double forward = metric_value(m, e2) - metric_value(m, e1);
    const double backward = metric_value(m, e1) - metric_value(m, e2);
    CHECK(forward == -backward);
  }
}

TEST_CASE("rst_trial records, clamps the reference, and stays reproducible") {
  Bench b = small_bench(9, 8, 60);
  const PretrainResult pre = rst_pretrain(b.model, b.fed, b.rst);
  const PolicyParams params = fresh_policy(b, 1);

  const TrialRecord rec = rst_trial(b.model, pre.store, b.fed, b.space, params,
                                    b.rst, 0, /*worst_reward=*/0.0);
  CHECK(rec.rounds_consumed == 1);
  CHECK(rec.start_round >= 1);
  CHECK(rec.start_round <= 8);
  CHECK(rec.assignment.per_client.size() == 4);
  CHECK(rec.before.size() == 4);
  CHECK(rec.after.size() == 4);
  CHECK_FALSE(rec.failed);

  const TrialRecord again = rst_trial(b.model, pre.store, b.fed, b.space, params,
                                      b.rst, 0, 0.0);
  CHECK(again.reward == rec.reward);
  CHECK(again.start_round == rec.start_round);

  // find a trial whose start round is T and confirm the clamped reference
  for (int tid = 0; tid < 200; ++tid) {
    Rng rng = derive_rng(b.rst.seed, "trial", static_cast<std::uint64_t>(tid));
    if (sample_start_round(pre.store.rounds(), rng) != pre.store.rounds()) continue;
    const TrialRecord at_end = rst_trial(b.model, pre.store, b.fed, b.space, params,
                                         b.rst, tid, 0.0);
    CHECK(at_end.start_round == pre.store.rounds());
    const FedEval ref = evaluate(b.model, pre.store.at(pre.store.rounds()), b.fed,
                                 Split::Valid);
    REQUIRE(at_end.before.size() == ref.per_client.size());
    for (std::size_t i = 0; i < ref.per_client.size(); ++i)
      CHECK(at_end.before[i].loss == ref.per_client[i].loss);
    return;
  }
  FAIL("no trial with s == T found in 200 candidates");
}

TEST_CASE("divergent trials fail soft with the running-worst reward") {
  Bench b = small_bench(11, 6, 30);
  b.space.dims = {lr_dim({1e9})};  // every draw diverges via lr * wd >> 1
  b.rst.default_config.weight_decay = 1e-3;
  b.rst.default_config.local_steps = 50;
  const PretrainResult pre = rst_pretrain(b.model, b.fed, b.rst);
  const PolicyParams params = fresh_policy(b, 2);
  const TrialRecord rec = rst_trial(b.model, pre.store, b.fed, b.space, params,
                                    b.rst, 0, /*worst_reward=*/-0.125);
  CHECK(rec.failed);
  CHECK(rec.reward == -0.125);
}

TEST_CASE("budget arithmetic: T + T_s buys exactly one trial") {
  Bench b = small_bench(13, 10, 11);  // budget == T + T_s
  const PretrainResult pre = rst_pretrain(b.model, b.fed, b.rst);
  HpnTrainOptions options;
  options.hidden = {16};
  const TrainHpnResult r = train_hpn(b.model, b.fed, b.space, pre.store, b.rst, options);
  CHECK(r.trials.size() == 1);
  CHECK(r.updates == 1);
  CHECK(r.rounds_consumed == 11);
}

TEST_CASE("budget conservation and start-round coverage") {
  Bench b = small_bench(17, 5, 5 + 60);
  const PretrainResult pre = rst_pretrain(b.model, b.fed, b.rst);
  HpnTrainOptions options;
  options.hidden = {16};
  const TrainHpnResult r = train_hpn(b.model, b.fed, b.space, pre.store, b.rst, options);
  CHECK(r.rounds_consumed <= b.rst.round_budget);
  long long total = pre.store.rounds();
  std::set<int> starts;
  for (const auto& t : r.trials) {
    total += t.rounds_consumed;
    starts.insert(t.start_round);
  }
  CHECK(total == r.rounds_consumed);
  // coupon collector at T=5 with 60 trials
  CHECK(starts == std::set<int>{1, 2, 3, 4, 5});

  // argmax trace: one row per update x client x head
  CHECK(r.trace.size() ==
        static_cast<std::size_t>(r.updates * b.fed.num_clients() * b.space.num_dims()));
}

TEST_CASE("full-fidelity trials consume their full course") {
  Bench b = small_bench(19, 6, 30);
  const PolicyParams params = fresh_policy(b, 3);
  const TrialRecord rec =
      full_fidelity_trial(b.model, b.fed, b.space, params, b.rst, 6, 0);
  CHECK(rec.rounds_consumed == 6);
  CHECK(rec.start_round == 0);
  CHECK_FALSE(rec.failed);
  CHECK(std::isfinite(rec.reward));

  // reward is the negative weighted validation loss of the final model;
  // recompute it independently
  Rng rng = derive_rng(b.rst.seed, "trial", 0);
  const PersonalizedAssignment a =
      sample_assignment(params, client_encodings(b.fed), rng);
  const ParamVector w0 = model_init(b.model, derive_seed(b.rst.seed, "full-init", 0));
  const LocalStreams streams{b.rst.seed, kCourseFullFidelity};
  const CourseResult course = run_course(
      b.model, w0, b.fed,
      apply_assignment(b.space, a, b.rst.default_config, b.model), 6, false, streams);
  CHECK(rec.reward ==
        doctest::Approx(-evaluate(b.model, course.final, b.fed, Split::Valid).loss)
            .epsilon(1e-15));
}

TEST_CASE("rst completes at least 5x more trials than full fidelity") {
  Bench b = small_bench(23, 10, 20);  // budget 2T, T = 10, T_s = 1
  const PretrainResult pre = rst_pretrain(b.model, b.fed, b.rst);
  HpnTrainOptions rst_opt;
  rst_opt.hidden = {16};
  const TrainHpnResult rst_run =
      train_hpn(b.model, b.fed, b.space, pre.store, b.rst, rst_opt);

  HpnTrainOptions full_opt = rst_opt;
  full_opt.mode = TrainMode::Full;
  const TrainHpnResult full_run =
      train_hpn(b.model, b.fed, b.space, CheckpointStore{}, b.rst, full_opt);
  CHECK(full_run.rounds_consumed <= b.rst.round_budget);
  CHECK(rst_run.trials.size() >= 5 * full_run.trials.size());
  CHECK(full_run.trials.size() == 2);
  CHECK(rst_run.trials.size() == 10);
}

TEST_CASE("deploy_and_evaluate: degenerate space equals a plain FedAvg course") {
  Bench b = small_bench(29, 4, 20);
  b.space.dims = {lr_dim({0.1})};  // one combination only
  const PolicyParams params = fresh_policy(b, 4);
  const FinalOutcome out = deploy_and_evaluate(b.model, b.fed, b.space, params,
                                               b.rst.default_config, 6, b.rst.seed);
  const FinalOutcome again = deploy_and_evaluate(b.model, b.fed, b.space, params,
                                                 b.rst.default_config, 6, b.rst.seed);
  CHECK(out.weighted_test_accuracy == again.weighted_test_accuracy);
  CHECK(out.best_round == again.best_round);

  // independent recomputation: run the course by hand with the decoded config
  LocalTrainConfig cfg = b.rst.default_config;
  cfg.learning_rate = 0.1;
  ParamVector w = model_init(b.model, derive_seed(b.rst.seed, "eval-init", kCourseFinalEval));
  const LocalStreams streams{b.rst.seed, kCourseFinalEval};
  double best_acc = -1.0;
  double test_at_best = 0.0;
  for (int t = 1; t <= 6; ++t) {
    w = run_round(b.model, w, b.fed,
                  std::vector<LocalTrainConfig>(b.fed.clients.size(), cfg), streams, t);
    const double acc = evaluate(b.model, w, b.fed, Split::Valid).accuracy;
    if (acc > best_acc) {
      best_acc = acc;
      test_at_best = evaluate(b.model, w, b.fed, Split::Test).accuracy;
    }
  }
  CHECK(out.weighted_test_accuracy == test_at_best);
  CHECK(out.best_valid_accuracy == best_acc);
}

TEST_CASE("train_hpn requires encodings") {
  Bench b = small_bench(31, 4, 10);
  for (auto& c : b.fed.clients) c.encoding.resize(0);
  const PretrainResult pre = rst_pretrain(b.model, b.fed, b.rst);
  HpnTrainOptions options;
  CHECK_THROWS_AS(train_hpn(b.model, b.fed, b.space, pre.store, b.rst, options),
                  MissingArtifactError);
}

}  // TEST_SUITE
