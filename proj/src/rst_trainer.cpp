#include "fedhpn/rst_trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace fedhpn {

void RstConfig::validate() const {
  if (pretrain_rounds < 1) throw ConfigError("rst: pretrain_rounds must be >= 1");
  if (segment_rounds < 1 || segment_rounds > pretrain_rounds)
    throw ConfigError("rst: segment_rounds must satisfy 1 <= T_s <= T");
  if (round_budget < pretrain_rounds + segment_rounds)
    throw ConfigError("rst: budget infeasible (needs at least T + T_s rounds)");
  default_config.validate();
}

std::vector<Eigen::VectorXd> client_encodings(const Federation& fed) {
  std::vector<Eigen::VectorXd> encodings;
  encodings.reserve(fed.clients.size());
  for (const auto& c : fed.clients) {
    if (c.encoding.size() == 0)
      throw MissingArtifactError("client " + std::to_string(c.id) +
                                 " has no encoding; run the encoder first");
    encodings.push_back(c.encoding);
  }
  return encodings;
}

PretrainResult rst_pretrain(const ModelSpec& model, const Federation& fed,
                            const RstConfig& cfg, int threads) {
  cfg.validate();
  const ParamVector w0 = model_init(model, derive_seed(cfg.seed, "pretrain-init"));
  const LocalStreams streams{cfg.seed, kCoursePretrain};
  const std::vector<LocalTrainConfig> configs(fed.clients.size(), cfg.default_config);
  CourseResult course = run_course(model, w0, fed, configs, cfg.pretrain_rounds,
                                   /*capture=*/true, streams, 1, threads);
  PretrainResult out;
  out.store.snapshots = std::move(course.checkpoints);
  out.store.model_id = model.id();
  out.store.seed = cfg.seed;
  out.store.default_config = cfg.default_config;
  out.metrics = std::move(course.metrics);
  return out;
}

int sample_start_round(int pretrain_rounds, Rng& rng) {
  if (pretrain_rounds < 1) throw ConfigError("sample_start_round: T must be >= 1");
  return uniform_int(rng, 1, pretrain_rounds);
}

double metric_value(RewardMetric metric, const FedEval& eval) {
  return metric == RewardMetric::NegLossGain ? -eval.loss : eval.accuracy;
}

TrialRecord rst_trial(const ModelSpec& model, const CheckpointStore& store,
                      const Federation& fed, const SearchSpace& space,
                      const PolicyParams& params, const RstConfig& cfg,
                      int trial_id, double worst_reward, int threads) {
  const int T = store.rounds();
  const int T_s = cfg.segment_rounds;
  Rng rng = derive_rng(cfg.seed, "trial", static_cast<std::uint64_t>(trial_id));

  TrialRecord rec;
  rec.trial_id = trial_id;
  rec.start_round = sample_start_round(T, rng);
  rec.assignment = sample_assignment(params, client_encodings(fed), rng);
  rec.rounds_consumed = T_s;

  // Reference checkpoint, clamped to the course end when s + T_s > T.
  const int ref_round = std::min(rec.start_round + T_s, T);
  const FedEval ref_eval = evaluate(model, store.at(ref_round), fed, Split::Valid);
  rec.before = ref_eval.per_client;

  try {
    const LocalStreams streams{cfg.seed, 1 + static_cast<std::uint64_t>(trial_id)};
    ParamVector w = store.at(rec.start_round);
    const auto configs = apply_assignment(space, rec.assignment,
                                          cfg.default_config, model);
    for (int t = 0; t < T_s; ++t)
      w = run_round(model, w, fed, configs, streams, rec.start_round + 1 + t, threads);
    const FedEval new_eval = evaluate(model, w, fed, Split::Valid);
    if (!std::isfinite(new_eval.loss))
      throw NumericError("rst_trial: non-finite validation loss");
    rec.after = new_eval.per_client;
    rec.reward = metric_value(cfg.reward_metric, new_eval) -
                 metric_value(cfg.reward_metric, ref_eval);
  } catch (const NumericError&) {
    rec.failed = true;
    rec.reward = worst_reward;
  }
  return rec;
}

TrialRecord full_fidelity_trial(const ModelSpec& model, const Federation& fed,
                                const SearchSpace& space, const PolicyParams& params,
                                const RstConfig& cfg, int rounds, int trial_id,
                                int threads) {
  if (rounds < 1) throw ConfigError("full_fidelity_trial: rounds must be >= 1");
  Rng rng = derive_rng(cfg.seed, "trial", static_cast<std::uint64_t>(trial_id));

  TrialRecord rec;
  rec.trial_id = trial_id;
  rec.start_round = 0;
  rec.assignment = sample_assignment(params, client_encodings(fed), rng);
  rec.rounds_consumed = rounds;

  try {
    const ParamVector w0 =
        model_init(model, derive_seed(cfg.seed, "full-init",
                                      static_cast<std::uint64_t>(trial_id)));
    const LocalStreams streams{cfg.seed,
                               kCourseFullFidelity + static_cast<std::uint64_t>(trial_id)};
    CourseResult course =
        run_course(model, w0, fed,
                   apply_assignment(space, rec.assignment, cfg.default_config, model),
                   rounds, /*capture=*/false, streams, 1, threads);
    const FedEval ev = evaluate(model, course.final, fed, Split::Valid);
    if (!std::isfinite(ev.loss))
      throw NumericError("full_fidelity_trial: non-finite validation loss");
    rec.after = ev.per_client;
    rec.reward = -ev.loss;
  } catch (const NumericError&) {
    rec.failed = true;
    rec.reward = 0.0;  // caller substitutes the running worst
  }
  return rec;
}

TrainHpnResult train_hpn(const ModelSpec& model, const Federation& fed,
                         const SearchSpace& space, const CheckpointStore& store,
                         const RstConfig& cfg, const HpnTrainOptions& options) {
  cfg.validate();
  check_space_names(space);
  const auto encodings = client_encodings(fed);

  PolicyArch arch;
  arch.input_dim = static_cast<int>(encodings.front().size());
  arch.hidden = options.hidden;
  arch.space = space;

  TrainHpnResult result;
  result.params = policy_init(arch, derive_seed(cfg.seed, "policy"));
  PolicyTrainer trainer(options.trainer);

  const bool rst = options.mode == TrainMode::Rst;
  if (rst && store.rounds() != cfg.pretrain_rounds)
    throw MissingArtifactError("train_hpn: checkpoint store does not cover T rounds");
  const int trial_cost = rst ? cfg.segment_rounds
                             : (options.full_rounds > 0 ? options.full_rounds
                                                        : cfg.pretrain_rounds);
  result.rounds_consumed = rst ? store.rounds() : 0;

  double worst_reward = 0.0;
  int trial_id = 0;
  while (result.rounds_consumed + trial_cost <= cfg.round_budget) {
    std::vector<PolicyTrial> batch;
    while (static_cast<int>(batch.size()) < options.trainer.trials_per_update &&
           result.rounds_consumed + trial_cost <= cfg.round_budget) {
      const auto t0 = std::chrono::steady_clock::now();
      TrialRecord rec =
          rst ? rst_trial(model, store, fed, space, result.params, cfg, trial_id,
                          worst_reward, options.threads)
              : full_fidelity_trial(model, fed, space, result.params, cfg, trial_cost,
                                    trial_id, options.threads);
      result.trial_wall_ms.push_back(
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count());
      if (rec.failed) rec.reward = worst_reward;
      else worst_reward = std::min(worst_reward, rec.reward);
      result.rounds_consumed += rec.rounds_consumed;
      batch.push_back({rec.assignment, rec.reward});
      result.trials.push_back(std::move(rec));
      ++trial_id;
    }
    if (batch.empty()) break;
    trainer.update(result.params, encodings, batch);
    ++result.updates;

    for (int i = 0; i < fed.num_clients(); ++i) {
      const ConfigSample greedy = argmax_sample(result.params, encodings[i]);
      const auto decoded = decode(space, greedy);
      for (const auto& d : space.dims)
        result.trace.push_back({result.updates, i, d.name, decoded.at(d.name)});
    }
  }
  result.rejected_updates = trainer.rejected_updates();
  return result;
}

FinalOutcome evaluate_assignment(const ModelSpec& model, const Federation& fed,
                                 const SearchSpace& space,
                                 const PersonalizedAssignment& assignment,
                                 const LocalTrainConfig& base, int eval_rounds,
                                 std::uint64_t seed, std::uint64_t course_id,
                                 int threads) {
  if (eval_rounds < 1) throw ConfigError("evaluate_assignment: eval_rounds must be >= 1");
  FinalOutcome out;
  out.assignment = assignment;
  out.rounds = eval_rounds;

  ParamVector w = model_init(model, derive_seed(seed, "eval-init", course_id));
  const LocalStreams streams{seed, course_id};
  const auto configs = apply_assignment(space, assignment, base, model);

  out.best_valid_accuracy = -1.0;
  for (int t = 1; t <= eval_rounds; ++t) {
    w = run_round(model, w, fed, configs, streams, t, threads);
    const FedEval valid = evaluate(model, w, fed, Split::Valid);
    if (valid.accuracy > out.best_valid_accuracy) {
      out.best_valid_accuracy = valid.accuracy;
      out.best_round = t;
      const FedEval test = evaluate(model, w, fed, Split::Test);
      out.weighted_test_accuracy = test.accuracy;
      out.per_client_test_accuracy.clear();
      for (const auto& m : test.per_client)
        out.per_client_test_accuracy.push_back(m.accuracy);
    }
  }
  return out;
}

FinalOutcome deploy_and_evaluate(const ModelSpec& model, const Federation& fed,
                                 const SearchSpace& space, const PolicyParams& params,
                                 const LocalTrainConfig& base, int eval_rounds,
                                 std::uint64_t seed, int threads,
                                 std::uint64_t course_id) {
  PersonalizedAssignment assignment;
  for (const auto& c : fed.clients) {
    if (c.encoding.size() == 0)
      throw MissingArtifactError("deploy: client encodings missing");
    assignment.per_client.push_back(argmax_sample(params, c.encoding));
  }
  return evaluate_assignment(model, fed, space, assignment, base, eval_rounds, seed,
                             course_id, threads);
}

}  // namespace fedhpn
