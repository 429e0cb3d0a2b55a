#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedhpn/checkpoint.hpp"
#include "fedhpn/fedavg.hpp"
#include "fedhpn/hpn_policy.hpp"

namespace fedhpn {

enum class RewardMetric { NegLossGain, AccuracyGain };

// Local-stream course ids; pretraining owns 0, trial t owns 1 + t. The high
// bits partition baseline/full-fidelity/final-evaluation courses.
constexpr std::uint64_t kCoursePretrain = 0;
constexpr std::uint64_t kCourseBaseline = std::uint64_t{1} << 33;
constexpr std::uint64_t kCourseFullFidelity = std::uint64_t{1} << 34;
constexpr std::uint64_t kCourseFinalEval = std::uint64_t{1} << 35;

struct RstConfig {
  int pretrain_rounds = 10;    // T
  int segment_rounds = 1;      // T_s
  long long round_budget = 0;  // total communication rounds for tuning
  LocalTrainConfig default_config;
  RewardMetric reward_metric = RewardMetric::NegLossGain;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrialRecord {
  int trial_id = 0;
  int start_round = 0;  // 0 for full-fidelity trials
  PersonalizedAssignment assignment;
  double reward = 0.0;
  int rounds_consumed = 0;
  bool failed = false;
  std::vector<EvalMetrics> before;  // per-client validation, reference model
  std::vector<EvalMetrics> after;   // per-client validation, trial model
};

struct PretrainResult {
  CheckpointStore store;
  std::vector<RoundMetrics> metrics;
};

// Full course with the hand-set default config, snapshotting every round.
PretrainResult rst_pretrain(const ModelSpec& model, const Federation& fed,
                            const RstConfig& cfg, int threads = 1);

// s ~ U{1, ..., T}.
int sample_start_round(int pretrain_rounds, Rng& rng);

// Reward sign convention: higher is better for both metrics.
double metric_value(RewardMetric metric, const FedEval& eval);

// One RST trial: sample s and an assignment, replay T_s rounds from
// w0^(s), reward the validation gain over w0^(min(s+T_s, T)). A divergent
// segment yields a failed record carrying `worst_reward`.
TrialRecord rst_trial(const ModelSpec& model, const CheckpointStore& store,
                      const Federation& fed, const SearchSpace& space,
                      const PolicyParams& params, const RstConfig& cfg,
                      int trial_id, double worst_reward, int threads = 1);

// One full-fidelity trial: fresh init, `rounds` rounds with a sampled
// assignment, reward = negative weighted validation loss of the final model.
TrialRecord full_fidelity_trial(const ModelSpec& model, const Federation& fed,
                                const SearchSpace& space, const PolicyParams& params,
                                const RstConfig& cfg, int rounds, int trial_id,
                                int threads = 1);

struct TraceRow {
  int update = 0;
  int client = 0;
  std::string head;
  double value = 0.0;  // deployed candidate value (argmax / mapped mean)
};

struct TrainHpnResult {
  PolicyParams params;
  std::vector<TrialRecord> trials;
  std::vector<double> trial_wall_ms;  // timing sidecar; not reproducible
  std::vector<TraceRow> trace;
  long long rounds_consumed = 0;  // pretraining included for RST mode
  int updates = 0;
  int rejected_updates = 0;
};

enum class TrainMode { Rst, Full };

struct HpnTrainOptions {
  TrainerConfig trainer;
  std::vector<int> hidden = {64, 64};
  TrainMode mode = TrainMode::Rst;
  int full_rounds = 0;  // course length per full-fidelity trial; 0 = pretrain_rounds
  int threads = 1;
};

// The HPN training loop: repeat { trial; policy update } until the round
// budget cannot afford another trial. Clients must carry encodings.
TrainHpnResult train_hpn(const ModelSpec& model, const Federation& fed,
                         const SearchSpace& space, const CheckpointStore& store,
                         const RstConfig& cfg, const HpnTrainOptions& options);

struct FinalOutcome {
  PersonalizedAssignment assignment;
  std::vector<double> per_client_test_accuracy;
  double weighted_test_accuracy = 0.0;
  double best_valid_accuracy = 0.0;
  int best_round = 0;
  int rounds = 0;
};

// Full-fidelity evaluation of a fixed assignment: fresh init, `eval_rounds`
// rounds, test metrics taken at the best-validation round.
FinalOutcome evaluate_assignment(const ModelSpec& model, const Federation& fed,
                                 const SearchSpace& space,
                                 const PersonalizedAssignment& assignment,
                                 const LocalTrainConfig& base, int eval_rounds,
                                 std::uint64_t seed, std::uint64_t course_id,
                                 int threads = 1);

// Greedy argmax deployment of a trained policy, then evaluate_assignment.
// All methods share the final-eval course id so head-to-head comparisons see
// identical inits and minibatch streams.
FinalOutcome deploy_and_evaluate(const ModelSpec& model, const Federation& fed,
                                 const SearchSpace& space, const PolicyParams& params,
                                 const LocalTrainConfig& base, int eval_rounds,
                                 std::uint64_t seed, int threads = 1,
                                 std::uint64_t course_id = kCourseFinalEval);

std::vector<Eigen::VectorXd> client_encodings(const Federation& fed);

}  // namespace fedhpn
