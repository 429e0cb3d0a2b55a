#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fedhpn/federation.hpp"
#include "fedhpn/hp_space.hpp"
#include "fedhpn/model.hpp"

namespace fedhpn {

struct LocalTrainConfig {
  double learning_rate = 0.1;
  double weight_decay = 0.0;
  int local_steps = 1;
  double dropout = 0.0;
  int batch_size = 32;

  void validate() const;
};

nlohmann::json local_cfg_to_json(const LocalTrainConfig& cfg);
LocalTrainConfig local_cfg_from_json(const nlohmann::json& j);

// Decoded sample overrides the matching fields of `base`. Recognized
// dimension names: learning_rate/lr, weight_decay/wd, local_steps/steps,
// dropout, batch_size. Dropout on a logistic-regression model is ignored
// (warned once per process).
LocalTrainConfig apply_config(const SearchSpace& space, const ConfigSample& sample,
                              const LocalTrainConfig& base, const ModelSpec& model);

// Rejects a space whose dimension names the FL boundary cannot map.
void check_space_names(const SearchSpace& space);

// Per-(round, client) rng streams for local training. Pretraining uses
// course id 0; RST trials key their streams by trial id so trials are
// independent yet replayable.
struct LocalStreams {
  std::uint64_t seed = 0;
  std::uint64_t course = 0;

  Rng at(int round, int client) const {
    return derive_rng(seed, "local", course, static_cast<std::uint64_t>(round),
                      static_cast<std::uint64_t>(client));
  }
};

// cfg.local_steps minibatch SGD steps from w; minibatches are drawn without
// replacement per epoch from `rng`. Pure: `w` is never modified. Throws
// NumericError when the iterate diverges.
ParamVector local_train(const ModelSpec& spec, const ParamVector& w,
                        const DataSet& train, const LocalTrainConfig& cfg, Rng rng);

// Weighted mean of updates, reduced in input (ascending client-id) order.
ParamVector aggregate(const std::vector<std::pair<ParamVector, double>>& updates);

struct FedEval {
  std::vector<EvalMetrics> per_client;
  double loss = 0.0;      // sum |S_i| loss_i / sum |S_i|
  double accuracy = 0.0;  // same weighting
};

enum class Split { Valid, Test };

FedEval evaluate(const ModelSpec& spec, const ParamVector& w,
                 const Federation& fed, Split split);

// One communication round: every client trains from the same incoming model
// with its own config, results are |T_i|-weighted averaged. `threads` > 1
// runs clients concurrently; the reduction order is fixed either way.
ParamVector run_round(const ModelSpec& spec, const ParamVector& w,
                      const Federation& fed,
                      const std::vector<LocalTrainConfig>& configs,
                      const LocalStreams& streams, int round, int threads = 1);

ParamVector run_round(const ModelSpec& spec, const ParamVector& w,
                      const Federation& fed, const SearchSpace& space,
                      const PersonalizedAssignment& assignment,
                      const LocalTrainConfig& base, const LocalStreams& streams,
                      int round, int threads = 1);

struct RoundMetrics {
  int round = 0;
  double valid_loss = 0.0;
  double valid_accuracy = 0.0;
};

struct CourseResult {
  ParamVector final;
  std::vector<ParamVector> checkpoints;  // filled when capture; index 0 = round 1
  std::vector<RoundMetrics> metrics;
};

// T sequential rounds starting at `first_round`; snapshots every round when
// `capture` is set. Configs are one per client (pretraining passes n copies
// of the hand-set default, which need not lie on the search grid).
CourseResult run_course(const ModelSpec& spec, const ParamVector& w0,
                        const Federation& fed,
                        const std::vector<LocalTrainConfig>& configs, int rounds,
                        bool capture, const LocalStreams& streams,
                        int first_round = 1, int threads = 1);

CourseResult run_course(const ModelSpec& spec, const ParamVector& w0,
                        const Federation& fed, const SearchSpace& space,
                        const PersonalizedAssignment& assignment,
                        const LocalTrainConfig& base, int rounds,
                        bool capture, const LocalStreams& streams,
                        int first_round = 1, int threads = 1);

// Decodes a whole assignment against `base` at the FL boundary.
std::vector<LocalTrainConfig> apply_assignment(const SearchSpace& space,
                                               const PersonalizedAssignment& assignment,
                                               const LocalTrainConfig& base,
                                               const ModelSpec& model);

}  // namespace fedhpn
