#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedhpn/fedavg.hpp"
#include "fedhpn/rst_trainer.hpp"

namespace fedhpn {

struct BaselineConfig {
  int num_candidates = 8;        // rs_global draws
  int rounds_per_candidate = 0;  // 0 = split the budget evenly
  int subsample_size = 100;      // rs_personalized joint draws
  std::uint64_t seed = 0;

  void validate() const;
};

// Uniform draw over the space: uniform candidate index per discrete dim,
// uniform unit-interval coordinate (mapped by scale) per continuous dim.
ConfigSample uniform_config_draw(const SearchSpace& space, Rng& rng);

struct CandidateRecord {
  int candidate_id = 0;
  PersonalizedAssignment assignment;
  double best_valid_accuracy = 0.0;  // selection score over the truncated course
  int rounds_consumed = 0;
  bool failed = false;
  double wall_ms = 0.0;  // timing sidecar; not reproducible
};

struct BaselineResult {
  std::string method;
  PersonalizedAssignment winner;
  int winner_id = 0;
  double winner_valid_accuracy = 0.0;
  long long rounds_consumed = 0;
  std::vector<CandidateRecord> candidates;
};

// Non-personalized random search: K uniform configs, each applied to every
// client and scored by best-seen weighted validation accuracy over a
// truncated course; ties keep the earliest candidate.
BaselineResult rs_global(const ModelSpec& model, const Federation& fed,
                         const SearchSpace& space, const LocalTrainConfig& base,
                         long long round_budget, const BaselineConfig& cfg,
                         int threads = 1);

// Personalized random search over the Cartesian product space: a subsample
// of joint per-client assignments searched under the same budget split.
BaselineResult rs_personalized(const ModelSpec& model, const Federation& fed,
                               const SearchSpace& space, const LocalTrainConfig& base,
                               long long round_budget, const BaselineConfig& cfg,
                               int threads = 1);

}  // namespace fedhpn
