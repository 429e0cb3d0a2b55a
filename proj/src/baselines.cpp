#include "fedhpn/baselines.hpp"

#include <chrono>
#include <cmath>

namespace fedhpn {

void BaselineConfig::validate() const {
  if (num_candidates < 1) throw ConfigError("baseline: num_candidates must be >= 1");
  if (rounds_per_candidate < 0)
    throw ConfigError("baseline: rounds_per_candidate must be >= 0");
  if (subsample_size < 1) throw ConfigError("baseline: subsample_size must be >= 1");
}

ConfigSample uniform_config_draw(const SearchSpace& space, Rng& rng) {
  ConfigSample sample;
  sample.log_prob = 0.0;
  for (const auto& dim : space.dims) {
    DimValue v;
    if (dim.kind == DimKind::Discrete) {
      const int k = static_cast<int>(dim.candidates.size());
      v.index = uniform_int(rng, 0, k - 1);
      sample.log_prob += -std::log(static_cast<double>(k));
    } else {
      v.value = dim.from_unit(uniform01(rng));
    }
    sample.values.push_back(v);
  }
  return sample;
}

namespace {

BaselineResult random_search(const ModelSpec& model, const Federation& fed,
                             const SearchSpace& space, const LocalTrainConfig& base,
                             long long round_budget, const BaselineConfig& cfg,
                             bool personalized, int threads) {
  cfg.validate();
  check_space_names(space);
  const int n = fed.num_clients();
  const int num_candidates = personalized ? cfg.subsample_size : cfg.num_candidates;
  int rounds_each = cfg.rounds_per_candidate;
  if (rounds_each == 0)
    rounds_each = static_cast<int>(round_budget / num_candidates);
  if (rounds_each < 1)
    throw ConfigError("baseline: budget infeasible for candidate count");
  if (static_cast<long long>(num_candidates) * rounds_each > round_budget)
    throw ConfigError("baseline: K * rounds_per_candidate exceeds the budget");

  BaselineResult result;
  result.method = personalized ? "prs" : "rs";
  Rng rng = derive_rng(cfg.seed, personalized ? "rs-personalized" : "rs-global");

  for (int k = 0; k < num_candidates; ++k) {
    CandidateRecord rec;
    rec.candidate_id = k;
    if (personalized) {
      for (int i = 0; i < n; ++i)
        rec.assignment.per_client.push_back(uniform_config_draw(space, rng));
    } else {
      const ConfigSample draw = uniform_config_draw(space, rng);
      rec.assignment.per_client.assign(n, draw);
    }
    rec.rounds_consumed = rounds_each;

    const auto t0 = std::chrono::steady_clock::now();
    try {
      const ParamVector w0 = model_init(
          model, derive_seed(cfg.seed, "candidate-init", static_cast<std::uint64_t>(k)));
      const LocalStreams streams{cfg.seed,
                                 kCourseBaseline + static_cast<std::uint64_t>(k)};
      CourseResult course = run_course(
          model, w0, fed, apply_assignment(space, rec.assignment, base, model),
          rounds_each, /*capture=*/false, streams, 1, threads);
      rec.best_valid_accuracy = 0.0;
      for (const auto& m : course.metrics)
        rec.best_valid_accuracy = std::max(rec.best_valid_accuracy, m.valid_accuracy);
    } catch (const NumericError&) {
      rec.failed = true;
      rec.best_valid_accuracy = -1.0;
    }
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    result.rounds_consumed += rec.rounds_consumed;
    result.candidates.push_back(std::move(rec));
  }

  const CandidateRecord* best = &result.candidates.front();
  for (const auto& rec : result.candidates)
    if (rec.best_valid_accuracy > best->best_valid_accuracy) best = &rec;
  result.winner = best->assignment;
  result.winner_id = best->candidate_id;
  result.winner_valid_accuracy = best->best_valid_accuracy;
  return result;
}

}  // namespace

BaselineResult rs_global(const ModelSpec& model, const Federation& fed,
                         const SearchSpace& space, const LocalTrainConfig& base,
                         long long round_budget, const BaselineConfig& cfg,
                         int threads) {
  return random_search(model, fed, space, base, round_budget, cfg,
                       /*personalized=*/false, threads);
}

BaselineResult rs_personalized(const ModelSpec& model, const Federation& fed,
                               const SearchSpace& space, const LocalTrainConfig& base,
                               long long round_budget, const BaselineConfig& cfg,
                               int threads) {
  return random_search(model, fed, space, base, round_budget, cfg,
                       /*personalized=*/true, threads);
}

}  // namespace fedhpn
