#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "fedhpn/hp_space.hpp"
#include "fedhpn/rng.hpp"

namespace fedhpn {

// Policy architecture: a shared tanh trunk over the client encoding with one
// output head per search dimension. Discrete heads emit |candidates| logits;
// continuous heads emit (mean_raw, var_raw).
struct PolicyArch {
  int input_dim = 0;
  std::vector<int> hidden = {64, 64};
  SearchSpace space;

  void validate() const;
  int head_width(int dim) const;
  Eigen::Index param_count() const;
  // Offsets into the flat parameter vector (weights first, then bias).
  Eigen::Index trunk_offset(int layer) const;
  Eigen::Index head_offset(int dim) const;
};

// Flat float64 policy parameters theta; persisted in the same binary format
// as model checkpoints.
struct PolicyParams {
  PolicyArch arch;
  Eigen::VectorXd theta;
};

// Xavier-uniform trunk, zero heads: every initial Categorical is uniform and
// every initial Gaussian is N(0, 1).
PolicyParams policy_init(const PolicyArch& arch, std::uint64_t seed);

struct HeadDistribution {
  DimKind kind = DimKind::Discrete;
  Eigen::VectorXd probs;  // Categorical over candidates
  double mean = 0.0;      // Gaussian over the pre-squash variable
  double var = 0.0;
};

// One HeadDistribution per search dimension for one client encoding.
std::vector<HeadDistribution> hpn_forward(const PolicyParams& params,
                                          const Eigen::VectorXd& z);

// Draws one configuration per client: Categorical candidate indices and
// Box-Muller Gaussian draws squashed through a sigmoid onto each continuous
// dimension. log_prob sums Categorical log-masses and Gaussian log-densities
// of the pre-squash draws.
PersonalizedAssignment sample_assignment(const PolicyParams& params,
                                         const std::vector<Eigen::VectorXd>& encodings,
                                         Rng& rng);

// Total log P(assignment | encodings) with its exact analytic gradient in
// theta layout. The assignment must carry the pre-squash Gaussian draws it
// was sampled with.
double log_prob_and_grad(const PolicyParams& params,
                         const std::vector<Eigen::VectorXd>& encodings,
                         const PersonalizedAssignment& assignment,
                         Eigen::VectorXd& grad);

// Sum of head entropies over clients and dimensions, with gradient.
double entropy_and_grad(const PolicyParams& params,
                        const std::vector<Eigen::VectorXd>& encodings,
                        Eigen::VectorXd& grad);

// Greedy deployment: argmax candidate per Categorical head, sigmoid-mapped
// mean per Gaussian head.
ConfigSample argmax_sample(const PolicyParams& params, const Eigen::VectorXd& z);

struct TrainerConfig {
  double policy_lr = 0.01;
  bool use_baseline = true;  // EMA reward baseline
  double baseline_decay = 0.9;
  double entropy_coef = 0.0;
  int trials_per_update = 1;

  void validate() const;
};

struct PolicyTrial {
  PersonalizedAssignment assignment;
  double reward = 0.0;
};

// REINFORCE with an optional EMA baseline and entropy bonus. Stateful only
// through the baseline; updates are pure in theta (a non-finite step is
// rejected and theta kept).
class PolicyTrainer {
 public:
  explicit PolicyTrainer(TrainerConfig cfg);

  // Returns false when the step was rejected as non-finite.
  bool update(PolicyParams& params, const std::vector<Eigen::VectorXd>& encodings,
              const std::vector<PolicyTrial>& trials);

  double baseline() const { return ema_; }
  int rejected_updates() const { return rejected_; }

 private:
  TrainerConfig cfg_;
  double ema_ = 0.0;
  int rejected_ = 0;
};

}  // namespace fedhpn
