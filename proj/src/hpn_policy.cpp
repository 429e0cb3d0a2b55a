#include "fedhpn/hpn_policy.hpp"

#include <cmath>

#include "fedhpn/common.hpp"

namespace fedhpn {

namespace {

using Eigen::Index;
using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kVarLo = 1e-6;
constexpr double kVarHi = 10.0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Trunk layer widths: input -> hidden... ; heads hang off the last entry.
std::vector<int> trunk_widths(const PolicyArch& arch) {
  std::vector<int> w;
  w.push_back(arch.input_dim);
  w.insert(w.end(), arch.hidden.begin(), arch.hidden.end());
  return w;
}

struct Layout {
  std::vector<Index> trunk_off;  // per trunk layer
  std::vector<Index> head_off;   // per dimension
  Index total = 0;
};

Layout layout_of(const PolicyArch& arch) {
  Layout lay;
  const auto tw = trunk_widths(arch);
  Index off = 0;
  for (std::size_t l = 0; l + 1 < tw.size(); ++l) {
    lay.trunk_off.push_back(off);
    off += static_cast<Index>(tw[l + 1]) * tw[l] + tw[l + 1];
  }
  const int rep = tw.back();
  for (int j = 0; j < arch.space.num_dims(); ++j) {
    lay.head_off.push_back(off);
    off += static_cast<Index>(arch.head_width(j)) * rep + arch.head_width(j);
  }
  lay.total = off;
  return lay;
}

struct ForwardCache {
  std::vector<VectorXd> h;         // h[0] = z, h[l] = tanh layer outputs
  std::vector<VectorXd> head_out;  // raw head outputs per dimension
};

ForwardCache forward_cache(const PolicyParams& params, const VectorXd& z) {
  const auto& arch = params.arch;
  const auto tw = trunk_widths(arch);
  const Layout lay = layout_of(arch);
  ForwardCache c;
  c.h.resize(tw.size());
  c.h[0] = z;
  for (std::size_t l = 0; l + 1 < tw.size(); ++l) {
    Map<const MatrixXd> W(params.theta.data() + lay.trunk_off[l], tw[l + 1], tw[l]);
    Map<const VectorXd> b(params.theta.data() + lay.trunk_off[l] +
                              static_cast<Index>(tw[l + 1]) * tw[l],
                          tw[l + 1]);
    c.h[l + 1] = (W * c.h[l] + b).array().tanh();
  }
  const VectorXd& rep = c.h.back();
  c.head_out.resize(arch.space.dims.size());
  for (int j = 0; j < arch.space.num_dims(); ++j) {
    const int k = arch.head_width(j);
    Map<const MatrixXd> H(params.theta.data() + lay.head_off[j], k, rep.size());
    Map<const VectorXd> cvec(params.theta.data() + lay.head_off[j] +
                                 static_cast<Index>(k) * rep.size(),
                             k);
    c.head_out[j] = H * rep + cvec;
  }
  return c;
}

HeadDistribution head_distribution(const Dimension& dim, const VectorXd& out) {
  HeadDistribution d;
  d.kind = dim.kind;
  if (dim.kind == DimKind::Discrete) {
    VectorXd logits = out;
    const double m = logits.maxCoeff();
    VectorXd e = (logits.array() - m).exp();
    d.probs = e / e.sum();
  } else {
    d.mean = out[0];
    d.var = std::clamp(std::exp(out[1]), kVarLo, kVarHi);
  }
  if ((d.kind == DimKind::Discrete && !d.probs.allFinite()) ||
      (d.kind == DimKind::Continuous && !(std::isfinite(d.mean) && std::isfinite(d.var))))
    throw NumericError("hpn_forward: non-finite head output");
  return d;
}

// Backprop one client's head deltas (dL/d head_out) into the flat gradient.
void backprop_client(const PolicyParams& params, const ForwardCache& cache,
                     const std::vector<VectorXd>& head_deltas, VectorXd& grad) {
  const auto& arch = params.arch;
  const auto tw = trunk_widths(arch);
  const Layout lay = layout_of(arch);
  const VectorXd& rep = cache.h.back();

  VectorXd delta_rep = VectorXd::Zero(rep.size());
  for (int j = 0; j < arch.space.num_dims(); ++j) {
    const int k = arch.head_width(j);
    Map<const MatrixXd> H(params.theta.data() + lay.head_off[j], k, rep.size());
    Map<MatrixXd> gH(grad.data() + lay.head_off[j], k, rep.size());
    Map<VectorXd> gc(grad.data() + lay.head_off[j] + static_cast<Index>(k) * rep.size(),
                     k);
    gH += head_deltas[j] * rep.transpose();
    gc += head_deltas[j];
    delta_rep += H.transpose() * head_deltas[j];
  }

  VectorXd delta_h = std::move(delta_rep);
  for (std::size_t l = tw.size() - 1; l-- > 0;) {
    // delta through tanh at layer l+1
    VectorXd delta_a =
        delta_h.cwiseProduct((1.0 - cache.h[l + 1].array().square()).matrix());
    Map<const MatrixXd> W(params.theta.data() + lay.trunk_off[l], tw[l + 1], tw[l]);
    Map<MatrixXd> gW(grad.data() + lay.trunk_off[l], tw[l + 1], tw[l]);
    Map<VectorXd> gb(grad.data() + lay.trunk_off[l] +
                         static_cast<Index>(tw[l + 1]) * tw[l],
                     tw[l + 1]);
    gW += delta_a * cache.h[l].transpose();
    gb += delta_a;
    if (l > 0) delta_h = W.transpose() * delta_a;
  }
}

}  // namespace

void PolicyArch::validate() const {
  if (input_dim < 1) throw ConfigError("policy: input_dim must be >= 1");
  for (int h : hidden)
    if (h < 1) throw ConfigError("policy: hidden width must be >= 1");
  if (hidden.empty()) throw ConfigError("policy: needs at least one hidden layer");
  space.validate();
}

int PolicyArch::head_width(int dim) const {
  const auto& d = space.dims[static_cast<std::size_t>(dim)];
  return d.kind == DimKind::Discrete ? static_cast<int>(d.candidates.size()) : 2;
}

Eigen::Index PolicyArch::param_count() const { return layout_of(*this).total; }

Eigen::Index PolicyArch::trunk_offset(int layer) const {
  return layout_of(*this).trunk_off.at(static_cast<std::size_t>(layer));
}

Eigen::Index PolicyArch::head_offset(int dim) const {
  return layout_of(*this).head_off.at(static_cast<std::size_t>(dim));
}

PolicyParams policy_init(const PolicyArch& arch, std::uint64_t seed) {
  arch.validate();
  PolicyParams p;
  p.arch = arch;
  p.theta = VectorXd::Zero(arch.param_count());
  Rng rng = derive_rng(seed, "policy-init");
  const auto tw = trunk_widths(arch);
  const Layout lay = layout_of(arch);
  for (std::size_t l = 0; l + 1 < tw.size(); ++l) {
    const double r = std::sqrt(6.0 / (tw[l] + tw[l + 1]));
    for (Index k = 0; k < static_cast<Index>(tw[l + 1]) * tw[l]; ++k)
      p.theta[lay.trunk_off[l] + k] = (2.0 * uniform01(rng) - 1.0) * r;
  }
  // Heads stay zero: uniform Categoricals, N(0, 1) Gaussians.
  return p;
}

std::vector<HeadDistribution> hpn_forward(const PolicyParams& params,
                                          const Eigen::VectorXd& z) {
  if (z.size() != params.arch.input_dim)
    throw ConfigError("hpn_forward: encoding dimension mismatch");
  const ForwardCache cache = forward_cache(params, z);
  std::vector<HeadDistribution> heads;
  heads.reserve(params.arch.space.dims.size());
  for (int j = 0; j < params.arch.space.num_dims(); ++j)
    heads.push_back(head_distribution(params.arch.space.dims[static_cast<std::size_t>(j)],
                                      cache.head_out[static_cast<std::size_t>(j)]));
  return heads;
}

PersonalizedAssignment sample_assignment(const PolicyParams& params,
                                         const std::vector<Eigen::VectorXd>& encodings,
                                         Rng& rng) {
  if (encodings.empty()) throw ConfigError("sample_assignment: no encodings");
  PersonalizedAssignment assignment;
  assignment.per_client.reserve(encodings.size());
  for (const auto& z : encodings) {
    const auto heads = hpn_forward(params, z);
    ConfigSample sample;
    sample.log_prob = 0.0;
    for (std::size_t j = 0; j < heads.size(); ++j) {
      const auto& dim = params.arch.space.dims[j];
      DimValue v;
      if (heads[j].kind == DimKind::Discrete) {
        const double u = uniform01(rng);
        double cum = 0.0;
        int idx = static_cast<int>(heads[j].probs.size()) - 1;
        for (int k = 0; k < heads[j].probs.size(); ++k) {
          cum += heads[j].probs[k];
          if (u < cum) {
            idx = k;
            break;
          }
        }
        v.index = idx;
        sample.log_prob += std::log(heads[j].probs[idx]);
      } else {
        const double g = heads[j].mean + std::sqrt(heads[j].var) * normal(rng);
        v.gauss = g;
        v.value = dim.from_unit(sigmoid(g));
        const double d = g - heads[j].mean;
        sample.log_prob +=
            -0.5 * std::log(2.0 * M_PI * heads[j].var) - d * d / (2.0 * heads[j].var);
      }
      sample.values.push_back(v);
    }
    assignment.per_client.push_back(std::move(sample));
  }
  return assignment;
}

double log_prob_and_grad(const PolicyParams& params,
                         const std::vector<Eigen::VectorXd>& encodings,
                         const PersonalizedAssignment& assignment,
                         Eigen::VectorXd& grad) {
  if (assignment.per_client.size() != encodings.size())
    throw ConfigError("log_prob_and_grad: assignment/encoding count mismatch");
  grad = VectorXd::Zero(params.theta.size());
  double total = 0.0;
  for (std::size_t i = 0; i < encodings.size(); ++i) {
    const ForwardCache cache = forward_cache(params, encodings[i]);
    const auto& sample = assignment.per_client[i];
    if (sample.values.size() != params.arch.space.dims.size())
      throw ConfigError("log_prob_and_grad: sample arity mismatch");
    std::vector<VectorXd> head_deltas(params.arch.space.dims.size());
    for (std::size_t j = 0; j < params.arch.space.dims.size(); ++j) {
      const auto& dim = params.arch.space.dims[j];
      const HeadDistribution d = head_distribution(dim, cache.head_out[j]);
      if (dim.kind == DimKind::Discrete) {
        const int idx = sample.values[j].index;
        if (idx < 0 || idx >= d.probs.size())
          throw ConfigError("log_prob_and_grad: candidate index out of range");
        total += std::log(d.probs[idx]);
        VectorXd delta = -d.probs;
        delta[idx] += 1.0;  // onehot(sample) - softmax
        head_deltas[j] = std::move(delta);
      } else {
        const double g = sample.values[j].gauss;
        const double diff = g - d.mean;
        total += -0.5 * std::log(2.0 * M_PI * d.var) - diff * diff / (2.0 * d.var);
        VectorXd delta(2);
        delta[0] = diff / d.var;  // d logp / d mean_raw
        // d logp / d var_raw through var = exp(var_raw), zero when clamped.
        const double raw_var = std::exp(cache.head_out[j][1]);
        const double dvar = raw_var > kVarLo && raw_var < kVarHi ? d.var : 0.0;
        delta[1] = (diff * diff / (2.0 * d.var * d.var) - 0.5 / d.var) * dvar;
        head_deltas[j] = std::move(delta);
      }
    }
    backprop_client(params, cache, head_deltas, grad);
  }
  return total;
}

double entropy_and_grad(const PolicyParams& params,
                        const std::vector<Eigen::VectorXd>& encodings,
                        Eigen::VectorXd& grad) {
  grad = VectorXd::Zero(params.theta.size());
  double total = 0.0;
  for (const auto& z : encodings) {
    const ForwardCache cache = forward_cache(params, z);
    std::vector<VectorXd> head_deltas(params.arch.space.dims.size());
    for (std::size_t j = 0; j < params.arch.space.dims.size(); ++j) {
      const auto& dim = params.arch.space.dims[j];
      const HeadDistribution d = head_distribution(dim, cache.head_out[j]);
      if (dim.kind == DimKind::Discrete) {
        const VectorXd logp = d.probs.array().log();
        const double h = -d.probs.dot(logp);
        total += h;
        head_deltas[j] = (-d.probs.array() * (logp.array() + h)).matrix();
      } else {
        total += 0.5 * std::log(2.0 * M_PI * M_E * d.var);
        VectorXd delta = VectorXd::Zero(2);
        const double raw_var = std::exp(cache.head_out[j][1]);
        delta[1] = raw_var > kVarLo && raw_var < kVarHi ? 0.5 : 0.0;
        head_deltas[j] = std::move(delta);
      }
    }
    backprop_client(params, cache, head_deltas, grad);
  }
  return total;
}

ConfigSample argmax_sample(const PolicyParams& params, const Eigen::VectorXd& z) {
  const auto heads = hpn_forward(params, z);
  ConfigSample sample;
  sample.log_prob = 0.0;
  for (std::size_t j = 0; j < heads.size(); ++j) {
    const auto& dim = params.arch.space.dims[j];
    DimValue v;
    if (heads[j].kind == DimKind::Discrete) {
      Index idx = 0;
      heads[j].probs.maxCoeff(&idx);
      v.index = static_cast<int>(idx);
    } else {
      v.gauss = heads[j].mean;
      v.value = dim.from_unit(sigmoid(heads[j].mean));
    }
    sample.values.push_back(v);
  }
  return sample;
}

void TrainerConfig::validate() const {
  if (!(policy_lr > 0.0)) throw ConfigError("trainer: policy_lr must be > 0");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0))
    throw ConfigError("trainer: baseline_decay must be in [0,1)");
  if (entropy_coef < 0.0) throw ConfigError("trainer: entropy_coef must be >= 0");
  if (trials_per_update < 1)
    throw ConfigError("trainer: trials_per_update must be >= 1");
}

PolicyTrainer::PolicyTrainer(TrainerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

bool PolicyTrainer::update(PolicyParams& params,
                           const std::vector<Eigen::VectorXd>& encodings,
                           const std::vector<PolicyTrial>& trials) {
  if (trials.empty()) throw ConfigError("reinforce: needs at least one trial");
  VectorXd step = VectorXd::Zero(params.theta.size());
  VectorXd grad;
  for (const auto& trial : trials) {
    const double advantage = trial.reward - (cfg_.use_baseline ? ema_ : 0.0);
    log_prob_and_grad(params, encodings, trial.assignment, grad);
    step += advantage * grad;
  }
  step /= static_cast<double>(trials.size());
  if (cfg_.entropy_coef > 0.0) {
    VectorXd egrad;
    entropy_and_grad(params, encodings, egrad);
    step += cfg_.entropy_coef * egrad;
  }

  VectorXd proposed = params.theta + cfg_.policy_lr * step;
  bool applied = proposed.allFinite();
  if (applied) params.theta = std::move(proposed);
  else ++rejected_;

  // EMA baseline updated after use, in trial order.
  if (cfg_.use_baseline)
    for (const auto& trial : trials)
      ema_ = cfg_.baseline_decay * ema_ + (1.0 - cfg_.baseline_decay) * trial.reward;
  return applied;
}

}  // namespace fedhpn
