#include "fedhpn/fedavg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <iostream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace fedhpn {

void LocalTrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("config: learning_rate must be > 0");
  if (weight_decay < 0.0) throw ConfigError("config: weight_decay must be >= 0");
  if (local_steps < 0) throw ConfigError("config: local_steps must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw ConfigError("config: dropout must be in [0,1)");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
}

nlohmann::json local_cfg_to_json(const LocalTrainConfig& cfg) {
  return {{"learning_rate", cfg.learning_rate},
          {"weight_decay", cfg.weight_decay},
          {"local_steps", cfg.local_steps},
          {"dropout", cfg.dropout},
          {"batch_size", cfg.batch_size}};
}

LocalTrainConfig local_cfg_from_json(const nlohmann::json& j) {
  LocalTrainConfig cfg;
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.local_steps = j.value("local_steps", cfg.local_steps);
  cfg.dropout = j.value("dropout", cfg.dropout);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.validate();
  return cfg;
}

namespace {

enum class CfgField { LearningRate, WeightDecay, LocalSteps, Dropout, BatchSize };

std::optional<CfgField> field_for_name(const std::string& name) {
  if (name == "learning_rate" || name == "lr") return CfgField::LearningRate;
  if (name == "weight_decay" || name == "wd") return CfgField::WeightDecay;
  if (name == "local_steps" || name == "steps") return CfgField::LocalSteps;
  if (name == "dropout") return CfgField::Dropout;
  if (name == "batch_size") return CfgField::BatchSize;
  return std::nullopt;
}

std::atomic<bool> warned_lr_dropout{false};

}  // namespace

void check_space_names(const SearchSpace& space) {
  for (const auto& d : space.dims)
    if (!field_for_name(d.name))
      throw ConfigError("space: dimension '" + d.name +
                        "' does not name a local-training hyperparameter");
}

LocalTrainConfig apply_config(const SearchSpace& space, const ConfigSample& sample,
                              const LocalTrainConfig& base, const ModelSpec& model) {
  LocalTrainConfig cfg = base;
  const auto values = decode(space, sample);
  for (const auto& [name, value] : values) {
    const auto field = field_for_name(name);
    if (!field)
      throw ConfigError("space: dimension '" + name +
                        "' does not name a local-training hyperparameter");
    switch (*field) {
      case CfgField::LearningRate: cfg.learning_rate = value; break;
      case CfgField::WeightDecay: cfg.weight_decay = value; break;
      case CfgField::LocalSteps: cfg.local_steps = static_cast<int>(std::llround(value)); break;
      case CfgField::Dropout:
        if (model.kind == ModelKind::LogisticRegression) {
          if (!warned_lr_dropout.exchange(true))
            std::cerr << "warning: dropout dimension ignored for logistic regression\n";
          cfg.dropout = 0.0;
        } else {
          cfg.dropout = value;
        }
        break;
      case CfgField::BatchSize: cfg.batch_size = static_cast<int>(std::llround(value)); break;
    }
  }
  cfg.validate();
  return cfg;
}

std::vector<LocalTrainConfig> apply_assignment(const SearchSpace& space,
                                               const PersonalizedAssignment& assignment,
                                               const LocalTrainConfig& base,
                                               const ModelSpec& model) {
  std::vector<LocalTrainConfig> configs;
  configs.reserve(assignment.per_client.size());
  for (const auto& sample : assignment.per_client)
    configs.push_back(apply_config(space, sample, base, model));
  return configs;
}

ParamVector local_train(const ModelSpec& spec, const ParamVector& w,
                        const DataSet& train, const LocalTrainConfig& cfg, Rng rng) {
  cfg.validate();
  if (train.size() == 0) throw ConfigError("local_train: empty training set");
  ParamVector out = w;
  if (cfg.local_steps == 0) return out;

  const int n = static_cast<int>(train.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  int pos = n;  // forces a shuffle on the first step

  ParamVector grad;
  for (int step = 0; step < cfg.local_steps; ++step) {
    if (pos >= n) {
      std::shuffle(order.begin(), order.end(), rng);
      pos = 0;
    }
    const int take = std::min(cfg.batch_size, n - pos);
    std::vector<int> rows(order.begin() + pos, order.begin() + pos + take);
    pos += take;
    const DataSet batch = subset(train, rows);
    loss_and_grad(spec, out, batch, cfg.weight_decay, cfg.dropout, rng, grad);
    out -= cfg.learning_rate * grad;
    if (!out.allFinite())
      throw NumericError("local_train: parameters diverged at step " +
                         std::to_string(step + 1));
  }
  return out;
}

DataSet subset(const DataSet& base, const std::vector<int>& rows) {
  DataSet out;
  out.num_classes = base.num_classes;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), base.features.cols());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = base.features.row(rows[i]);
    out.labels[static_cast<Eigen::Index>(i)] = base.labels[rows[i]];
  }
  return out;
}

ParamVector aggregate(const std::vector<std::pair<ParamVector, double>>& updates) {
  if (updates.empty()) throw ConfigError("aggregate: no updates");
  const Eigen::Index d = updates.front().first.size();
  double total = 0.0;
  for (const auto& [u, weight] : updates) {
    if (u.size() != d) throw ConfigError("aggregate: parameter length mismatch");
    if (!(weight > 0.0)) throw ConfigError("aggregate: weights must be > 0");
    total += weight;
  }
  // Normalized weights keep the single-client case exactly the identity.
  ParamVector out = ParamVector::Zero(d);
  for (const auto& [u, weight] : updates) out += (weight / total) * u;
  return out;
}

FedEval evaluate(const ModelSpec& spec, const ParamVector& w,
                 const Federation& fed, Split split) {
  FedEval out;
  double wsum = 0.0, loss = 0.0, acc = 0.0;
  for (const auto& client : fed.clients) {
    const DataSet& data = split == Split::Valid ? client.valid : client.test;
    if (data.size() == 0) throw ConfigError("evaluate: empty split for client");
    const EvalMetrics m = evaluate_model(spec, w, data);
    const auto sz = static_cast<double>(data.size());
    out.per_client.push_back(m);
    wsum += sz;
    loss += sz * m.loss;
    acc += sz * m.accuracy;
  }
  out.loss = loss / wsum;
  out.accuracy = acc / wsum;
  return out;
}

ParamVector run_round(const ModelSpec& spec, const ParamVector& w,
                      const Federation& fed,
                      const std::vector<LocalTrainConfig>& configs,
                      const LocalStreams& streams, int round, int threads) {
  const int n = fed.num_clients();
  if (static_cast<int>(configs.size()) != n)
    throw ConfigError("run_round: assignment does not cover all clients");

  std::vector<ParamVector> locals(n);
  auto train_client = [&](int i) {
    locals[i] = local_train(spec, w, fed.clients[i].train, configs[i],
                            streams.at(round, i));
  };
  if (threads > 1 && n > 1) {
    std::vector<std::future<void>> futs;
    std::atomic<int> next{0};
    const int workers = std::min(threads, n);
    for (int t = 0; t < workers; ++t)
      futs.push_back(std::async(std::launch::async, [&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) train_client(i);
      }));
    for (auto& f : futs) f.get();
  } else {
    for (int i = 0; i < n; ++i) train_client(i);
  }

  std::vector<std::pair<ParamVector, double>> updates;
  updates.reserve(n);
  for (int i = 0; i < n; ++i)
    updates.emplace_back(std::move(locals[i]),
                         static_cast<double>(fed.clients[i].train.size()));
  return aggregate(updates);
}

ParamVector run_round(const ModelSpec& spec, const ParamVector& w,
                      const Federation& fed, const SearchSpace& space,
                      const PersonalizedAssignment& assignment,
                      const LocalTrainConfig& base, const LocalStreams& streams,
                      int round, int threads) {
  return run_round(spec, w, fed, apply_assignment(space, assignment, base, spec),
                   streams, round, threads);
}

CourseResult run_course(const ModelSpec& spec, const ParamVector& w0,
                        const Federation& fed,
                        const std::vector<LocalTrainConfig>& configs, int rounds,
                        bool capture, const LocalStreams& streams,
                        int first_round, int threads) {
  if (rounds < 1) throw ConfigError("run_course: rounds must be >= 1");
  CourseResult result;
  result.final = w0;
  if (capture) result.checkpoints.reserve(rounds);
  for (int t = 0; t < rounds; ++t) {
    const int round = first_round + t;
    try {
      result.final = run_round(spec, result.final, fed, configs, streams, round, threads);
    } catch (const NumericError& e) {
      throw NumericError("round " + std::to_string(round) + ": " + e.what());
    }
    if (capture) result.checkpoints.push_back(result.final);
    const FedEval ev = evaluate(spec, result.final, fed, Split::Valid);
    result.metrics.push_back({round, ev.loss, ev.accuracy});
  }
  return result;
}

CourseResult run_course(const ModelSpec& spec, const ParamVector& w0,
                        const Federation& fed, const SearchSpace& space,
                        const PersonalizedAssignment& assignment,
                        const LocalTrainConfig& base, int rounds,
                        bool capture, const LocalStreams& streams,
                        int first_round, int threads) {
  return run_course(spec, w0, fed, apply_assignment(space, assignment, base, spec),
                    rounds, capture, streams, first_round, threads);
}

}  // namespace fedhpn
