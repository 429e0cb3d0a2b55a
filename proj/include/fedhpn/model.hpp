#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "fedhpn/federation.hpp"
#include "fedhpn/rng.hpp"

namespace fedhpn {

// Flat float64 model parameters; the unit of aggregation and checkpointing.
using ParamVector = Eigen::VectorXd;

enum class ModelKind { LogisticRegression, Feedforward };

struct LayerSlice {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

// Shape of a differentiable classifier over flat parameters. Feedforward
// layers use tanh activations; dropout (train-time only) acts on hidden
// activations.
struct ModelSpec {
  ModelKind kind = ModelKind::LogisticRegression;
  int num_features = 0;
  int num_classes = 0;
  std::vector<int> hidden;  // Feedforward only

  void validate() const;
  Eigen::Index param_count() const;
  // Named slices (layerN.weight / layerN.bias) into the flat vector.
  std::vector<LayerSlice> shape_map() const;
  // Layer widths input -> hidden... -> output.
  std::vector<int> widths() const;
  std::string id() const;

  static ModelSpec logistic_regression(int num_features, int num_classes);
  static ModelSpec feedforward(int num_features, int num_classes,
                               std::vector<int> hidden);
};

// Deterministic init: weights uniform in [-r, r] with r = sqrt(6/(fan_in+fan_out)),
// biases zero.
ParamVector model_init(const ModelSpec& spec, std::uint64_t seed);

// Mean cross-entropy plus (weight_decay/2)*||W||^2 over weight (not bias)
// entries, with the exact analytic gradient. Dropout masks come from `rng`
// with inverted 1/(1-p) scaling; pass dropout = 0 to disable. Throws
// NumericError on non-finite loss.
double loss_and_grad(const ModelSpec& spec, const ParamVector& w,
                     const DataSet& batch, double weight_decay, double dropout,
                     Rng& rng, ParamVector& grad);

// Loss only (no gradient); used by finite-difference oracles and evaluation.
double loss_value(const ModelSpec& spec, const ParamVector& w,
                  const DataSet& batch, double weight_decay);

// Deterministic eval-mode metrics: mean cross-entropy (no decay term) and
// argmax accuracy, ties resolved to the lowest class index.
struct EvalMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

EvalMetrics evaluate_model(const ModelSpec& spec, const ParamVector& w,
                           const DataSet& data);

}  // namespace fedhpn
