#include "fedhpn/model.hpp"

#include <cmath>

namespace fedhpn {

namespace {

using Eigen::Index;
using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Row-wise softmax with max-subtraction; returns per-row log-sum-exp.
VectorXd softmax_rows(MatrixXd& logits) {
  VectorXd lse(logits.rows());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - m).exp();
    const double s = logits.row(i).sum();
    lse[i] = m + std::log(s);
    logits.row(i) /= s;
  }
  return lse;
}

struct LayerView {
  Map<const MatrixXd> weight;
  Map<const VectorXd> bias;
};

LayerView layer_view(const ParamVector& w, Index offset, int in, int out) {
  return {Map<const MatrixXd>(w.data() + offset, out, in),
          Map<const VectorXd>(w.data() + offset + static_cast<Index>(out) * in, out)};
}

}  // namespace

void ModelSpec::validate() const {
  if (num_features < 1) throw ConfigError("model: num_features must be >= 1");
  if (num_classes < 1) throw ConfigError("model: num_classes must be >= 1");
  for (int h : hidden)
    if (h < 1) throw ConfigError("model: hidden width must be >= 1");
  if (kind == ModelKind::LogisticRegression && !hidden.empty())
    throw ConfigError("model: logistic_regression takes no hidden layers");
}

std::vector<int> ModelSpec::widths() const {
  std::vector<int> w;
  w.push_back(num_features);
  if (kind == ModelKind::Feedforward)
    w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(num_classes);
  return w;
}

Eigen::Index ModelSpec::param_count() const {
  const auto ws = widths();
  Index d = 0;
  for (std::size_t l = 0; l + 1 < ws.size(); ++l)
    d += static_cast<Index>(ws[l + 1]) * ws[l] + ws[l + 1];
  return d;
}

std::vector<LayerSlice> ModelSpec::shape_map() const {
  const auto ws = widths();
  std::vector<LayerSlice> slices;
  Index off = 0;
  for (std::size_t l = 0; l + 1 < ws.size(); ++l) {
    const Index nw = static_cast<Index>(ws[l + 1]) * ws[l];
    slices.push_back({"layer" + std::to_string(l) + ".weight", off, nw});
    off += nw;
    slices.push_back({"layer" + std::to_string(l) + ".bias", off, ws[l + 1]});
    off += ws[l + 1];
  }
  return slices;
}

std::string ModelSpec::id() const {
  std::string s = kind == ModelKind::LogisticRegression ? "logistic_regression"
                                                        : "feedforward";
  for (int h : hidden) s += "_" + std::to_string(h);
  s += "_f" + std::to_string(num_features) + "_c" + std::to_string(num_classes);
  return s;
}

ModelSpec ModelSpec::logistic_regression(int num_features, int num_classes) {
  ModelSpec m;
  m.kind = ModelKind::LogisticRegression;
  m.num_features = num_features;
  m.num_classes = num_classes;
  m.validate();
  return m;
}

ModelSpec ModelSpec::feedforward(int num_features, int num_classes,
                                 std::vector<int> hidden) {
  ModelSpec m;
  m.kind = ModelKind::Feedforward;
  m.num_features = num_features;
  m.num_classes = num_classes;
  m.hidden = std::move(hidden);
  m.validate();
  return m;
}

ParamVector model_init(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector w = ParamVector::Zero(spec.param_count());
  Rng rng = derive_rng(seed, "model-init");
  const auto ws = spec.widths();
  Index off = 0;
  for (std::size_t l = 0; l + 1 < ws.size(); ++l) {
    const int in = ws[l], out = ws[l + 1];
    const double r = std::sqrt(6.0 / (in + out));
    for (Index k = 0; k < static_cast<Index>(out) * in; ++k)
      w[off + k] = (2.0 * uniform01(rng) - 1.0) * r;
    off += static_cast<Index>(out) * in + out;  // biases stay zero
  }
  return w;
}

double loss_and_grad(const ModelSpec& spec, const ParamVector& w,
                     const DataSet& batch, double weight_decay, double dropout,
                     Rng& rng, ParamVector& grad) {
  spec.validate();
  batch.validate();
  if (batch.size() == 0) throw ConfigError("loss_and_grad: empty batch");
  if (w.size() != spec.param_count())
    throw ConfigError("loss_and_grad: parameter count mismatch");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw ConfigError("loss_and_grad: dropout must be in [0,1)");

  const auto ws = spec.widths();
  const std::size_t num_layers = ws.size() - 1;
  const Index batch_size = batch.size();

  std::vector<Index> offsets(num_layers);
  {
    Index off = 0;
    for (std::size_t l = 0; l < num_layers; ++l) {
      offsets[l] = off;
      off += static_cast<Index>(ws[l + 1]) * ws[l] + ws[l + 1];
    }
  }

  // Forward. acts[l] holds the layer-l output after activation and dropout;
  // tanh_acts[l] the pre-dropout tanh output needed by backprop.
  std::vector<MatrixXd> acts(num_layers + 1), tanh_acts(num_layers), masks(num_layers);
  acts[0] = batch.features;
  const double keep = 1.0 - dropout;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const auto lv = layer_view(w, offsets[l], ws[l], ws[l + 1]);
    MatrixXd z = acts[l] * lv.weight.transpose();
    z.rowwise() += lv.bias.transpose();
    if (l + 1 == num_layers) {
      acts[l + 1] = std::move(z);  // output logits
      break;
    }
    tanh_acts[l] = z.array().tanh();
    if (dropout > 0.0) {
      MatrixXd m(batch_size, ws[l + 1]);
      for (Index i = 0; i < batch_size; ++i)
        for (Index j = 0; j < ws[l + 1]; ++j)
          m(i, j) = uniform01(rng) < keep ? 1.0 / keep : 0.0;
      masks[l] = std::move(m);
      acts[l + 1] = tanh_acts[l].cwiseProduct(masks[l]);
    } else {
      acts[l + 1] = tanh_acts[l];
    }
  }

  MatrixXd probs = acts[num_layers];
  const VectorXd lse = softmax_rows(probs);
  double loss = 0.0;
  for (Index i = 0; i < batch_size; ++i)
    loss += lse[i] - acts[num_layers](i, batch.labels[i]);
  loss /= static_cast<double>(batch_size);

  double decay_term = 0.0;
  grad = ParamVector::Zero(w.size());

  // dLoss/dlogits = (softmax - onehot) / B
  MatrixXd delta = probs;
  for (Index i = 0; i < batch_size; ++i) delta(i, batch.labels[i]) -= 1.0;
  delta /= static_cast<double>(batch_size);

  for (std::size_t l = num_layers; l-- > 0;) {
    const auto lv = layer_view(w, offsets[l], ws[l], ws[l + 1]);
    const Index nw = static_cast<Index>(ws[l + 1]) * ws[l];
    Map<MatrixXd> gw(grad.data() + offsets[l], ws[l + 1], ws[l]);
    Map<VectorXd> gb(grad.data() + offsets[l] + nw, ws[l + 1]);
    gw = delta.transpose() * acts[l];
    gb = delta.colwise().sum().transpose();
    if (weight_decay > 0.0) {
      gw += weight_decay * lv.weight;
      decay_term += 0.5 * weight_decay * lv.weight.squaredNorm();
    }
    if (l == 0) break;
    MatrixXd da = delta * lv.weight;
    if (dropout > 0.0) da = da.cwiseProduct(masks[l - 1]);
    delta = da.cwiseProduct(
        (1.0 - tanh_acts[l - 1].array().square()).matrix());
  }

  loss += decay_term;
  if (!std::isfinite(loss))
    throw NumericError("loss_and_grad: non-finite loss (divergence)");
  return loss;
}

double loss_value(const ModelSpec& spec, const ParamVector& w,
                  const DataSet& batch, double weight_decay) {
  spec.validate();
  if (batch.size() == 0) throw ConfigError("loss_value: empty batch");
  const auto ws = spec.widths();
  const std::size_t num_layers = ws.size() - 1;
  Index off = 0;
  MatrixXd a = batch.features;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const auto lv = layer_view(w, off, ws[l], ws[l + 1]);
    MatrixXd z = a * lv.weight.transpose();
    z.rowwise() += lv.bias.transpose();
    a = l + 1 == num_layers ? std::move(z) : MatrixXd(z.array().tanh());
    off += static_cast<Index>(ws[l + 1]) * ws[l] + ws[l + 1];
  }
  MatrixXd logits = a;
  const VectorXd lse = softmax_rows(a);
  double loss = 0.0;
  for (Index i = 0; i < batch.size(); ++i)
    loss += lse[i] - logits(i, batch.labels[i]);
  loss /= static_cast<double>(batch.size());
  if (weight_decay > 0.0) {
    off = 0;
    for (std::size_t l = 0; l < num_layers; ++l) {
      const auto lv = layer_view(w, off, ws[l], ws[l + 1]);
      loss += 0.5 * weight_decay * lv.weight.squaredNorm();
      off += static_cast<Index>(ws[l + 1]) * ws[l] + ws[l + 1];
    }
  }
  if (!std::isfinite(loss)) throw NumericError("loss_value: non-finite loss");
  return loss;
}

EvalMetrics evaluate_model(const ModelSpec& spec, const ParamVector& w,
                           const DataSet& data) {
  spec.validate();
  if (data.size() == 0) throw ConfigError("evaluate_model: empty dataset");
  const auto ws = spec.widths();
  const std::size_t num_layers = ws.size() - 1;
  Index off = 0;
  MatrixXd a = data.features;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const auto lv = layer_view(w, off, ws[l], ws[l + 1]);
    MatrixXd z = a * lv.weight.transpose();
    z.rowwise() += lv.bias.transpose();
    a = l + 1 == num_layers ? std::move(z) : MatrixXd(z.array().tanh());
    off += static_cast<Index>(ws[l + 1]) * ws[l] + ws[l + 1];
  }
  MatrixXd logits = a;
  const VectorXd lse = softmax_rows(a);
  double loss = 0.0;
  Index correct = 0;
  for (Index i = 0; i < data.size(); ++i) {
    loss += lse[i] - logits(i, data.labels[i]);
    Index pred = 0;
    logits.row(i).maxCoeff(&pred);  // first max: lowest index wins ties
    if (pred == data.labels[i]) ++correct;
  }
  EvalMetrics m;
  m.loss = loss / static_cast<double>(data.size());
  m.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return m;
}

}  // namespace fedhpn
