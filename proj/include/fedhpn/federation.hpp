#pragma once

#include <Eigen/Core>
#include <vector>

#include "fedhpn/common.hpp"

namespace fedhpn {

// Labeled feature matrix. Rows are examples.
struct DataSet {
  Eigen::MatrixXd features;  // [num_examples x num_features]
  Eigen::VectorXi labels;
  int num_classes = 0;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index num_features() const { return features.cols(); }

  void validate() const {
    if (features.rows() != labels.size())
      throw ConfigError("dataset: feature/label count mismatch");
    if (num_classes < 1) throw ConfigError("dataset: num_classes must be >= 1");
    for (Eigen::Index i = 0; i < labels.size(); ++i)
      if (labels[i] < 0 || labels[i] >= num_classes)
        throw ConfigError("dataset: label out of range");
  }
};

// Rows of `base` selected by index, preserving order.
DataSet subset(const DataSet& base, const std::vector<int>& rows);

// Client i's data splits plus its encoding z_i (filled by the encoder).
struct ClientBundle {
  int id = 0;
  DataSet train;
  DataSet valid;
  DataSet test;
  Eigen::VectorXd encoding;
};

struct Federation {
  std::vector<ClientBundle> clients;

  int num_clients() const { return static_cast<int>(clients.size()); }

  Eigen::Index total_valid() const {
    Eigen::Index n = 0;
    for (const auto& c : clients) n += c.valid.size();
    return n;
  }

  void validate() const {
    if (clients.empty()) throw ConfigError("federation: no clients");
    for (int i = 0; i < num_clients(); ++i) {
      if (clients[i].id != i) throw ConfigError("federation: client ids must be 0..n-1");
      if (clients[i].valid.size() < 1)
        throw ConfigError("federation: client validation split is empty");
      clients[i].train.validate();
      clients[i].valid.validate();
      clients[i].test.validate();
    }
  }
};

}  // namespace fedhpn
