#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fedhpn/federation.hpp"
#include "fedhpn/rng.hpp"

namespace fedhpn {

// Dirichlet label-skew partition of a base dataset.
struct PartitionSpec {
  int num_clients = 1;
  double alpha = 1.0;
  int min_per_client = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Clustered federation where cluster k's feature magnitudes are scaled by
// feature_scale[k]; per-cluster optimal learning rates then differ by
// construction.
struct ClusterSpec {
  int num_clusters = 2;
  int clients_per_cluster = 1;
  std::vector<double> feature_scale;
  int num_features = 2;
  int num_classes = 2;
  int examples_per_client = 100;
  std::array<double, 3> split_ratio = {0.6, 0.2, 0.2};
  std::uint64_t seed = 0;

  void validate() const;
};

// Gaussian class blobs with means on a scaled simplex (pairwise separation
// 2) and balanced labels. Requires num_features >= num_classes.
DataSet make_base_dataset(int num_classes, int num_features, int num_examples,
                          std::uint64_t seed);

// Splits each class's examples across clients by Dir(alpha) shares; every
// example is assigned exactly once. Draws violating min_per_client are
// resampled (bounded retries).
std::vector<DataSet> dirichlet_partition(const DataSet& base, const PartitionSpec& spec);

// Per-client stratified train/valid/test split. Valid and test are kept
// non-empty by stealing from train when rounding starves them.
struct SplitResult {
  DataSet train, valid, test;
};
SplitResult split_dataset(const DataSet& data, const std::array<double, 3>& ratio,
                          Rng& rng);

struct ClusterFederation {
  Federation fed;
  std::vector<int> cluster_of;  // client id -> cluster id
};
ClusterFederation make_cluster_federation(const ClusterSpec& spec);

// Dirichlet benchmark builder: base blobs -> partition -> per-client splits.
struct DirichletFedSpec {
  int num_clients = 10;
  double alpha = 1.0;
  int min_per_client = 0;  // 0 = 2 * batch-size default applied by config layer
  int num_classes = 10;
  int num_features = 16;
  int num_examples = 4000;
  std::array<double, 3> split_ratio = {0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
};
Federation make_dirichlet_federation(const DirichletFedSpec& spec);

// CSV ingestion: header row with a `label` column, float feature columns,
// optional `client` column for explicit assignment (else round-robin).
struct CsvLayout {
  std::array<double, 3> split_ratio = {0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
};
Federation load_csv_federation(const std::filesystem::path& path, int num_clients,
                               const CsvLayout& layout);

// On-disk federation exchange format used between pipeline stages:
// client_NN/{train,valid,test}.csv plus federation.json.
void save_federation(const Federation& fed, const std::filesystem::path& dir,
                     const std::vector<int>* cluster_of = nullptr);
Federation load_federation(const std::filesystem::path& dir);

}  // namespace fedhpn
