#include "fedhpn/data_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "fedhpn/csv.hpp"

namespace fedhpn {

void PartitionSpec::validate() const {
  if (num_clients < 1) throw ConfigError("partition: num_clients must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("partition: alpha must be > 0");
  if (min_per_client < 0) throw ConfigError("partition: min_per_client must be >= 0");
}

void ClusterSpec::validate() const {
  if (num_clusters < 1) throw ConfigError("clusters: num_clusters must be >= 1");
  if (clients_per_cluster < 1)
    throw ConfigError("clusters: clients_per_cluster must be >= 1");
  if (static_cast<int>(feature_scale.size()) != num_clusters)
    throw ConfigError("clusters: feature_scale needs one entry per cluster");
  for (double s : feature_scale)
    if (!(s > 0.0)) throw ConfigError("clusters: feature scales must be > 0");
  if (num_features < num_classes)
    throw ConfigError("clusters: num_features must be >= num_classes");
  if (examples_per_client < 5)
    throw ConfigError("clusters: examples_per_client too small to split");
  const double sum = split_ratio[0] + split_ratio[1] + split_ratio[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("clusters: split_ratio must sum to 1");
}

DataSet make_base_dataset(int num_classes, int num_features, int num_examples,
                          std::uint64_t seed) {
  if (num_classes < 1 || num_features < 1 || num_examples < 1)
    throw ConfigError("base dataset: counts must be >= 1");
  if (num_features < num_classes)
    throw ConfigError("base dataset: num_features must be >= num_classes");

  // Class means at (3/sqrt(2)) * e_c: a regular simplex with pairwise
  // distance 3, comfortably past the >= 2 separation floor so unit-noise
  // blobs stay learnable (Bayes accuracy ~0.93 for two classes).
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(num_classes, num_features);
  for (int c = 0; c < num_classes; ++c) means(c, c) = 3.0 / std::sqrt(2.0);

  DataSet data;
  data.num_classes = num_classes;
  data.features.resize(num_examples, num_features);
  data.labels.resize(num_examples);
  Rng rng = derive_rng(seed, "base-dataset");
  Eigen::VectorXd noise(num_features);
  for (int i = 0; i < num_examples; ++i) {
    const int c = i % num_classes;  // balanced within +-1
    data.labels[i] = c;
    fill_normal(noise, rng);
    data.features.row(i) = means.row(c) + noise.transpose();
  }
  return data;
}

std::vector<DataSet> dirichlet_partition(const DataSet& base, const PartitionSpec& spec) {
  spec.validate();
  base.validate();
  const int n = spec.num_clients;
  if (base.size() < static_cast<Eigen::Index>(n) * std::max(spec.min_per_client, 1))
    throw ConfigError("partition: base dataset too small for min_per_client");

  std::vector<std::vector<int>> by_class(base.num_classes);
  for (Eigen::Index i = 0; i < base.size(); ++i)
    by_class[base.labels[i]].push_back(static_cast<int>(i));

  Rng rng = derive_rng(spec.seed, "dirichlet");
  const int max_retries = 500;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::vector<std::vector<int>> assigned(n);
    for (int c = 0; c < base.num_classes; ++c) {
      const auto& rows = by_class[c];
      if (rows.empty()) continue;
      const Eigen::VectorXd p = dirichlet_draw(rng, spec.alpha, n);
      const auto m = static_cast<double>(rows.size());
      // Rounded cumulative shares; the last boundary is pinned to the end.
      std::size_t prev = 0;
      double cum = 0.0;
      for (int k = 0; k < n; ++k) {
        cum += p[k];
        const std::size_t bound =
            k == n - 1 ? rows.size()
                       : std::min(rows.size(), static_cast<std::size_t>(
                                                   std::llround(cum * m)));
        for (std::size_t r = prev; r < bound; ++r) assigned[k].push_back(rows[r]);
        prev = std::max(prev, bound);
      }
    }
    const bool ok = std::all_of(assigned.begin(), assigned.end(), [&](const auto& a) {
      return static_cast<int>(a.size()) >= spec.min_per_client;
    });
    if (!ok) continue;
    std::vector<DataSet> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) {
      std::sort(assigned[k].begin(), assigned[k].end());
      out.push_back(subset(base, assigned[k]));
    }
    return out;
  }
  throw ConfigError("partition: could not satisfy min_per_client after " +
                    std::to_string(max_retries) + " draws (alpha too small?)");
}

SplitResult split_dataset(const DataSet& data, const std::array<double, 3>& ratio,
                          Rng& rng) {
  const double sum = ratio[0] + ratio[1] + ratio[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split_ratio must sum to 1");
  if (data.size() < 3) throw ConfigError("split: need at least 3 examples per client");

  std::vector<std::vector<int>> by_class(data.num_classes);
  for (Eigen::Index i = 0; i < data.size(); ++i)
    by_class[data.labels[i]].push_back(static_cast<int>(i));

  std::vector<int> train_rows, valid_rows, test_rows;
  for (auto& rows : by_class) {
    if (rows.empty()) continue;
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto m = static_cast<double>(rows.size());
    const auto t_end = static_cast<std::size_t>(std::llround(ratio[0] * m));
    const auto v_end = std::min(
        rows.size(), static_cast<std::size_t>(std::llround((ratio[0] + ratio[1]) * m)));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i < t_end) train_rows.push_back(rows[i]);
      else if (i < v_end) valid_rows.push_back(rows[i]);
      else test_rows.push_back(rows[i]);
    }
  }
  // Rounding on tiny classes can starve valid/test; steal from train.
  auto steal = [&](std::vector<int>& dst) {
    if (dst.empty()) {
      if (train_rows.empty()) throw ConfigError("split: not enough examples");
      dst.push_back(train_rows.back());
      train_rows.pop_back();
    }
  };
  steal(valid_rows);
  steal(test_rows);
  if (train_rows.empty()) throw ConfigError("split: empty training split");

  std::sort(train_rows.begin(), train_rows.end());
  std::sort(valid_rows.begin(), valid_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {subset(data, train_rows), subset(data, valid_rows), subset(data, test_rows)};
}

ClusterFederation make_cluster_federation(const ClusterSpec& spec) {
  spec.validate();
  ClusterFederation out;
  int id = 0;
  for (int k = 0; k < spec.num_clusters; ++k) {
    for (int j = 0; j < spec.clients_per_cluster; ++j, ++id) {
      DataSet local = make_base_dataset(
          spec.num_classes, spec.num_features, spec.examples_per_client,
          derive_rng(spec.seed, "cluster-client", k, j)());
      local.features *= spec.feature_scale[k];
      Rng split_rng = derive_rng(spec.seed, "cluster-split", k, j);
      SplitResult s = split_dataset(local, spec.split_ratio, split_rng);
      ClientBundle c;
      c.id = id;
      c.train = std::move(s.train);
      c.valid = std::move(s.valid);
      c.test = std::move(s.test);
      out.fed.clients.push_back(std::move(c));
      out.cluster_of.push_back(k);
    }
  }
  out.fed.validate();
  return out;
}

Federation make_dirichlet_federation(const DirichletFedSpec& spec) {
  DataSet base = make_base_dataset(spec.num_classes, spec.num_features,
                                   spec.num_examples, derive_rng(spec.seed, "base")());
  PartitionSpec part;
  part.num_clients = spec.num_clients;
  part.alpha = spec.alpha;
  part.min_per_client = spec.min_per_client;
  part.seed = spec.seed;
  std::vector<DataSet> parts = dirichlet_partition(base, part);

  Federation fed;
  for (int i = 0; i < spec.num_clients; ++i) {
    Rng split_rng = derive_rng(spec.seed, "client-split", i);
    SplitResult s = split_dataset(parts[i], spec.split_ratio, split_rng);
    ClientBundle c;
    c.id = i;
    c.train = std::move(s.train);
    c.valid = std::move(s.valid);
    c.test = std::move(s.test);
    fed.clients.push_back(std::move(c));
  }
  fed.validate();
  return fed;
}

namespace {

void write_dataset_csv(const DataSet& data, const std::filesystem::path& path) {
  CsvWriter w(path);
  std::vector<std::string> header = {"label"};
  for (Eigen::Index f = 0; f < data.num_features(); ++f)
    header.push_back("f" + std::to_string(f));
  w.row(header);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    std::vector<std::string> cells = {std::to_string(data.labels[i])};
    for (Eigen::Index f = 0; f < data.num_features(); ++f)
      cells.push_back(fmt_double(data.features(i, f)));
    w.row(cells);
  }
}

DataSet read_dataset_csv(const std::filesystem::path& path, int num_classes) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw ConfigError(path.string() + ": empty dataset");
  const auto& header = rows.front();
  if (header.empty() || header[0] != "label")
    throw ConfigError(path.string() + ":1: expected 'label' as first column");
  const auto num_features = static_cast<Eigen::Index>(header.size()) - 1;
  const auto n = static_cast<Eigen::Index>(rows.size()) - 1;
  if (n == 0) throw ConfigError(path.string() + ": empty dataset");

  DataSet data;
  data.num_classes = num_classes;
  data.features.resize(n, num_features);
  data.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i) + 1];
    if (static_cast<Eigen::Index>(r.size()) != num_features + 1)
      throw ConfigError(path.string() + ":" + std::to_string(i + 2) +
                        ": wrong column count");
    try {
      data.labels[i] = std::stoi(r[0]);
      for (Eigen::Index f = 0; f < num_features; ++f)
        data.features(i, f) = std::stod(r[static_cast<std::size_t>(f) + 1]);
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ":" + std::to_string(i + 2) +
                        ": malformed numeric cell");
    }
  }
  return data;
}

std::string client_dirname(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "client_%03d", id);
  return buf;
}

}  // namespace

Federation load_csv_federation(const std::filesystem::path& path, int num_clients,
                               const CsvLayout& layout) {
  if (num_clients < 1) throw ConfigError("csv: num_clients must be >= 1");
  const auto rows = read_csv(path);
  if (rows.empty()) throw ConfigError(path.string() + ": empty dataset");
  const auto& header = rows.front();
  int label_col = -1, client_col = -1;
  std::vector<int> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") label_col = static_cast<int>(c);
    else if (header[c] == "client") client_col = static_cast<int>(c);
    else feature_cols.push_back(static_cast<int>(c));
  }
  if (label_col < 0) throw ConfigError(path.string() + ":1: missing 'label' column");
  if (rows.size() == 1) throw ConfigError(path.string() + ": empty dataset");
  if (feature_cols.empty()) throw ConfigError(path.string() + ":1: no feature columns");

  const auto n_rows = rows.size() - 1;
  std::vector<std::vector<int>> per_client(num_clients);
  std::vector<int> labels(n_rows);
  Eigen::MatrixXd features(static_cast<Eigen::Index>(n_rows),
                           static_cast<Eigen::Index>(feature_cols.size()));
  int max_label = 0;
  for (std::size_t i = 0; i < n_rows; ++i) {
    const auto& r = rows[i + 1];
    const int lineno = static_cast<int>(i) + 2;
    if (r.size() != header.size())
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": wrong column count");
    try {
      labels[i] = std::stoi(r[static_cast<std::size_t>(label_col)]);
      for (std::size_t f = 0; f < feature_cols.size(); ++f)
        features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) =
            std::stod(r[static_cast<std::size_t>(feature_cols[f])]);
      const int cid = client_col >= 0
                          ? std::stoi(r[static_cast<std::size_t>(client_col)])
                          : static_cast<int>(i) % num_clients;
      if (cid < 0 || cid >= num_clients)
        throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                          ": client id out of range");
      per_client[cid].push_back(static_cast<int>(i));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": malformed numeric cell");
    }
    if (labels[i] < 0)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": negative label");
    max_label = std::max(max_label, labels[i]);
  }

  DataSet all;
  all.features = std::move(features);
  all.labels = Eigen::Map<Eigen::VectorXi>(labels.data(),
                                           static_cast<Eigen::Index>(labels.size()));
  all.num_classes = max_label + 1;

  Federation fed;
  for (int k = 0; k < num_clients; ++k) {
    if (per_client[k].empty())
      throw ConfigError(path.string() + ": client " + std::to_string(k) +
                        " received no rows");
    DataSet local = subset(all, per_client[k]);
    Rng split_rng = derive_rng(layout.seed, "csv-split", k);
    SplitResult s = split_dataset(local, layout.split_ratio, split_rng);
    ClientBundle c;
    c.id = k;
    c.train = std::move(s.train);
    c.valid = std::move(s.valid);
    c.test = std::move(s.test);
    fed.clients.push_back(std::move(c));
  }
  fed.validate();
  return fed;
}

void save_federation(const Federation& fed, const std::filesystem::path& dir,
                     const std::vector<int>* cluster_of) {
  fed.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["num_clients"] = fed.num_clients();
  meta["num_classes"] = fed.clients.front().train.num_classes;
  meta["num_features"] = fed.clients.front().train.num_features();
  if (cluster_of) meta["cluster_of"] = *cluster_of;
  for (const auto& c : fed.clients) {
    const auto cdir = dir / client_dirname(c.id);
    std::filesystem::create_directories(cdir);
    write_dataset_csv(c.train, cdir / "train.csv");
    write_dataset_csv(c.valid, cdir / "valid.csv");
    write_dataset_csv(c.test, cdir / "test.csv");
  }
  std::ofstream out(dir / "federation.json", std::ios::trunc);
  out << meta.dump(2) << "\n";
}

Federation load_federation(const std::filesystem::path& dir) {
  std::ifstream in(dir / "federation.json");
  if (!in)
    throw MissingArtifactError("federation metadata missing under " + dir.string());
  nlohmann::json meta;
  in >> meta;
  const int n = meta.at("num_clients").get<int>();
  const int num_classes = meta.at("num_classes").get<int>();

  Federation fed;
  for (int i = 0; i < n; ++i) {
    const auto cdir = dir / client_dirname(i);
    ClientBundle c;
    c.id = i;
    c.train = read_dataset_csv(cdir / "train.csv", num_classes);
    c.valid = read_dataset_csv(cdir / "valid.csv", num_classes);
    c.test = read_dataset_csv(cdir / "test.csv", num_classes);
    fed.clients.push_back(std::move(c));
  }
  fed.validate();
  return fed;
}

}  // namespace fedhpn
