#include <doctest.h>

#include <cmath>

#include "fedhpn/client_encoding.hpp"
#include "fedhpn/data_gen.hpp"
#include "support/oracles.hpp"

using namespace fedhpn;

namespace {

DataSet gaussian_cloud(int n, int features, double shift, Rng& rng) {
  DataSet d;
  d.num_classes = 1;
  d.features.resize(n, features);
  d.labels = Eigen::VectorXi::Zero(n);
  fill_normal(d.features, rng);
  d.features.array() += shift;
  return d;
}

double kernel_mae(int feature_dim, std::uint64_t seed, int pairs) {
  Rng rng = derive_rng(seed, "pairs");
  const int F = 5;
  const RffProjection proj = draw_projection(F, feature_dim, seed, /*use_phase=*/true);
  double total = 0.0;
  for (int p = 0; p < pairs; ++p) {
    // random points in the unit ball
    Eigen::VectorXd x(F), y(F);
    fill_normal(x, rng);
    fill_normal(y, rng);
    x *= uniform01(rng) / x.norm();
    y *= uniform01(rng) / y.norm();
    const double approx = rff_features(x, proj).dot(rff_features(y, proj));
    const double exact = std::exp(-(x - y).squaredNorm() / 2.0);
    total += std::abs(approx - exact);
  }
  return total / pairs;
}

}  // namespace

TEST_SUITE("client-encoding") {

TEST_CASE("draw_projection is deterministic with standard-normal entries") {
  const RffProjection a = draw_projection(10, 100, 42);
  const RffProjection b = draw_projection(10, 100, 42);
  CHECK(a.omegas == b.omegas);
  CHECK_FALSE(a.use_phase);
  CHECK(a.phases.isZero());

  const RffProjection one = draw_projection(3, 1, 1);
  CHECK(one.omegas.rows() == 1);

  // moment check over 1e5 entries
  const RffProjection big = draw_projection(10, 10000, 7);
  std::vector<double> entries(big.omegas.data(), big.omegas.data() + big.omegas.size());
  CHECK(std::abs(oracles::mean(entries)) <= 0.02);
  CHECK(std::abs(oracles::variance(entries) - 1.0) <= 0.05);
}

TEST_CASE("phase mode draws phases in [0, 2pi)") {
  const RffProjection p = draw_projection(4, 512, 3, /*use_phase=*/true);
  CHECK(p.phases.minCoeff() >= 0.0);
  CHECK(p.phases.maxCoeff() < 2.0 * M_PI);
  // same seed, same frequencies as the paper-mode draw
  const RffProjection q = draw_projection(4, 512, 3, /*use_phase=*/false);
  CHECK(p.omegas == q.omegas);
}

TEST_CASE("rff_features closed forms and bounds") {
  const int D = 16;
  const RffProjection proj = draw_projection(3, D, 5);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd phi0 = rff_features(zero, proj);
  for (Eigen::Index j = 0; j < D; ++j)
    CHECK(phi0[j] == doctest::Approx(std::sqrt(2.0 / D)).epsilon(1e-14));

  Rng rng = derive_rng(6, "x");
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd x(3);
    fill_normal(x, rng);
    CHECK(rff_features(x, proj).norm() <= std::sqrt(2.0) + 1e-12);
  }
}

TEST_CASE("shift sensitivity respects the cosine Lipschitz bound") {
  const int D = 32;
  const RffProjection proj = draw_projection(4, D, 9);
  Rng rng = derive_rng(10, "pairs");
  const double scale = std::sqrt(2.0 / D);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd x(4), y(4);
    fill_normal(x, rng);
    fill_normal(y, rng);
    const Eigen::VectorXd fx = rff_features(x, proj);
    const Eigen::VectorXd fy = rff_features(y, proj);
    const Eigen::VectorXd proj_delta = proj.omegas * (x - y);
    for (Eigen::Index j = 0; j < D; ++j)
      CHECK(std::abs(fx[j] - fy[j]) <= scale * std::abs(proj_delta[j]) + 1e-12);
  }
}

TEST_CASE("phase-mode kernel approximation improves with D") {
  // quick version of the acceptance check: fewer pairs and seeds
  std::vector<double> med64, med256, med1024;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    med64.push_back(kernel_mae(64, seed, 40));
    med256.push_back(kernel_mae(256, seed, 40));
    med1024.push_back(kernel_mae(1024, seed, 40));
  }
  CHECK(oracles::median(med256) < oracles::median(med64));
  CHECK(oracles::median(med1024) < oracles::median(med256));
  CHECK(oracles::median(med1024) <= 0.05);
}

TEST_CASE("encode_client: single example, permutation invariance, purity") {
  Rng rng = derive_rng(11, "data");
  const RffProjection proj = draw_projection(4, 64, 2);

  DataSet one = gaussian_cloud(1, 4, 0.0, rng);
  const ClientEncoding enc = encode_client(one, proj, 3);
  CHECK(enc.client_id == 3);
  const Eigen::VectorXd direct = rff_features(one.features.row(0).transpose(), proj);
  CHECK((enc.z - direct).cwiseAbs().maxCoeff() <= 1e-14);

  DataSet cloud = gaussian_cloud(30, 4, 0.5, rng);
  DataSet reversed = cloud;
  reversed.features = cloud.features.colwise().reverse().eval();
  reversed.labels = cloud.labels.reverse().eval();
  const Eigen::VectorXd za = encode_client(cloud, proj).z;
  const Eigen::VectorXd zb = encode_client(reversed, proj).z;
  CHECK((za - zb).cwiseAbs().maxCoeff() <= 1e-12);

  DataSet empty;
  empty.num_classes = 1;
  empty.features.resize(0, 4);
  empty.labels.resize(0);
  CHECK_THROWS_AS(encode_client(empty, proj), ConfigError);
}

TEST_CASE("identical data encodes identically; separated clusters separate") {
  std::vector<double> same_dist, far_dist;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = derive_rng(seed, "sep");
    const RffProjection proj = draw_projection(4, 128, seed);
    DataSet a = gaussian_cloud(1000, 4, 0.0, rng);
    DataSet b = gaussian_cloud(1000, 4, 0.0, rng);   // same distribution
    DataSet c = gaussian_cloud(1000, 4, 10.0, rng);  // far-separated cluster

    const Eigen::VectorXd za = encode_client(a, proj).z;
    const Eigen::VectorXd zb = encode_client(b, proj).z;
    const Eigen::VectorXd zc = encode_client(c, proj).z;
    CHECK((encode_client(a, proj).z - za).isZero());  // identical data, identical z
    same_dist.push_back((za - zb).norm());
    far_dist.push_back((za - zc).norm());
  }
  CHECK(oracles::median(far_dist) >= 10.0 * oracles::median(same_dist));
}

TEST_CASE("encoding dimension is independent of the number of examples") {
  Rng rng = derive_rng(12, "n");
  const RffProjection proj = draw_projection(4, 96, 4);
  const DataSet small = gaussian_cloud(5, 4, 0.0, rng);
  const DataSet large = gaussian_cloud(500, 4, 0.0, rng);
  CHECK(encode_client(small, proj).z.size() == 96);
  CHECK(encode_client(large, proj).z.size() == 96);
}

TEST_CASE("encode_federation fills every client") {
  ClusterSpec spec;
  spec.num_clusters = 2;
  spec.clients_per_cluster = 2;
  spec.feature_scale = {1.0, 2.0};
  spec.num_features = 4;
  spec.num_classes = 2;
  spec.examples_per_client = 30;
  spec.seed = 6;
  Federation fed = make_cluster_federation(spec).fed;
  const RffProjection proj = draw_projection(4, 32, 6);
  encode_federation(fed, proj);
  for (const auto& c : fed.clients) {
    CHECK(c.encoding.size() == 32);
    CHECK(c.encoding.cwiseAbs().maxCoeff() <= std::sqrt(2.0 / 32) + 1e-12);
  }
}

}  // TEST_SUITE
