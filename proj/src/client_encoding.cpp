#include "fedhpn/client_encoding.hpp"

#include <cmath>

#include "fedhpn/rng.hpp"

namespace fedhpn {

RffProjection draw_projection(int num_features, int feature_dim, std::uint64_t seed,
                              bool use_phase) {
  if (feature_dim < 1) throw ConfigError("rff: feature_dim must be >= 1");
  if (num_features < 1) throw ConfigError("rff: num_features must be >= 1");
  RffProjection proj;
  proj.seed = seed;
  proj.use_phase = use_phase;
  proj.omegas.resize(feature_dim, num_features);
  Rng rng = derive_rng(seed, "rff");
  fill_normal(proj.omegas, rng);
  proj.phases = Eigen::VectorXd::Zero(feature_dim);
  if (use_phase)
    for (Eigen::Index j = 0; j < feature_dim; ++j)
      proj.phases[j] = 2.0 * M_PI * uniform01(rng);
  return proj;
}

Eigen::VectorXd rff_features(const Eigen::VectorXd& x, const RffProjection& proj) {
  if (x.size() != proj.num_features())
    throw ConfigError("rff_features: feature dimension mismatch");
  const double scale = std::sqrt(2.0 / static_cast<double>(proj.dim()));
  return scale * ((proj.omegas * x + proj.phases).array().cos()).matrix();
}

ClientEncoding encode_client(const DataSet& train, const RffProjection& proj,
                             int client_id) {
  if (train.size() == 0) throw ConfigError("encode_client: empty training set");
  if (train.num_features() != proj.num_features())
    throw ConfigError("encode_client: feature dimension mismatch");
  const double scale = std::sqrt(2.0 / static_cast<double>(proj.dim()));
  // [N x D] projected batch, cosine, then column means.
  Eigen::MatrixXd t = train.features * proj.omegas.transpose();
  t.rowwise() += proj.phases.transpose();
  ClientEncoding enc;
  enc.client_id = client_id;
  enc.z = scale * t.array().cos().colwise().mean().matrix().transpose();
  return enc;
}

void encode_federation(Federation& fed, const RffProjection& proj) {
  for (auto& c : fed.clients)
    c.encoding = encode_client(c.train, proj, c.id).z;
}

}  // namespace fedhpn
