#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "fedhpn/federation.hpp"

namespace fedhpn {

// Shared random-Fourier-feature projection; one draw per experiment, used
// verbatim by every client so encodings are comparable.
struct RffProjection {
  Eigen::MatrixXd omegas;  // [D x num_features], entries N(0, 1)
  Eigen::VectorXd phases;  // [D] in [0, 2pi); all-zero unless use_phase
  bool use_phase = false;
  std::uint64_t seed = 0;

  Eigen::Index dim() const { return omegas.rows(); }
  Eigen::Index num_features() const { return omegas.cols(); }
};

struct ClientEncoding {
  Eigen::VectorXd z;
  int client_id = 0;
};

// Frequencies drawn N(0, I) from (seed, "rff"); phases U[0, 2pi) when the
// unbiased variant is enabled. The default (no phase) matches
// phi_j(x) = sqrt(2/D) cos(omega_j^T x) exactly; with phases the features
// give an unbiased RBF kernel estimate.
RffProjection draw_projection(int num_features, int feature_dim, std::uint64_t seed,
                              bool use_phase = false);

Eigen::VectorXd rff_features(const Eigen::VectorXd& x, const RffProjection& proj);

// z_i: the mean of the training examples' RFF vectors.
ClientEncoding encode_client(const DataSet& train, const RffProjection& proj,
                             int client_id = 0);

// Fills every client's encoding in place.
void encode_federation(Federation& fed, const RffProjection& proj);

}  // namespace fedhpn
