#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace fedhpn {

enum class DimKind { Discrete, Continuous };
enum class DimScale { Linear, Log };

// One searchable hyperparameter. Discrete dims carry an ordered candidate
// list; continuous dims carry bounds plus the unit-interval mapping scale.
struct Dimension {
  std::string name;
  DimKind kind = DimKind::Discrete;
  std::vector<double> candidates;  // Discrete only; strictly increasing
  double lo = 0.0, hi = 0.0;       // Continuous only
  DimScale scale = DimScale::Linear;

  void validate() const;
  // Maps a unit-interval coordinate to the dimension's natural units.
  double from_unit(double u) const;
};

// The local-training subspace. Dimension order is canonical: it fixes the
// policy-network head order and the column order of every serialized sample.
struct SearchSpace {
  std::vector<Dimension> dims;

  void validate() const;
  int num_dims() const { return static_cast<int>(dims.size()); }
  bool all_discrete() const;
  int dim_index(const std::string& name) const;  // -1 when absent
};

// A realized value for one dimension. Discrete dims store the candidate
// index; continuous dims store the natural-units value together with the
// pre-squash Gaussian draw the policy scored.
struct DimValue {
  int index = 0;
  double value = 0.0;
  double gauss = 0.0;
};

// One drawn configuration c_i with the log-probability of the draw.
struct ConfigSample {
  std::vector<DimValue> values;
  double log_prob = 0.0;

  void validate(const SearchSpace& space) const;
};

// One ConfigSample per client, indexed by client id.
struct PersonalizedAssignment {
  std::vector<ConfigSample> per_client;
};

// Cardinality of a (possibly infinite) search space. `digits` is the exact
// decimal count whenever the space is finite, even past the u64 range.
struct SpaceSize {
  bool infinite = false;
  bool fits_u64 = true;
  std::uint64_t count = 0;
  std::string digits;
};

SpaceSize space_size(const SearchSpace& space);
SpaceSize personalized_space_size(const SearchSpace& space, int num_clients);

// Dimension name -> concrete value, for handing to the FL boundary.
std::map<std::string, double> decode(const SearchSpace& space,
                                     const ConfigSample& sample);

nlohmann::json render_space(const SearchSpace& space);
SearchSpace parse_space(const nlohmann::json& j);

bool operator==(const Dimension& a, const Dimension& b);
bool operator==(const SearchSpace& a, const SearchSpace& b);

}  // namespace fedhpn
