#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fedhpn/fedavg.hpp"
#include "fedhpn/model.hpp"

namespace fedhpn {

// Binary parameter snapshot: 8-byte magic/version header, little-endian u64
// parameter count, then float64 parameters. Shared by model checkpoints and
// policy snapshots.
void write_param_vector(const std::filesystem::path& path, const ParamVector& w);
ParamVector read_param_vector(const std::filesystem::path& path);

// Round-indexed global model snapshots w0^(1..T) from a pretraining course.
struct CheckpointStore {
  std::vector<ParamVector> snapshots;  // snapshots[t-1] is round t
  std::string model_id;
  std::uint64_t seed = 0;
  LocalTrainConfig default_config;

  int rounds() const { return static_cast<int>(snapshots.size()); }

  const ParamVector& at(int round) const {
    if (round < 1 || round > rounds())
      throw MissingArtifactError("checkpoint store: round " + std::to_string(round) +
                                 " outside 1.." + std::to_string(rounds()));
    return snapshots[static_cast<std::size_t>(round - 1)];
  }

  // One file per round plus a JSON index.
  void save(const std::filesystem::path& dir) const;
  static CheckpointStore load(const std::filesystem::path& dir);
};

}  // namespace fedhpn
