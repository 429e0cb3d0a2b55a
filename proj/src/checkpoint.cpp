#include "fedhpn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace fedhpn {

namespace {

constexpr char kMagic[8] = {'F', 'H', 'P', 'N', 'P', 'V', '0', '1'};

void put_u64_le(std::ofstream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64_le(std::ifstream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

std::string round_filename(int round) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "round_%06d.bin", round);
  return buf;
}

}  // namespace

void write_param_vector(const std::filesystem::path& path, const ParamVector& w) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MissingArtifactError("cannot open for write: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put_u64_le(out, static_cast<std::uint64_t>(w.size()));
  static_assert(sizeof(double) == 8);
  // float64 payload is written as-is; this code targets little-endian hosts.
  out.write(reinterpret_cast<const char*>(w.data()),
            static_cast<std::streamsize>(w.size() * sizeof(double)));
  if (!out) throw MissingArtifactError("write failed: " + path.string());
}

ParamVector read_param_vector(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw MissingArtifactError("bad magic/version in " + path.string());
  const std::uint64_t n = get_u64_le(in);
  ParamVector w(static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(w.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw MissingArtifactError("truncated parameter file: " + path.string());
  return w;
}

void CheckpointStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json index;
  index["model"] = model_id;
  index["seed"] = seed;
  index["default_config"] = local_cfg_to_json(default_config);
  nlohmann::json files = nlohmann::json::object();
  for (int t = 1; t <= rounds(); ++t) {
    const std::string name = round_filename(t);
    write_param_vector(dir / name, at(t));
    files[std::to_string(t)] = name;
  }
  index["rounds"] = files;
  std::ofstream out(dir / "index.json", std::ios::trunc);
  out << index.dump(2) << "\n";
}

CheckpointStore CheckpointStore::load(const std::filesystem::path& dir) {
  const auto index_path = dir / "index.json";
  std::ifstream in(index_path);
  if (!in) throw MissingArtifactError("checkpoint index missing: " + index_path.string());
  nlohmann::json index;
  in >> index;

  CheckpointStore store;
  store.model_id = index.value("model", "");
  store.seed = index.value("seed", std::uint64_t{0});
  if (index.contains("default_config"))
    store.default_config = local_cfg_from_json(index["default_config"]);

  const auto& files = index.at("rounds");
  const int T = static_cast<int>(files.size());
  store.snapshots.resize(T);
  for (int t = 1; t <= T; ++t) {
    const std::string key = std::to_string(t);
    if (!files.contains(key))
      throw MissingArtifactError("checkpoint index: round keys not contiguous at " + key);
    store.snapshots[t - 1] =
        read_param_vector(dir / files.at(key).get<std::string>());
  }
  return store;
}

}  // namespace fedhpn
