#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fedhpn/baselines.hpp"
#include "fedhpn/client_encoding.hpp"
#include "fedhpn/data_gen.hpp"
#include "fedhpn/rst_trainer.hpp"

namespace fedhpn {

enum class GeneratorKind { Clusters, Dirichlet, Csv };

struct DataGenConfig {
  GeneratorKind kind = GeneratorKind::Clusters;
  ClusterSpec clusters;
  DirichletFedSpec dirichlet;
  std::filesystem::path csv_path;
  int csv_clients = 1;
  CsvLayout csv_layout;
};

struct EncodingConfig {
  int dim = 128;
  bool phase = false;
};

// Parsed experiment configuration. The master seed drives every derived
// stream; the raw config bytes are preserved for hashing and copying.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out;

  ModelKind model_kind = ModelKind::LogisticRegression;
  std::vector<int> model_hidden;

  DataGenConfig data;
  SearchSpace space;
  EncodingConfig encoding;

  RstConfig rst;  // seed filled with the master seed at load time
  TrainerConfig trainer;
  std::vector<int> policy_hidden = {64, 64};
  TrainMode train_mode = TrainMode::Rst;
  int full_rounds = 0;

  BaselineConfig baselines;
  int eval_rounds = 10;

  // CLI-level switches, not part of the config file hash.
  int threads = 1;
  bool paper_faithful = false;
  bool force = false;

  std::string config_text;
  std::string config_hash;

  ModelSpec model_for(const Federation& fed) const;
};

// Parses and validates the config file; `seed_override`/`out_override` win
// over the file's values. Validation errors name the offending field path.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::uint64_t* seed_override = nullptr,
                             const std::filesystem::path* out_override = nullptr);

// Pipeline stages. Each writes its artifacts under cfg.out and appends to
// the run manifest; stages communicate only through these files.
void cmd_partition(const ExperimentConfig& cfg);
void cmd_pretrain(const ExperimentConfig& cfg);
void cmd_tune(const ExperimentConfig& cfg, const std::string& method);
void cmd_evaluate(const ExperimentConfig& cfg, const std::string& method);

// Cross-run comparison: per-seed accuracies, mean/std summary, and combined
// argmax traces as tidy CSV. Rejects runs with mismatched config hashes.
void cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                const std::filesystem::path& out_dir);

// Trainer settings after CLI-level switches; --paper-faithful strips the
// baseline and entropy bonus, leaving the plain policy-gradient update.
TrainerConfig effective_trainer(const ExperimentConfig& cfg);

// Stage artifact paths under a run directory.
std::filesystem::path federation_dir(const std::filesystem::path& run);
std::filesystem::path checkpoints_dir(const std::filesystem::path& run);
std::filesystem::path tune_dir(const std::filesystem::path& run, const std::string& method);
std::filesystem::path eval_report_path(const std::filesystem::path& run,
                                       const std::string& method);

}  // namespace fedhpn
