// fedhpn: config-driven pipeline for personalized federated hyperparameter
// search. Stages: partition -> pretrain -> tune -> evaluate -> report.
#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "fedhpn/experiment.hpp"

namespace {

struct GlobalArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string method = "hpn";
  bool paper_faithful = false;
  bool force = false;
  int threads = 1;
};

fedhpn::ExperimentConfig load(const GlobalArgs& args) {
  const std::uint64_t* seed = args.seed ? &*args.seed : nullptr;
  std::filesystem::path out_path;
  const std::filesystem::path* out = nullptr;
  if (args.out) {
    out_path = *args.out;
    out = &out_path;
  }
  fedhpn::ExperimentConfig cfg = fedhpn::load_config(args.config, seed, out);
  cfg.threads = args.threads;
  cfg.paper_faithful = args.paper_faithful;
  cfg.force = args.force;
  return cfg;
}

void add_common(CLI::App* cmd, GlobalArgs& args, bool with_method) {
  cmd->add_option("--config", args.config, "experiment config file")->required();
  cmd->add_option("--seed", args.seed, "master seed (overrides the config)");
  cmd->add_option("--out", args.out, "run directory (overrides the config)");
  cmd->add_option("--threads", args.threads, "client-parallel worker count");
  cmd->add_flag("--force", args.force, "allow overwriting stage outputs");
  if (with_method) {
    cmd->add_option("--method", args.method, "hpn, rs, or prs");
    cmd->add_flag("--paper-faithful", args.paper_faithful,
                  "plain policy gradient: no baseline, no entropy bonus");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"personalized federated hyperparameter search"};
  app.require_subcommand(1);

  GlobalArgs args;
  auto* partition = app.add_subcommand("partition", "generate and save the federation");
  add_common(partition, args, false);
  auto* pretrain = app.add_subcommand("pretrain", "train the checkpointed course");
  add_common(pretrain, args, false);
  auto* tune = app.add_subcommand("tune", "run a tuning method to budget exhaustion");
  add_common(tune, args, true);
  auto* evaluate = app.add_subcommand("evaluate", "full-fidelity evaluation of a winner");
  add_common(evaluate, args, true);

  auto* report = app.add_subcommand("report", "aggregate runs into comparison tables");
  std::vector<std::string> run_dirs;
  std::string report_out;
  report->add_option("runs", run_dirs, "completed run directories")->required();
  report->add_option("--out", report_out, "report output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (partition->parsed()) fedhpn::cmd_partition(load(args));
    else if (pretrain->parsed()) fedhpn::cmd_pretrain(load(args));
    else if (tune->parsed()) fedhpn::cmd_tune(load(args), args.method);
    else if (evaluate->parsed()) fedhpn::cmd_evaluate(load(args), args.method);
    else if (report->parsed()) {
      std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
      fedhpn::cmd_report(dirs, report_out);
    }
  } catch (const fedhpn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return fedhpn::ConfigError::exit_code;
  } catch (const fedhpn::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return fedhpn::NumericError::exit_code;
  } catch (const fedhpn::MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return fedhpn::MissingArtifactError::exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
