#include "fedhpn/experiment.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedhpn/csv.hpp"

namespace fedhpn {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MissingArtifactError("cannot open for write: " + path.string());
  out << text;
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

// Field access with dotted-path error messages.
const json& section(const json& j, const std::string& key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object() && !j.at(key).is_array())
    throw ConfigError("config: '" + key + "' must be a section");
  return j.at(key);
}

template <typename T>
T req(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key))
    throw ConfigError("config: missing required field '" + path + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: field '" + path + key + "' has the wrong type");
  }
}

template <typename T>
T opt(const json& j, const std::string& path, const std::string& key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: field '" + path + key + "' has the wrong type");
  }
}

std::array<double, 3> ratio_of(const json& j, const std::string& path,
                               const std::string& key) {
  const auto v = opt<std::vector<double>>(j, path, key, {0.6, 0.2, 0.2});
  if (v.size() != 3)
    throw ConfigError("config: '" + path + key + "' must have 3 entries");
  return {v[0], v[1], v[2]};
}

// --- assignment (de)serialization: lossless index/value/gauss triples ---

json sample_to_json(const ConfigSample& s) {
  json values = json::array();
  for (const auto& v : s.values)
    values.push_back({{"index", v.index}, {"value", v.value}, {"gauss", v.gauss}});
  return {{"log_prob", s.log_prob}, {"values", values}};
}

ConfigSample sample_from_json(const json& j) {
  ConfigSample s;
  s.log_prob = j.at("log_prob").get<double>();
  for (const auto& jv : j.at("values")) {
    DimValue v;
    v.index = jv.at("index").get<int>();
    v.value = jv.at("value").get<double>();
    v.gauss = jv.at("gauss").get<double>();
    s.values.push_back(v);
  }
  return s;
}

json assignment_to_json(const PersonalizedAssignment& a) {
  json arr = json::array();
  for (const auto& s : a.per_client) arr.push_back(sample_to_json(s));
  return arr;
}

PersonalizedAssignment assignment_from_json(const json& j) {
  PersonalizedAssignment a;
  for (const auto& js : j) a.per_client.push_back(sample_from_json(js));
  return a;
}

// Compact decoded-config cell for the trial log.
std::string configs_cell(const SearchSpace& space, const PersonalizedAssignment& a) {
  json arr = json::array();
  for (const auto& s : a.per_client) {
    json m = json::object();
    for (const auto& [name, value] : decode(space, s)) m[name] = value;
    arr.push_back(std::move(m));
  }
  return arr.dump();
}

// --- manifest ---

constexpr const char* kFormatVersion = "1";
constexpr const char* kProjectVersion = "0.1.0";

void manifest_update(const ExperimentConfig& cfg, const std::string& stage,
                     const std::vector<std::string>& artifacts, double wall_ms) {
  const auto path = cfg.out / "manifest.json";
  json m;
  if (std::filesystem::exists(path)) m = read_json(path);
  m["config_hash"] = cfg.config_hash;
  m["seed"] = cfg.seed;
  m["versions"] = {{"format", kFormatVersion}, {"fedhpn", kProjectVersion}};
  m["stages"][stage] = {{"artifacts", artifacts}, {"wall_ms", wall_ms}};
  write_json(path, m);
}

class StageTimer {
 public:
  StageTimer() : t0_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

void require_fresh(const ExperimentConfig& cfg, const std::filesystem::path& target) {
  if (std::filesystem::exists(target) && !cfg.force)
    throw ConfigError("output exists: " + target.string() +
                      " (use a new directory or --force)");
}

void persist_config_copy(const ExperimentConfig& cfg) {
  const auto path = cfg.out / "config.json";
  if (!std::filesystem::exists(path)) write_file(path, cfg.config_text);
}

Federation load_fed(const ExperimentConfig& cfg) {
  return load_federation(federation_dir(cfg.out));
}

void write_trial_log(const std::filesystem::path& path, const std::string& method,
                     const SearchSpace& space, const std::vector<TrialRecord>& trials) {
  CsvWriter w(path);
  w.row({"method", "trial", "start_round", "configs", "reward", "rounds"});
  for (const auto& t : trials)
    w.row({method, std::to_string(t.trial_id), std::to_string(t.start_round),
           configs_cell(space, t.assignment), fmt_double(t.reward),
           std::to_string(t.rounds_consumed)});
}

void write_timing(const std::filesystem::path& path, const std::vector<double>& ms) {
  CsvWriter w(path);
  w.row({"trial", "wall_ms"});
  for (std::size_t i = 0; i < ms.size(); ++i)
    w.row({std::to_string(i), fmt_double(ms[i])});
}

}  // namespace

TrainerConfig effective_trainer(const ExperimentConfig& cfg) {
  TrainerConfig t = cfg.trainer;
  if (cfg.paper_faithful) {
    t.use_baseline = false;
    t.entropy_coef = 0.0;
  }
  return t;
}

std::filesystem::path federation_dir(const std::filesystem::path& run) {
  return run / "federation";
}
std::filesystem::path checkpoints_dir(const std::filesystem::path& run) {
  return run / "checkpoints";
}
std::filesystem::path tune_dir(const std::filesystem::path& run,
                               const std::string& method) {
  return run / ("tune_" + method);
}
std::filesystem::path eval_report_path(const std::filesystem::path& run,
                                       const std::string& method) {
  return run / ("eval_" + method) / "report.json";
}

ModelSpec ExperimentConfig::model_for(const Federation& fed) const {
  const auto& first = fed.clients.front().train;
  ModelSpec spec;
  spec.kind = model_kind;
  spec.num_features = static_cast<int>(first.num_features());
  spec.num_classes = first.num_classes;
  spec.hidden = model_hidden;
  spec.validate();
  return spec;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::uint64_t* seed_override,
                             const std::filesystem::path* out_override) {
  ExperimentConfig cfg;
  cfg.config_text = read_file(path);
  cfg.config_hash = hex64(fnv1a(cfg.config_text));
  json j;
  try {
    j = json::parse(cfg.config_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }

  cfg.seed = opt<std::uint64_t>(j, "", "seed", 1);
  if (seed_override) cfg.seed = *seed_override;
  std::string out = opt<std::string>(j, "", "out", "");
  if (out_override) out = out_override->string();
  if (out.empty())
    throw ConfigError("config: missing required field 'out' (or pass --out)");
  cfg.out = out;

  {
    const json& jm = section(j, "model");
    const std::string kind = opt<std::string>(jm, "model.", "kind", "logistic_regression");
    if (kind == "logistic_regression") cfg.model_kind = ModelKind::LogisticRegression;
    else if (kind == "feedforward") cfg.model_kind = ModelKind::Feedforward;
    else throw ConfigError("config: model.kind must be logistic_regression or feedforward");
    cfg.model_hidden = opt<std::vector<int>>(jm, "model.", "hidden", {});
    if (cfg.model_kind == ModelKind::Feedforward && cfg.model_hidden.empty())
      throw ConfigError("config: model.hidden required for feedforward");
  }

  {
    const json& jd = section(j, "data");
    const std::string gen = req<std::string>(jd, "data.", "generator");
    if (gen == "clusters") {
      cfg.data.kind = GeneratorKind::Clusters;
      auto& c = cfg.data.clusters;
      c.num_clusters = req<int>(jd, "data.", "num_clusters");
      c.clients_per_cluster = req<int>(jd, "data.", "clients_per_cluster");
      c.feature_scale = req<std::vector<double>>(jd, "data.", "feature_scale");
      c.num_features = req<int>(jd, "data.", "num_features");
      c.num_classes = req<int>(jd, "data.", "num_classes");
      c.examples_per_client = req<int>(jd, "data.", "examples_per_client");
      c.split_ratio = ratio_of(jd, "data.", "split_ratio");
    } else if (gen == "dirichlet") {
      cfg.data.kind = GeneratorKind::Dirichlet;
      auto& d = cfg.data.dirichlet;
      d.num_clients = req<int>(jd, "data.", "num_clients");
      d.alpha = req<double>(jd, "data.", "alpha");
      d.min_per_client = opt<int>(jd, "data.", "min_per_client", 0);
      d.num_classes = req<int>(jd, "data.", "num_classes");
      d.num_features = req<int>(jd, "data.", "num_features");
      d.num_examples = req<int>(jd, "data.", "num_examples");
      d.split_ratio = ratio_of(jd, "data.", "split_ratio");
    } else if (gen == "csv") {
      cfg.data.kind = GeneratorKind::Csv;
      cfg.data.csv_path = req<std::string>(jd, "data.", "path");
      cfg.data.csv_clients = req<int>(jd, "data.", "num_clients");
      cfg.data.csv_layout.split_ratio = ratio_of(jd, "data.", "split_ratio");
    } else {
      throw ConfigError("config: data.generator must be clusters, dirichlet, or csv");
    }
  }

  if (!j.contains("space")) throw ConfigError("config: missing required field 'space'");
  cfg.space = parse_space(j.at("space"));
  check_space_names(cfg.space);

  {
    const json& je = section(j, "encoding");
    cfg.encoding.dim = opt<int>(je, "encoding.", "dim", 128);
    cfg.encoding.phase = opt<bool>(je, "encoding.", "phase", false);
    if (cfg.encoding.dim < 1) throw ConfigError("config: encoding.dim must be >= 1");
  }

  {
    const json& jr = section(j, "rst");
    cfg.rst.pretrain_rounds = req<int>(jr, "rst.", "pretrain_rounds");
    cfg.rst.segment_rounds = opt<int>(jr, "rst.", "segment_rounds", 1);
    cfg.rst.round_budget = req<long long>(jr, "rst.", "budget");
    const std::string metric = opt<std::string>(jr, "rst.", "reward_metric", "neg_loss_gain");
    if (metric == "neg_loss_gain") cfg.rst.reward_metric = RewardMetric::NegLossGain;
    else if (metric == "accuracy_gain") cfg.rst.reward_metric = RewardMetric::AccuracyGain;
    else throw ConfigError("config: rst.reward_metric must be neg_loss_gain or accuracy_gain");
    if (jr.contains("default_config"))
      cfg.rst.default_config = local_cfg_from_json(jr.at("default_config"));
    cfg.rst.seed = cfg.seed;
  }

  {
    const json& jt = section(j, "trainer");
    cfg.trainer.policy_lr = opt<double>(jt, "trainer.", "policy_lr", 0.01);
    const std::string baseline = opt<std::string>(jt, "trainer.", "baseline", "ema");
    if (baseline == "ema") cfg.trainer.use_baseline = true;
    else if (baseline == "none") cfg.trainer.use_baseline = false;
    else throw ConfigError("config: trainer.baseline must be ema or none");
    cfg.trainer.baseline_decay = opt<double>(jt, "trainer.", "baseline_decay", 0.9);
    cfg.trainer.entropy_coef = opt<double>(jt, "trainer.", "entropy_coef", 0.0);
    cfg.trainer.trials_per_update = opt<int>(jt, "trainer.", "trials_per_update", 1);
    cfg.policy_hidden = opt<std::vector<int>>(jt, "trainer.", "hidden", {64, 64});
    const std::string mode = opt<std::string>(jt, "trainer.", "mode", "rst");
    if (mode == "rst") cfg.train_mode = TrainMode::Rst;
    else if (mode == "full") cfg.train_mode = TrainMode::Full;
    else throw ConfigError("config: trainer.mode must be rst or full");
    cfg.full_rounds = opt<int>(jt, "trainer.", "full_rounds", 0);
    cfg.trainer.validate();
  }

  {
    const json& jb = section(j, "baselines");
    cfg.baselines.num_candidates = opt<int>(jb, "baselines.", "num_candidates", 8);
    cfg.baselines.rounds_per_candidate =
        opt<int>(jb, "baselines.", "rounds_per_candidate", 0);
    cfg.baselines.subsample_size = opt<int>(jb, "baselines.", "subsample_size", 100);
    cfg.baselines.seed = cfg.seed;
    cfg.baselines.validate();
  }

  cfg.eval_rounds = opt<int>(j, "", "eval_rounds", 10);
  if (cfg.eval_rounds < 1) throw ConfigError("config: eval_rounds must be >= 1");

  // min_per_client default: 2 * batch_size keeps local training feasible.
  if (cfg.data.kind == GeneratorKind::Dirichlet && cfg.data.dirichlet.min_per_client == 0)
    cfg.data.dirichlet.min_per_client = 2 * cfg.rst.default_config.batch_size;

  return cfg;
}

void cmd_partition(const ExperimentConfig& cfg) {
  StageTimer timer;
  const auto dir = federation_dir(cfg.out);
  require_fresh(cfg, dir);
  persist_config_copy(cfg);

  Federation fed;
  std::vector<int> cluster_of;
  const std::vector<int>* cluster_ptr = nullptr;
  switch (cfg.data.kind) {
    case GeneratorKind::Clusters: {
      ClusterSpec spec = cfg.data.clusters;
      spec.seed = derive_seed(cfg.seed, "data");
      ClusterFederation cf = make_cluster_federation(spec);
      fed = std::move(cf.fed);
      cluster_of = std::move(cf.cluster_of);
      cluster_ptr = &cluster_of;
      break;
    }
    case GeneratorKind::Dirichlet: {
      DirichletFedSpec spec = cfg.data.dirichlet;
      spec.seed = derive_seed(cfg.seed, "data");
      fed = make_dirichlet_federation(spec);
      break;
    }
    case GeneratorKind::Csv: {
      CsvLayout layout = cfg.data.csv_layout;
      layout.seed = derive_seed(cfg.seed, "data");
      fed = load_csv_federation(cfg.data.csv_path, cfg.data.csv_clients, layout);
      break;
    }
  }
  save_federation(fed, dir, cluster_ptr);
  manifest_update(cfg, "partition", {"federation"}, timer.ms());
}

void cmd_pretrain(const ExperimentConfig& cfg) {
  StageTimer timer;
  const auto dir = checkpoints_dir(cfg.out);
  require_fresh(cfg, dir);
  persist_config_copy(cfg);

  const Federation fed = load_fed(cfg);
  const ModelSpec model = cfg.model_for(fed);
  RstConfig rst = cfg.rst;
  rst.seed = cfg.seed;
  const PretrainResult result = rst_pretrain(model, fed, rst, cfg.threads);
  result.store.save(dir);

  CsvWriter w(cfg.out / "pretrain_metrics.csv");
  w.row({"round", "valid_loss", "valid_accuracy"});
  for (const auto& m : result.metrics)
    w.row({std::to_string(m.round), fmt_double(m.valid_loss),
           fmt_double(m.valid_accuracy)});
  manifest_update(cfg, "pretrain", {"checkpoints", "pretrain_metrics.csv"}, timer.ms());
}

void cmd_tune(const ExperimentConfig& cfg, const std::string& method) {
  StageTimer timer;
  if (method != "hpn" && method != "rs" && method != "prs")
    throw ConfigError("tune: method must be hpn, rs, or prs");
  const auto dir = tune_dir(cfg.out, method);
  require_fresh(cfg, dir);
  persist_config_copy(cfg);

  Federation fed = load_fed(cfg);
  const ModelSpec model = cfg.model_for(fed);
  RstConfig rst = cfg.rst;
  rst.seed = cfg.seed;

  json summary;
  summary["method"] = method;
  summary["seed"] = cfg.seed;

  if (method == "hpn") {
    // prerequisites first, so a missing checkpoint store leaves no partial
    // tune directory behind
    const CheckpointStore store = CheckpointStore::load(checkpoints_dir(cfg.out));
    std::filesystem::create_directories(dir);
    const RffProjection proj =
        draw_projection(static_cast<int>(fed.clients.front().train.num_features()),
                        cfg.encoding.dim, cfg.seed, cfg.encoding.phase);
    encode_federation(fed, proj);
    {
      json enc;
      enc["seed"] = cfg.seed;
      enc["mode"] = cfg.encoding.phase ? "phase" : "paper";
      enc["dim"] = cfg.encoding.dim;
      json arr = json::array();
      for (const auto& c : fed.clients)
        arr.push_back(std::vector<double>(c.encoding.data(),
                                          c.encoding.data() + c.encoding.size()));
      enc["encodings"] = arr;
      write_json(dir / "encodings.json", enc);
    }

    HpnTrainOptions options;
    options.trainer = effective_trainer(cfg);
    options.hidden = cfg.policy_hidden;
    options.mode = cfg.train_mode;
    options.full_rounds = cfg.full_rounds;
    options.threads = cfg.threads;
    const TrainHpnResult result = train_hpn(model, fed, cfg.space, store, rst, options);

    write_trial_log(dir / "trial_log.csv", method, cfg.space, result.trials);
    write_timing(dir / "timing.csv", result.trial_wall_ms);
    {
      CsvWriter w(dir / "argmax_trace.csv");
      w.row({"update", "client", "head", "argmax"});
      for (const auto& row : result.trace)
        w.row({std::to_string(row.update), std::to_string(row.client), row.head,
               fmt_double(row.value)});
    }
    write_param_vector(dir / "policy.bin", result.params.theta);
    {
      json meta;
      meta["input_dim"] = result.params.arch.input_dim;
      meta["hidden"] = result.params.arch.hidden;
      meta["space"] = render_space(cfg.space);
      meta["space_hash"] = hex64(fnv1a(render_space(cfg.space).dump()));
      meta["seed"] = cfg.seed;
      write_json(dir / "policy.json", meta);
    }
    summary["rounds_consumed"] = result.rounds_consumed;
    summary["updates"] = result.updates;
    summary["rejected_updates"] = result.rejected_updates;
    summary["trials"] = result.trials.size();
  } else {
    std::filesystem::create_directories(dir);
    BaselineConfig bl = cfg.baselines;
    bl.seed = cfg.seed;
    const BaselineResult result =
        method == "rs" ? rs_global(model, fed, cfg.space, rst.default_config,
                                   rst.round_budget, bl, cfg.threads)
                       : rs_personalized(model, fed, cfg.space, rst.default_config,
                                         rst.round_budget, bl, cfg.threads);

    std::vector<TrialRecord> as_trials;
    std::vector<double> wall;
    for (const auto& c : result.candidates) {
      TrialRecord t;
      t.trial_id = c.candidate_id;
      t.start_round = 0;
      t.assignment = c.assignment;
      t.reward = c.best_valid_accuracy;
      t.rounds_consumed = c.rounds_consumed;
      as_trials.push_back(std::move(t));
      wall.push_back(c.wall_ms);
    }
    write_trial_log(dir / "trial_log.csv", method, cfg.space, as_trials);
    write_timing(dir / "timing.csv", wall);
    {
      json winner;
      winner["method"] = method;
      winner["winner_id"] = result.winner_id;
      winner["winner_valid_accuracy"] = result.winner_valid_accuracy;
      winner["assignment"] = assignment_to_json(result.winner);
      winner["seed"] = cfg.seed;
      write_json(dir / "winner.json", winner);
    }
    summary["rounds_consumed"] = result.rounds_consumed;
    summary["trials"] = result.candidates.size();
  }

  write_json(dir / "tune_summary.json", summary);
  manifest_update(cfg, "tune_" + method, {dir.filename().string()}, timer.ms());
}

void cmd_evaluate(const ExperimentConfig& cfg, const std::string& method) {
  StageTimer timer;
  const auto tdir = tune_dir(cfg.out, method);
  if (!std::filesystem::exists(tdir / "tune_summary.json"))
    throw MissingArtifactError("evaluate: tuning artifacts missing under " +
                               tdir.string());
  const auto report_path = eval_report_path(cfg.out, method);
  require_fresh(cfg, report_path);

  Federation fed = load_fed(cfg);
  const ModelSpec model = cfg.model_for(fed);
  const json summary = read_json(tdir / "tune_summary.json");

  PersonalizedAssignment assignment;
  if (method == "hpn") {
    const json meta = read_json(tdir / "policy.json");
    PolicyArch arch;
    arch.input_dim = meta.at("input_dim").get<int>();
    arch.hidden = meta.at("hidden").get<std::vector<int>>();
    arch.space = parse_space(meta.at("space"));
    PolicyParams params;
    params.arch = arch;
    params.theta = read_param_vector(tdir / "policy.bin");
    if (params.theta.size() != arch.param_count())
      throw MissingArtifactError("evaluate: policy snapshot does not match architecture");

    const json enc = read_json(tdir / "encodings.json");
    const auto& arr = enc.at("encodings");
    if (arr.size() != static_cast<std::size_t>(fed.num_clients()))
      throw MissingArtifactError("evaluate: encoding count does not match federation");
    for (int i = 0; i < fed.num_clients(); ++i) {
      const auto v = arr.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
      fed.clients[static_cast<std::size_t>(i)].encoding =
          Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      assignment.per_client.push_back(
          argmax_sample(params, fed.clients[static_cast<std::size_t>(i)].encoding));
    }
  } else {
    assignment = assignment_from_json(read_json(tdir / "winner.json").at("assignment"));
  }

  const FinalOutcome outcome =
      evaluate_assignment(model, fed, cfg.space, assignment, cfg.rst.default_config,
                          cfg.eval_rounds, cfg.seed, kCourseFinalEval, cfg.threads);

  json report;
  report["method"] = method;
  report["weighted_test_accuracy"] = outcome.weighted_test_accuracy;
  report["per_client_accuracies"] = outcome.per_client_test_accuracy;
  report["rounds_consumed"] = summary.at("rounds_consumed");
  report["seed"] = cfg.seed;
  write_json(report_path, report);
  manifest_update(cfg, "evaluate_" + method, {report_path.filename().string()},
                  timer.ms());
}

void cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                const std::filesystem::path& out_dir) {
  if (run_dirs.empty()) throw ConfigError("report: needs at least one run directory");

  std::string hash;
  struct Row {
    std::string method;
    std::uint64_t seed;
    double accuracy;
  };
  std::vector<Row> rows;
  std::vector<std::vector<std::string>> trace_rows;

  for (const auto& run : run_dirs) {
    const auto manifest_path = run / "manifest.json";
    if (!std::filesystem::exists(manifest_path))
      throw MissingArtifactError("report: no manifest under " + run.string());
    const json manifest = read_json(manifest_path);
    const std::string h = manifest.at("config_hash").get<std::string>();
    if (hash.empty()) hash = h;
    else if (hash != h)
      throw ConfigError("report: mixed config hashes across runs (" + hash + " vs " +
                        h + ")");
    const auto seed = manifest.at("seed").get<std::uint64_t>();

    bool any_report = false;
    for (const std::string method : {"hpn", "rs", "prs"}) {
      const auto rp = eval_report_path(run, method);
      if (!std::filesystem::exists(rp)) continue;
      const json report = read_json(rp);
      rows.push_back({method, seed, report.at("weighted_test_accuracy").get<double>()});
      any_report = true;
    }
    if (!any_report)
      throw MissingArtifactError("report: no evaluation reports under " + run.string());

    const auto trace_path = tune_dir(run, "hpn") / "argmax_trace.csv";
    if (std::filesystem::exists(trace_path)) {
      const auto parsed = read_csv(trace_path);
      for (std::size_t i = 1; i < parsed.size(); ++i) {
        std::vector<std::string> cells = {std::to_string(seed)};
        cells.insert(cells.end(), parsed[i].begin(), parsed[i].end());
        trace_rows.push_back(std::move(cells));
      }
    }
  }

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.method != b.method ? a.method < b.method : a.seed < b.seed;
  });

  std::filesystem::create_directories(out_dir);
  {
    CsvWriter w(out_dir / "comparison.csv");
    w.row({"method", "seed", "weighted_test_accuracy"});
    for (const auto& r : rows)
      w.row({r.method, std::to_string(r.seed), fmt_double(r.accuracy)});
  }
  {
    std::map<std::string, std::vector<double>> by_method;
    for (const auto& r : rows) by_method[r.method].push_back(r.accuracy);
    CsvWriter w(out_dir / "comparison_summary.csv");
    w.row({"method", "n", "mean", "std"});
    for (const auto& [method, accs] : by_method) {
      const double n = static_cast<double>(accs.size());
      double mean = 0.0;
      for (double a : accs) mean += a;
      mean /= n;
      double var = 0.0;
      for (double a : accs) var += (a - mean) * (a - mean);
      const double sd = accs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
      w.row({method, std::to_string(accs.size()), fmt_double(mean), fmt_double(sd)});
    }
  }
  {
    CsvWriter w(out_dir / "traces.csv");
    w.row({"seed", "update", "client", "head", "argmax"});
    for (const auto& cells : trace_rows) w.row(cells);
  }
}

}  // namespace fedhpn
