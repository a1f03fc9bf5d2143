#include "factprobe/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "factprobe/baselines.hpp"
#include "factprobe/dataset_prep.hpp"
#include "factprobe/detail/binary_io.hpp"
#include "factprobe/embedding_store.hpp"
#include "factprobe/grid_search.hpp"
#include "factprobe/metrics.hpp"
#include "factprobe/probe_model.hpp"
#include "factprobe/trainer.hpp"
#include "json.hpp"

namespace factprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<Preset>& presets() {
  static const std::vector<Preset> kPresets = {
      {"mm_claim", "mm_claim", {InputSetup::MmClaim}},
      {"mm_claim+mm_evidence", "mm_claim + mm_evidence", {InputSetup::MmClaim, InputSetup::MmEvidence}},
      {"input1", "claim+image", {InputSetup::Claim, InputSetup::ClaimImage}},
      {"input2",
       "claim+claim_image+text+text_image",
       {InputSetup::Claim, InputSetup::ClaimImage, InputSetup::EvidenceText, InputSetup::EvidenceImage}},
      {"input3", "mm_claim+mm_image", {InputSetup::MmClaim, InputSetup::MmImage}},
      {"input4", "mm_text+mm_image", {InputSetup::MmText, InputSetup::MmImage}},
  };
  return kPresets;
}

const Preset* find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

namespace {

// Common data-selection flags.
struct DataArgs {
  std::string dataset = "mocheg";
  std::string preset = "mm_claim";
  std::vector<std::string> embeddings;
  std::string model_id;
  double val_fraction = 0.10;
};

struct TrainArgs {
  double lr = 1e-3;
  int batch_size = 32;
  int hidden_size = 128;
  double dropout = 0.1;
  int epochs = 20;
  int patience = 5;
  double warmup_ratio = 0.05;
  bool unweighted = false;
};

struct Args {
  std::uint64_t seed = 42;
  int workers = 1;
  std::string format = "text";
  std::string out;
  DataArgs data;
  TrainArgs train;

  // pool
  std::string in;
  std::string split = "train";
  std::string setup;
  std::string source_model;

  // gridsearch
  std::string space = "default";
  std::vector<double> lrs;
  std::vector<int> batch_sizes;
  std::vector<int> hidden_sizes;
  std::vector<double> dropouts;
  std::string select = "val_loss";

  // baseline
  int k = 7;
  std::string metric = "euclidean";
  double lambda = 1e-3;
  int svm_epochs = 100;

  // eval
  std::string checkpoint;
  std::string eval_split = "test";

  // report
  std::vector<std::string> records;
};

class MissingFile : public IoError {
 public:
  using IoError::IoError;
};

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw MissingFile("missing file: " + path);
}

fs::path ensure_out_dir(const std::string& out) {
  if (out.empty()) throw InvalidArgument("--out is required");
  fs::create_directories(out);
  return fs::path(out);
}

void write_text(const fs::path& path, const std::string& text) { detail::write_file(path.string(), text); }

ReportFormat parse_format(const std::string& f) {
  return f == "records" ? ReportFormat::Records : ReportFormat::Text;
}

std::vector<std::string> expand_paths(const std::vector<std::string>& inputs) {
  std::vector<std::string> out;
  for (const auto& p : inputs) {
    require_file(p);
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".pfemb") found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

struct LoadedData {
  const Preset* preset = nullptr;
  DatasetId dataset = DatasetId::Mocheg;
  std::map<Split, JoinedDataset> splits;
  std::string source_model;
  std::vector<std::string> files;
  bool val_derived = false;
};

const Preset& resolve_preset(const std::string& name) {
  const Preset* p = find_preset(name);
  if (!p) throw InvalidArgument("unknown preset: " + name);
  return *p;
}

DatasetId resolve_dataset(const std::string& name) {
  auto d = parse_dataset_id(name);
  if (!d) throw InvalidArgument("unknown dataset: " + name);
  return *d;
}

// Loads every embedding file, keeps the preset's setups, and joins per split.
LoadedData load_data(const DataArgs& args, std::uint64_t seed, bool derive_val) {
  LoadedData out;
  out.preset = &resolve_preset(args.preset);
  out.dataset = resolve_dataset(args.dataset);
  out.files = expand_paths(args.embeddings);
  if (out.files.empty()) throw InvalidArgument("no embedding files given");

  std::map<Split, std::map<InputSetup, EmbeddingSet>> by_split;
  for (const auto& path : out.files) {
    EmbeddingSet set = read_embedding_set(path);
    if (set.manifest.dataset != out.dataset) {
      throw FormatError(path + ": dataset is " + std::string(to_string(set.manifest.dataset)) +
                        ", expected " + args.dataset);
    }
    const auto& wanted = out.preset->setups;
    if (std::find(wanted.begin(), wanted.end(), set.manifest.input_setup) == wanted.end()) continue;
    if (out.source_model.empty()) out.source_model = set.manifest.source_model;
    auto& slot = by_split[set.manifest.split];
    if (slot.count(set.manifest.input_setup)) {
      throw FormatError(path + ": duplicate " + std::string(to_string(set.manifest.split)) + "/" +
                        std::string(to_string(set.manifest.input_setup)));
    }
    slot.emplace(set.manifest.input_setup, std::move(set));
  }

  for (auto& [split, sets] : by_split) {
    std::vector<EmbeddingSet> ordered;
    for (auto s : out.preset->setups) {
      auto it = sets.find(s);
      if (it == sets.end()) {
        throw FormatError("split " + std::string(to_string(split)) + " is missing setup " +
                          std::string(to_string(s)));
      }
      ordered.push_back(std::move(it->second));
    }
    JoinedDataset joined = join_setups(ordered);
    if (joined.diagnostics.dropped > 0) {
      std::cerr << "join " << to_string(split) << ": dropped " << joined.diagnostics.dropped
                << " incomplete instances\n";
    }
    out.splits.emplace(split, std::move(joined));
  }

  if (derive_val && out.splits.count(Split::Train) && !out.splits.count(Split::Val)) {
    const auto& full = out.splits.at(Split::Train);
    const auto idx = stratified_split(std::span<const Label>(full.labels), args.val_fraction, seed);
    JoinedDataset train = full.subset(idx.train);
    JoinedDataset val = full.subset(idx.val);
    val.split = Split::Val;
    out.splits[Split::Train] = std::move(train);
    out.splits[Split::Val] = std::move(val);
    out.val_derived = true;
  }
  if (!args.model_id.empty()) out.source_model = args.model_id;
  return out;
}

const JoinedDataset& need_split(const LoadedData& data, Split s) {
  auto it = data.splits.find(s);
  if (it == data.splits.end()) {
    throw FormatError("no " + std::string(to_string(s)) + " embeddings for preset " + data.preset->name);
  }
  return it->second;
}

json data_manifest(const DataArgs& args, const LoadedData& data) {
  json splits = json::object();
  for (const auto& [s, d] : data.splits) {
    splits[std::string(to_string(s))] = {{"rows", d.size()}, {"dropped", d.diagnostics.dropped}};
  }
  return json{{"dataset", args.dataset},
              {"preset", args.preset},
              {"setups", [&] {
                 json a = json::array();
                 for (auto s : data.preset->setups) a.push_back(to_string(s));
                 return a;
               }()},
              {"embeddings", data.files},
              {"model_id", data.source_model},
              {"val_fraction", args.val_fraction},
              {"val_derived_from_train", data.val_derived},
              {"splits", splits}};
}

json train_config_json(const TrainConfig& tc) {
  return json{{"batch_size", tc.batch_size},   {"peak_lr", tc.peak_lr},
              {"max_epochs", tc.max_epochs},   {"patience", tc.patience},
              {"warmup_ratio", tc.warmup_ratio}, {"adam_beta1", tc.adam_beta1},
              {"adam_beta2", tc.adam_beta2},   {"adam_eps", tc.adam_eps},
              {"seed", tc.seed},               {"weighted_loss", tc.weighted_loss}};
}

json probe_config_json(const ProbeConfig& pc) {
  return json{{"input_dims", pc.input_dims},
              {"hidden_size", pc.hidden_size},
              {"n_classes", pc.n_classes},
              {"dropout", pc.dropout},
              {"seed", pc.seed}};
}

void write_report(const fs::path& dir, const EvalReport& r) {
  const std::span<const EvalReport> one(&r, 1);
  write_text(dir / "report.txt", report(one, ReportFormat::Text));
  write_text(dir / "report.jsonl", report(one, ReportFormat::Records));
}

void print_report(const EvalReport& r, const std::string& format) {
  std::cout << report(std::span<const EvalReport>(&r, 1), parse_format(format));
}

// ---------------------------------------------------------------------------

int run_pool(const Args& a) {
  require_file(a.in);
  EmbeddingManifest m;
  m.dataset = resolve_dataset(a.data.dataset);
  auto split = parse_split(a.split);
  auto setup = parse_input_setup(a.setup);
  if (!split) throw InvalidArgument("unknown split: " + a.split);
  if (!setup) throw InvalidArgument("unknown setup: " + a.setup);
  m.split = *split;
  m.input_setup = *setup;
  m.source_model = a.source_model;

  std::vector<PooledEmbedding> records;
  std::istringstream lines(detail::read_file(a.in));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const auto tokens = j.at("tokens").get<std::vector<std::vector<double>>>();
      if (tokens.empty()) throw InvalidArgument("empty token sequence");
      Eigen::MatrixXd mat(static_cast<Eigen::Index>(tokens.size()),
                          static_cast<Eigen::Index>(tokens.front().size()));
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].size() != tokens.front().size()) throw InvalidArgument("ragged token matrix");
        for (std::size_t k = 0; k < tokens[i].size(); ++k) {
          mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = tokens[i][k];
        }
      }
      PooledEmbedding rec;
      rec.instance_id = j.at("id").get<std::string>();
      rec.label = label_from_index(j.at("label").get<int>());
      rec.vector = mean_pool(mat).cast<float>();
      if (m.ndim == 0) m.ndim = static_cast<std::uint32_t>(rec.vector.size());
      records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw FormatError(a.in + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw FormatError(a.in + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (m.ndim == 0) throw FormatError(a.in + ": no token matrices");
  m.count = records.size();
  write_embedding_set(m, records, a.out);
  std::cout << "pooled " << records.size() << " instances (ndim " << m.ndim << ") -> " << a.out << '\n';
  return kOk;
}

int run_join(const Args& a) {
  LoadedData data = load_data(a.data, a.seed, false);
  const fs::path dir = ensure_out_dir(a.out);
  json summary = data_manifest(a.data, data);
  for (const auto& [split, joined] : data.splits) {
    for (std::size_t s = 0; s < joined.num_setups(); ++s) {
      EmbeddingManifest m;
      m.dataset = joined.dataset;
      m.split = split;
      m.input_setup = joined.setups[s];
      m.source_model = data.source_model;
      m.ndim = static_cast<std::uint32_t>(joined.dims[s]);
      m.count = joined.size();
      std::vector<PooledEmbedding> recs(joined.size());
      for (std::size_t i = 0; i < joined.size(); ++i) {
        recs[i] = {joined.ids[i], joined.features[s].col(static_cast<Eigen::Index>(i)), joined.labels[i]};
      }
      const auto name = std::string(to_string(m.dataset)) + "_" + std::string(to_string(split)) + "_" +
                        std::string(to_string(m.input_setup)) + ".pfemb";
      write_embedding_set(m, recs, (dir / name).string());
    }
    std::cout << to_string(split) << ": " << joined.size() << " rows, " << joined.diagnostics.dropped
              << " dropped\n";
  }
  write_text(dir / "run_manifest.json", json{{"command", "join"}, {"seed", a.seed}, {"data", summary}}.dump(2) + "\n");
  return kOk;
}

int run_train(const Args& a) {
  LoadedData data = load_data(a.data, a.seed, true);
  const auto& train_set = need_split(data, Split::Train);
  const auto& val_set = need_split(data, Split::Val);

  ProbeConfig pc;
  pc.input_dims = train_set.dims;
  pc.hidden_size = a.train.hidden_size;
  pc.dropout = a.train.dropout;
  pc.seed = a.seed;
  TrainConfig tc;
  tc.batch_size = a.train.batch_size;
  tc.peak_lr = a.train.lr;
  tc.max_epochs = a.train.epochs;
  tc.patience = a.train.patience;
  tc.warmup_ratio = a.train.warmup_ratio;
  tc.weighted_loss = !a.train.unweighted;
  tc.seed = a.seed;

  const fs::path dir = ensure_out_dir(a.out);
  const TrainResult result = train(pc, train_set, val_set, tc);
  write_text(dir / "train_log.jsonl", format_train_log(result.log));
  if (result.best_epoch == 0) {
    std::cerr << "training diverged before the first completed epoch\n";
    return kDiverged;
  }
  Checkpoint ckpt{pc, result.best_params, result.best_epoch, result.best_val_loss, data.preset->setups};
  write_checkpoint(ckpt, (dir / "checkpoint.pfckpt").string());

  const auto eval_split = data.splits.count(Split::Test) ? Split::Test : Split::Val;
  const EvalReport rep = evaluate_probe(result.best_params, data.splits.at(eval_split),
                                        data.source_model, data.preset->display);
  write_report(dir, rep);
  json manifest{{"command", "train"},
                {"seed", a.seed},
                {"data", data_manifest(a.data, data)},
                {"probe_config", probe_config_json(pc)},
                {"train_config", train_config_json(tc)},
                {"best_epoch", result.best_epoch},
                {"best_val_loss", result.best_val_loss},
                {"stopped_early", result.stopped_early},
                {"diverged", result.diverged},
                {"evaluated_split", to_string(eval_split)}};
  write_text(dir / "run_manifest.json", manifest.dump(2) + "\n");
  print_report(rep, a.format);
  return result.diverged ? kDiverged : kOk;
}

int run_gridsearch(const Args& a) {
  LoadedData data = load_data(a.data, a.seed, true);
  const auto& train_set = need_split(data, Split::Train);
  const auto& val_set = need_split(data, Split::Val);
  const auto& test_set = need_split(data, Split::Test);

  GridSpace space;
  if (a.space != "default") throw InvalidArgument("unknown space: " + a.space + " (use --lrs etc. to restrict)");
  if (!a.lrs.empty()) space.learning_rates = a.lrs;
  if (!a.batch_sizes.empty()) space.batch_sizes = a.batch_sizes;
  if (!a.hidden_sizes.empty()) space.hidden_sizes = a.hidden_sizes;
  if (!a.dropouts.empty()) space.dropouts = a.dropouts;

  GridOptions opts;
  opts.seed = a.seed;
  opts.workers = a.workers;
  opts.selection = a.select == "val_f1" ? Selection::ValF1 : Selection::ValLoss;
  opts.base.max_epochs = a.train.epochs;
  opts.base.patience = a.train.patience;
  opts.base.warmup_ratio = a.train.warmup_ratio;
  opts.base.weighted_loss = !a.train.unweighted;

  const fs::path dir = ensure_out_dir(a.out);
  const GridResult result =
      run_grid(train_set, val_set, test_set, space, opts, data.source_model, data.preset->display);
  write_text(dir / "grid_summary.jsonl", format_grid_summary(result.runs));
  const auto row = best_params_row(result, data.source_model, data.preset->name);
  const std::string table = export_best_params(std::span<const BestParamsRow>(&row, 1));
  write_text(dir / "best_params.txt", table);
  write_text(dir / "train_log.jsonl", format_train_log(result.best_train.log));
  Checkpoint ckpt{result.best_probe_config, result.best_train.best_params, result.best_train.best_epoch,
                  result.best_train.best_val_loss, data.preset->setups};
  write_checkpoint(ckpt, (dir / "checkpoint.pfckpt").string());
  write_report(dir, result.test_report);

  json space_json{{"learning_rates", space.learning_rates},
                  {"batch_sizes", space.batch_sizes},
                  {"hidden_sizes", space.hidden_sizes},
                  {"dropouts", space.dropouts}};
  json manifest{{"command", "gridsearch"},
                {"seed", a.seed},
                {"workers", a.workers},
                {"selection", a.select},
                {"data", data_manifest(a.data, data)},
                {"space", space_json},
                {"base_train_config", train_config_json(opts.base)},
                {"best_index", result.best_index},
                {"best_probe_config", probe_config_json(result.best_probe_config)},
                {"best_train_config", train_config_json(result.best_train_config)}};
  write_text(dir / "run_manifest.json", manifest.dump(2) + "\n");
  std::cout << table;
  print_report(result.test_report, a.format);
  return kOk;
}

int run_baseline(const Args& a, const std::string& kind) {
  LoadedData data = load_data(a.data, a.seed, false);
  const auto& train_set = need_split(data, Split::Train);
  const auto& test_set = need_split(data, Split::Test);
  const Eigen::MatrixXd x_train = train_set.stacked().cast<double>();
  const Eigen::MatrixXd x_test = test_set.stacked().cast<double>();

  std::vector<Label> preds;
  preds.reserve(test_set.size());
  json params;
  if (kind == "knn") {
    const auto metric = a.metric == "cosine" ? KnnMetric::Cosine : KnnMetric::Euclidean;
    const KnnModel model = knn_fit(x_train, train_set.labels, a.k, metric);
    for (Eigen::Index c = 0; c < x_test.cols(); ++c) preds.push_back(knn_predict(model, x_test.col(c)));
    params = {{"k", a.k}, {"metric", a.metric}};
  } else {
    SvmOptions opts{a.lambda, a.svm_epochs, a.seed};
    const LinearSvmModel model = svm_train(x_train, train_set.labels, opts);
    for (Eigen::Index c = 0; c < x_test.cols(); ++c) preds.push_back(svm_predict(model, x_test.col(c)));
    params = {{"lambda", a.lambda}, {"epochs", a.svm_epochs}};
  }
  const EvalReport rep = evaluate(kind == "knn" ? "KNN" : "SVM", data.preset->display,
                                  std::string(to_string(test_set.dataset)), preds, test_set.labels);
  if (!a.out.empty()) {
    const fs::path dir = ensure_out_dir(a.out);
    write_report(dir, rep);
    json manifest{{"command", "baseline"},
                  {"baseline", kind},
                  {"seed", a.seed},
                  {"params", params},
                  {"data", data_manifest(a.data, data)}};
    write_text(dir / "run_manifest.json", manifest.dump(2) + "\n");
  }
  print_report(rep, a.format);
  return kOk;
}

int run_eval(const Args& a) {
  require_file(a.checkpoint);
  const Checkpoint ckpt = read_checkpoint(a.checkpoint);
  DataArgs da = a.data;
  if (ckpt.setups.empty()) throw FormatError(a.checkpoint + ": checkpoint records no input setups");
  // The checkpoint fixes the setup order; pick the preset that matches it.
  for (const auto& p : presets()) {
    if (p.setups == ckpt.setups) da.preset = p.name;
  }
  LoadedData data = load_data(da, a.seed, false);
  if (data.preset->setups != ckpt.setups) throw FormatError("checkpoint setups do not match any preset");
  auto split = parse_split(a.eval_split);
  if (!split) throw InvalidArgument("unknown split: " + a.eval_split);
  const auto& set = need_split(data, *split);
  if (set.dims != ckpt.config.input_dims) throw FormatError("embedding dims do not match checkpoint");
  const EvalReport rep = evaluate_probe(ckpt.params, set, data.source_model, data.preset->display);
  if (!a.out.empty()) {
    const fs::path dir = ensure_out_dir(a.out);
    write_report(dir, rep);
    json manifest{{"command", "eval"},
                  {"seed", a.seed},
                  {"checkpoint", a.checkpoint},
                  {"split", a.eval_split},
                  {"data", data_manifest(da, data)}};
    write_text(dir / "run_manifest.json", manifest.dump(2) + "\n");
  }
  print_report(rep, a.format);
  return kOk;
}

int run_report(const Args& a) {
  std::vector<EvalReport> results;
  for (const auto& path : a.records) {
    require_file(path);
    std::istringstream lines(detail::read_file(path));
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      results.push_back(from_record(line));
    }
  }
  const std::string text = report(results, parse_format(a.format));
  if (!a.out.empty()) {
    const fs::path dir = ensure_out_dir(a.out);
    write_text(dir / (a.format == "records" ? "report.jsonl" : "report.txt"), text);
  }
  std::cout << text;
  return kOk;
}

void add_data_flags(CLI::App* cmd, Args& a) {
  std::string preset_help = "input preset:";
  for (const auto& p : presets()) preset_help += " " + p.name;
  cmd->add_option("--dataset", a.data.dataset, "mocheg or factify2")
      ->check(CLI::IsMember({"mocheg", "factify2"}))
      ->capture_default_str();
  cmd->add_option("--preset", a.data.preset, preset_help)->capture_default_str();
  cmd->add_option("--embeddings", a.data.embeddings, "embedding files or directories of *.pfemb")
      ->required();
  cmd->add_option("--model-id", a.data.model_id, "model name used in reports (default: source_model)");
  cmd->add_option("--val-fraction", a.data.val_fraction,
                  "stratified validation fraction when no val split is given")
      ->capture_default_str();
}

void add_common_flags(CLI::App* cmd, Args& a, bool out_required) {
  cmd->add_option("--seed", a.seed, "random seed")->capture_default_str();
  cmd->add_option("--format", a.format, "report format")
      ->check(CLI::IsMember({"text", "records"}))
      ->capture_default_str();
  auto* out = cmd->add_option("--out", a.out, "output directory");
  if (out_required) out->required();
}

void add_schedule_flags(CLI::App* cmd, Args& a) {
  cmd->add_option("--epochs", a.train.epochs, "maximum epochs")->capture_default_str();
  cmd->add_option("--patience", a.train.patience, "early-stopping patience")->capture_default_str();
  cmd->add_option("--warmup-ratio", a.train.warmup_ratio, "cosine warmup ratio")->capture_default_str();
  cmd->add_flag("--unweighted", a.train.unweighted, "uniform class weights in the loss");
}

int map_exception(const std::exception& e, int code) {
  std::cerr << "error: " << e.what() << '\n';
  return code;
}

}  // namespace

int dispatch(int argc, char** argv) {
  Args a;
  CLI::App app{"Probing classifiers for multimodal fact verification"};
  app.require_subcommand(1);

  auto* pool = app.add_subcommand("pool", "mean-pool token matrices (JSONL) into an embedding file");
  pool->add_option("--in", a.in, "JSONL with {id, label, tokens}")->required();
  pool->add_option("--out", a.out, "output .pfemb file")->required();
  pool->add_option("--dataset", a.data.dataset)->check(CLI::IsMember({"mocheg", "factify2"}))->capture_default_str();
  pool->add_option("--split", a.split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  pool->add_option("--setup", a.setup, "input setup key")->required();
  pool->add_option("--source-model", a.source_model, "model that produced the hidden states");

  auto* join = app.add_subcommand("join", "inner-join embedding files per split and write aligned files");
  add_data_flags(join, a);
  join->add_option("--seed", a.seed)->capture_default_str();
  join->add_option("--out", a.out, "output directory")->required();

  auto* trn = app.add_subcommand("train", "train one probing classifier");
  add_data_flags(trn, a);
  add_common_flags(trn, a, true);
  trn->add_option("--lr", a.train.lr, "peak learning rate")->capture_default_str();
  trn->add_option("--batch-size", a.train.batch_size)->capture_default_str();
  trn->add_option("--hidden-size", a.train.hidden_size)->capture_default_str();
  trn->add_option("--dropout", a.train.dropout)->capture_default_str();
  add_schedule_flags(trn, a);

  auto* grid = app.add_subcommand("gridsearch", "grid search over lr x batch x hidden x dropout");
  add_data_flags(grid, a);
  add_common_flags(grid, a, true);
  grid->add_option("--space", a.space, "grid space")->check(CLI::IsMember({"default"}))->capture_default_str();
  grid->add_option("--lrs", a.lrs, "restrict learning rates");
  grid->add_option("--batch-sizes", a.batch_sizes, "restrict batch sizes");
  grid->add_option("--hidden-sizes", a.hidden_sizes, "restrict hidden sizes");
  grid->add_option("--dropouts", a.dropouts, "restrict dropouts");
  grid->add_option("--workers", a.workers, "concurrent grid points")->capture_default_str();
  grid->add_option("--select", a.select, "selection criterion")
      ->check(CLI::IsMember({"val_loss", "val_f1"}))
      ->capture_default_str();
  add_schedule_flags(grid, a);

  auto* base = app.add_subcommand("baseline", "KNN or linear SVM baseline");
  base->require_subcommand(1);
  auto* knn = base->add_subcommand("knn", "k-nearest neighbours");
  auto* svm = base->add_subcommand("svm", "one-vs-rest linear SVM");
  for (auto* cmd : {knn, svm}) {
    add_data_flags(cmd, a);
    add_common_flags(cmd, a, false);
  }
  knn->add_option("--k", a.k, "neighbours")->capture_default_str();
  knn->add_option("--metric", a.metric)->check(CLI::IsMember({"euclidean", "cosine"}))->capture_default_str();
  svm->add_option("--lambda", a.lambda, "L2 regularization")->capture_default_str();
  svm->add_option("--svm-epochs", a.svm_epochs, "passes over the data")->capture_default_str();

  auto* evl = app.add_subcommand("eval", "evaluate a checkpoint");
  evl->add_option("--checkpoint", a.checkpoint)->required();
  add_data_flags(evl, a);
  add_common_flags(evl, a, false);
  evl->add_option("--split", a.eval_split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();

  auto* rep = app.add_subcommand("report", "render report records as a table");
  rep->add_option("--in", a.records, "report.jsonl files")->required();
  rep->add_option("--format", a.format)->check(CLI::IsMember({"text", "records"}))->capture_default_str();
  rep->add_option("--out", a.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (pool->parsed()) return run_pool(a);
    if (join->parsed()) return run_join(a);
    if (trn->parsed()) return run_train(a);
    if (grid->parsed()) return run_gridsearch(a);
    if (knn->parsed()) return run_baseline(a, "knn");
    if (svm->parsed()) return run_baseline(a, "svm");
    if (evl->parsed()) return run_eval(a);
    if (rep->parsed()) return run_report(a);
  } catch (const MissingFile& e) {
    return map_exception(e, kMissingFile);
  } catch (const FormatError& e) {
    return map_exception(e, kSchemaViolation);
  } catch (const IoError& e) {
    return map_exception(e, kMissingFile);
  } catch (const InvalidArgument& e) {
    return map_exception(e, kInvalidArgument);
  } catch (const std::exception& e) {
    return map_exception(e, kFailure);
  }
  return kUsage;
}

int dispatch(const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("factprobe");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return dispatch(static_cast<int>(storage.size()), argv.data());
}

}  // namespace factprobe::cli
