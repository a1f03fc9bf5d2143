// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "factprobe/baselines.hpp"
#include "factprobe/cli.hpp"
#include "factprobe/detail/binary_io.hpp"
#include "factprobe/embedding_store.hpp"
#include "factprobe/grid_search.hpp"
#include "factprobe/metrics.hpp"
#include "factprobe/probe_model.hpp"
#include "factprobe/trainer.hpp"
#include "test_support.hpp"

using namespace factprobe;
namespace fs = std::filesystem;
namespace ft = factprobe::testing;

namespace {

constexpr double kGradTolerance = 1e-4;
constexpr double kGradSeconds = 10.0;
constexpr double kMetricTolerance = 1e-12;
constexpr double kEndToEndF1 = 0.95;
constexpr double kEndToEndSeconds = 60.0;
constexpr double kSeparability = 0.95;
constexpr double kSchedulerTolerance = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int quiet_cli(const std::vector<std::string>& args) {
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  const int code = cli::dispatch(args);
  std::cout.rdbuf(old);
  return code;
}

// Writes one embedding file per setup for a joined dataset.
void write_sets(const JoinedDataset& d, const fs::path& dir, const std::string& model) {
  for (const auto& set : ft::to_embedding_sets(d, model)) {
    const auto name = std::string(to_string(set.manifest.split)) + "_" +
                      std::string(to_string(set.manifest.input_setup)) + ".pfemb";
    write_embedding_set(set.manifest, set.records, (dir / name).string());
  }
}

// Fraction of `queries` whose KNN-oracle label over `train` is correct.
double knn_accuracy(const JoinedDataset& train, const JoinedDataset& queries) {
  const Eigen::MatrixXd rows = train.stacked().cast<double>();
  const Eigen::MatrixXd q = queries.stacked().cast<double>();
  std::size_t ok = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    ok += ft::knn_oracle(rows, train.labels, q.col(static_cast<Eigen::Index>(i)), 7) == queries.labels[i];
  }
  return static_cast<double>(ok) / static_cast<double>(queries.size());
}

JoinedDataset with_setups(JoinedDataset d, std::vector<InputSetup> setups) {
  d.setups = std::move(setups);
  return d;
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    std::vector<int> dims;
    int h;
    double p;
  };
  const std::vector<Case> cases{{{32}, 8, 0.0},           {{64}, 16, 0.2},         {{12, 40}, 8, 0.1},
                                {{64, 48}, 16, 0.4},      {{5, 17, 33, 64}, 8, 0.05},
                                {{20, 9, 64, 3}, 16, 0.1}};
  double worst = 0.0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    ProbeConfig c;
    c.input_dims = cases[i].dims;
    c.hidden_size = cases[i].h;
    c.dropout = cases[i].p;
    c.seed = 500 + i;
    worst = std::max(worst, ft::gradient_check(c, 3, 900 + i));
  }
  const double secs = seconds_since(t0);
  return {worst < kGradTolerance && secs < kGradSeconds,
          std::to_string(cases.size()) + " configs, max rel err " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome metrics_oracle() {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(uniform_below(rng, 2000));
    const auto preds = ft::random_labels(n, rng);
    const auto labels = ft::random_labels(n, rng);
    const auto got = f1_per_class(confusion(preds, labels));
    const auto want = ft::f1_oracle(preds, labels);
    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(got[c] - want[c]));
    worst = std::max(worst, std::abs(f1_macro(got) - (want[0] + want[1] + want[2]) / 3.0));
  }
  const std::vector labels{Label::Supported, Label::Supported, Label::Refuted, Label::NotEnoughInfo};
  const std::vector preds{Label::Supported, Label::Refuted, Label::Refuted, Label::NotEnoughInfo};
  const double macro = f1_macro(f1_per_class(confusion(preds, labels)));
  const bool example = std::abs(macro - 7.0 / 9.0) <= kMetricTolerance;
  return {worst <= kMetricTolerance && example,
          "1000 vectors, max abs diff " + fmt("%.1e", worst) + ", worked example " + fmt("%.15f", macro)};
}

Outcome knn_oracle_equivalence() {
  Rng rng(77);
  const Eigen::MatrixXd rows = ft::random_matrix(16, 500, rng);
  const auto labels = ft::random_labels(500, rng);
  const auto model = knn_fit(rows, labels, 7);
  int agree = 0;
  for (int q = 0; q < 100; ++q) {
    const Eigen::VectorXd query = ft::random_matrix(16, 1, rng);
    agree += knn_predict(model, query) == ft::knn_oracle(rows, labels, query, 7);
  }
  return {agree == 100, std::to_string(agree) + "/100 queries match"};
}

Outcome synthetic_end_to_end() {
  const std::vector<int> dims{32, 48};
  const std::vector setups{InputSetup::MmClaim, InputSetup::MmEvidence};
  const double sep = 0.42;
  const auto train = with_setups(ft::make_clusters(dims, 600, sep, 1, {1, 1, 1}, Split::Train, 7, "tr"), setups);
  const auto val = with_setups(ft::make_clusters(dims, 100, sep, 2, {1, 1, 1}, Split::Val, 7, "va"), setups);
  const auto test = with_setups(ft::make_clusters(dims, 100, sep, 3, {1, 1, 1}, Split::Test, 7, "te"), setups);
  const double separable = knn_accuracy(train, test);

  const auto dir = ft::temp_dir("accept_e2e");
  for (const auto* d : {&train, &val, &test}) write_sets(*d, dir / "", "synthetic");
  const auto t0 = std::chrono::steady_clock::now();
  const int code = quiet_cli({"train", "--preset", "mm_claim+mm_evidence", "--dataset", "mocheg", "--embeddings",
                              dir.string(), "--lr", "0.01", "--batch-size", "32", "--hidden-size", "128",
                              "--dropout", "0.1", "--out", (dir / "run").string()});
  const double secs = seconds_since(t0);
  if (code != 0) return {false, "train exited " + std::to_string(code)};
  const auto rep = from_record(detail::read_file((dir / "run" / "report.jsonl").string()));
  return {separable >= kSeparability && rep.f1_macro >= kEndToEndF1 && secs < kEndToEndSeconds &&
              rep.instances == 100,
          "KNN separability " + fmt("%.3f", separable) + ", test F1-macro " + fmt("%.3f", rep.f1_macro) + ", " +
              fmt("%.2f", secs) + " s"};
}

Outcome class_weight_behavior() {
  double weighted = 0.0, unweighted = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto train_set = ft::make_clusters({8}, 1200, 0.7, 100 + seed, {10, 1, 1}, Split::Train, 30 + seed);
    const auto val = ft::make_clusters({8}, 240, 0.7, 200 + seed, {10, 1, 1}, Split::Val, 30 + seed);
    const auto test = ft::make_clusters({8}, 600, 0.7, 300 + seed, {1, 1, 1}, Split::Test, 30 + seed);
    ProbeConfig pc;
    pc.input_dims = {8};
    pc.hidden_size = 32;
    pc.dropout = 0.1;
    pc.seed = seed;
    TrainConfig tc;
    tc.peak_lr = 1e-2;
    tc.seed = seed;
    for (bool w : {true, false}) {
      tc.weighted_loss = w;
      const auto result = train(pc, train_set, val, tc);
      const auto rep = evaluate_probe(result.best_params, test, "m", "x");
      const double minority = (rep.f1[1] + rep.f1[2]) / 2.0;
      (w ? weighted : unweighted) += minority / 3.0;
    }
  }
  return {weighted > unweighted,
          "minority F1 weighted " + fmt("%.4f", weighted) + " vs unweighted " + fmt("%.4f", unweighted)};
}

Outcome scheduler_values() {
  const double peak = 1e-2;
  double worst = 0.0;
  for (std::int64_t total : {100, 200, 380, 1000, 4000}) {
    const auto ws = warmup_steps(total, 0.05);
    if (ws != static_cast<std::int64_t>(std::ceil(0.05 * static_cast<double>(total)))) return {false, "warmup steps"};
    worst = std::max(worst, std::abs(cosine_lr(0, total, 0.05, peak)));
    worst = std::max(worst, std::abs(cosine_lr(ws, total, 0.05, peak) - peak));
    worst = std::max(worst, std::abs(cosine_lr(total, total, 0.05, peak)));
    if ((total - ws) % 2 == 0) {
      worst = std::max(worst, std::abs(cosine_lr(ws + (total - ws) / 2, total, 0.05, peak) - peak / 2));
    }
  }
  return {worst <= kSchedulerTolerance, "max deviation " + fmt("%.1e", worst)};
}

Outcome early_stopping() {
  const auto data = ft::make_clusters({6}, 96, 1.0, 5);
  ProbeConfig pc;
  pc.input_dims = {6};
  pc.hidden_size = 16;
  TrainConfig tc;
  tc.peak_lr = 1e-2;
  std::vector<ProbeParamsf> snapshots;
  const auto r = train_with_validator(pc, data, tc, [&](const ProbeParamsf& p, int epoch) {
    snapshots.push_back(p);
    return 0.5 + 0.1 * epoch;
  });
  const bool ok = r.log.size() == 6 && r.stopped_early && r.best_epoch == 1 && r.best_params == snapshots.front() &&
                  !(snapshots.front() == snapshots.back());
  return {ok, "stopped after epoch " + std::to_string(r.log.size()) + ", best epoch " + std::to_string(r.best_epoch)};
}

Outcome grid_protocol() {
  const auto train = ft::make_clusters({12}, 300, 0.8, 11);
  const auto val = ft::make_clusters({12}, 90, 0.8, 12, {1, 1, 1}, Split::Val);
  const auto test = ft::make_clusters({12}, 90, 0.8, 13, {1, 1, 1}, Split::Test);
  GridSpace space;
  space.learning_rates = {1e-3, 1e-2};
  space.batch_sizes = {32};
  space.hidden_sizes = {128};
  space.dropouts = {0.1, 0.2};
  GridOptions opts;
  opts.base.max_epochs = 6;
  const auto result = run_grid(train, val, test, space, opts, "Qwen-VL", "mm_claim");
  std::size_t argmin = 0;
  for (std::size_t i = 1; i < result.runs.size(); ++i) {
    if (result.runs[i].best_val_loss < result.runs[argmin].best_val_loss) argmin = i;
  }
  const auto row = best_params_row(result, "Qwen-VL", "mm_claim");
  const auto table = export_best_params(std::span<const BestParamsRow>(&row, 1));
  const auto& pt = result.runs[argmin].point;
  const std::string expected_row = "Qwen-VL / mm_claim / 32 / " + format_hparam(pt.learning_rate) + " / 128 / " +
                                   format_hparam(pt.dropout) + "\n";
  const bool layout = table.ends_with(expected_row) &&
                      export_best_params(std::vector{BestParamsRow{"Qwen-VL", "mm_claim", 32, 0.01, 128, 0.1}})
                          .ends_with("Qwen-VL / mm_claim / 32 / 0.01 / 128 / 0.1\n");
  const bool ok = result.runs.size() == 4 && result.best_index == argmin && result.test_evaluations == 1 && layout;
  auto last = expected_row;
  last.pop_back();
  return {ok, std::to_string(result.runs.size()) + " configs, selected #" + std::to_string(result.best_index) +
                  ", test evaluations " + std::to_string(result.test_evaluations) + ", row \"" + last + "\""};
}

Outcome file_format() {
  Rng rng(10000);
  EmbeddingManifest m;
  m.source_model = "synthetic";
  m.ndim = 24;
  m.count = 10000;
  std::vector<PooledEmbedding> records(10000);
  for (std::size_t i = 0; i < records.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "claim-%05zu", i);
    records[i].instance_id = id;
    records[i].label = label_from_index(static_cast<int>(uniform_below(rng, 3)));
    records[i].vector = ft::random_matrix(24, 1, rng, 3.0).cast<float>();
  }
  const auto dir = ft::temp_dir("accept_format");
  const auto path = (dir / "big.pfemb").string();
  write_embedding_set(m, records, path);
  const auto bytes = detail::read_file(path);
  const auto back = read_embedding_set(path);
  const bool round_trip = back.manifest == m && back.records == records && encode_embedding_set(back.manifest, back.records) == bytes;

  auto error_of = [](const std::string& b) -> std::string {
    try {
      decode_embedding_set(b);
    } catch (const FormatError& e) {
      return e.what();
    }
    return "accepted";
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  const auto truncated = bytes.substr(0, bytes.size() - 100);
  // Re-declare the header with one record fewer than the payload holds.
  auto short_manifest = m;
  short_manifest.count = 9999;
  const std::vector<PooledEmbedding> fewer(records.begin(), records.end() - 1);
  const auto fewer_bytes = encode_embedding_set(short_manifest, fewer);
  detail::Reader rf(fewer_bytes), rb(bytes);
  rf.take(8);
  rb.take(8);
  const auto hf = 12 + rf.u32();
  const auto hb = 12 + rb.u32();
  const auto count_mismatch = fewer_bytes.substr(0, hf) + bytes.substr(hb);

  const auto e1 = error_of(bad_magic), e2 = error_of(truncated), e3 = error_of(count_mismatch);
  const bool errors = e1 == "bad magic" && e2 == "truncated payload" && e3 == "count mismatch";
  return {round_trip && errors, std::string(round_trip ? "10000 records bit-exact" : "round trip differs") +
                                    "; errors: " + e1 + ", " + e2 + ", " + e3};
}

Outcome determinism() {
  const std::vector setups{InputSetup::MmClaim};
  const auto dir = ft::temp_dir("accept_det");
  write_sets(with_setups(ft::make_clusters({10}, 200, 0.8, 1), setups), dir, "synthetic");
  write_sets(with_setups(ft::make_clusters({10}, 60, 0.8, 2, {1, 1, 1}, Split::Val), setups), dir, "synthetic");
  write_sets(with_setups(ft::make_clusters({10}, 60, 0.8, 3, {1, 1, 1}, Split::Test), setups), dir, "synthetic");
  auto read = [&](const fs::path& p) { return detail::read_file(p.string()); };
  std::vector<std::string> mismatches;
  for (const std::string cmd : {"train", "gridsearch"}) {
    for (const char* sub : {"a", "b"}) {
      std::vector<std::string> args{cmd, "--preset", "mm_claim", "--embeddings", dir.string(), "--epochs", "5",
                                    "--out", (dir / (cmd + sub)).string()};
      if (cmd == "gridsearch") {
        for (const char* extra : {"--lrs", "0.001", "0.01", "--batch-sizes", "32", "--hidden-sizes", "16",
                                  "--dropouts", "0.1", "0.2", "--workers", sub[0] == 'a' ? "1" : "2"}) {
          args.emplace_back(extra);
        }
      }
      if (quiet_cli(args) != 0) return {false, cmd + " failed"};
    }
    std::vector<std::string> files{"checkpoint.pfckpt", "report.txt", "report.jsonl", "train_log.jsonl"};
    if (cmd == "gridsearch") files.insert(files.end(), {"grid_summary.jsonl", "best_params.txt"});
    for (const auto& f : files) {
      if (read(dir / (cmd + "a") / f) != read(dir / (cmd + "b") / f)) mismatches.push_back(cmd + "/" + f);
    }
  }
  std::string detail = mismatches.empty() ? "train and gridsearch outputs bit-identical" : "differs:";
  for (const auto& m : mismatches) detail += " " + m;
  return {mismatches.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"metrics oracle equivalence", metrics_oracle},
      {"KNN oracle equivalence", knn_oracle_equivalence},
      {"synthetic end-to-end", synthetic_end_to_end},
      {"class-weight behavior", class_weight_behavior},
      {"scheduler values", scheduler_values},
      {"early stopping", early_stopping},
      {"grid protocol", grid_protocol},
      {"file format", file_format},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS  " : "FAIL  ") << name << "  (" << o.detail << ")" << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
