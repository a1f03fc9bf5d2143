#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "factprobe/embedding_store.hpp"
#include "factprobe/metrics.hpp"
#include "factprobe/probe_model.hpp"
#include "factprobe/trainer.hpp"

namespace factprobe {

struct GridSpace {
  std::vector<double> learning_rates = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  std::vector<int> batch_sizes = {32, 64, 128};
  std::vector<int> hidden_sizes = {128, 256, 512};
  std::vector<double> dropouts = {0.05, 0.1, 0.2, 0.4};

  std::size_t size() const {
    return learning_rates.size() * batch_sizes.size() * hidden_sizes.size() * dropouts.size();
  }
};

struct GridPoint {
  std::size_t index = 0;
  double learning_rate = 0.0;
  int batch_size = 0;
  int hidden_size = 0;
  double dropout = 0.0;
};

/// Lexicographic in (learning rate, batch size, hidden size, dropout),
/// each axis in the order given by the space.
std::vector<GridPoint> enumerate_grid(const GridSpace& space);

enum class Selection { ValLoss, ValF1 };

struct GridOptions {
  std::uint64_t seed = 42;
  int workers = 1;
  Selection selection = Selection::ValLoss;
  // Epoch budget, patience, warmup and Adam constants. Batch size and
  // learning rate come from each grid point.
  TrainConfig base;
};

struct GridRunSummary {
  GridPoint point;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  bool stopped_early = false;
  bool diverged = false;
  double val_f1_macro = 0.0;
};

struct GridResult {
  std::vector<GridRunSummary> runs;  // in grid order
  std::size_t best_index = 0;
  ProbeConfig best_probe_config;
  TrainConfig best_train_config;
  TrainResult best_train;
  EvalReport test_report;
  int test_evaluations = 0;
};

/// Index of the selected run: lowest val loss (or highest val F1), ties to
/// the lower grid index, diverged runs excluded. Throws Error when every
/// run diverged.
std::size_t select_best(std::span<const GridRunSummary> runs, Selection selection);

/// Trains every grid point with the same seed on up to options.workers
/// threads and evaluates the test split once, for the selected run only.
GridResult run_grid(const JoinedDataset& train_data, const JoinedDataset& val_data,
                    const JoinedDataset& test_data, const GridSpace& space,
                    const GridOptions& options, const std::string& model_id,
                    const std::string& input_name);

/// One structured record per run.
std::string format_grid_summary(std::span<const GridRunSummary> runs);

/// Hyperparameter value as printed in the best-parameter table: plain
/// shortest decimal ("0.01", "0.05", "0.0001"), scientific below 1e-4 ("1E-05").
std::string format_hparam(double value);

struct BestParamsRow {
  std::string embedding;
  std::string input;
  int batch_size = 0;
  double learning_rate = 0.0;
  int hidden_size = 0;
  double dropout = 0.0;
};

BestParamsRow best_params_row(const GridResult& result, std::string embedding, std::string input);

/// Header plus one "embedding / input / batch / lr / hidden / dropout" line
/// per row.
std::string export_best_params(std::span<const BestParamsRow> rows);

}  // namespace factprobe
