#include "factprobe/grid_search.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace factprobe {

std::vector<GridPoint> enumerate_grid(const GridSpace& space) {
  std::vector<GridPoint> out;
  out.reserve(space.size());
  for (double lr : space.learning_rates) {
    for (int batch : space.batch_sizes) {
      for (int hidden : space.hidden_sizes) {
        for (double p : space.dropouts) {
          out.push_back(GridPoint{out.size(), lr, batch, hidden, p});
        }
      }
    }
  }
  return out;
}

namespace {

// True when run a should be preferred over run b (a has the lower index on ties).
bool better(const GridRunSummary& a, const GridRunSummary& b, Selection selection) {
  if (selection == Selection::ValLoss) {
    if (a.best_val_loss != b.best_val_loss) return a.best_val_loss < b.best_val_loss;
  } else if (a.val_f1_macro != b.val_f1_macro) {
    return a.val_f1_macro > b.val_f1_macro;
  }
  return a.point.index < b.point.index;
}

}  // namespace

std::size_t select_best(std::span<const GridRunSummary> runs, Selection selection) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].diverged) continue;
    if (!best || better(runs[i], runs[*best], selection)) best = i;
  }
  if (!best) throw Error("all grid configurations diverged");
  return *best;
}

GridResult run_grid(const JoinedDataset& train_data, const JoinedDataset& val_data,
                    const JoinedDataset& test_data, const GridSpace& space,
                    const GridOptions& options, const std::string& model_id,
                    const std::string& input_name) {
  const auto points = enumerate_grid(space);
  if (points.empty()) throw InvalidArgument("empty grid");
  if (test_data.dims != train_data.dims) throw InvalidArgument("test dims differ from training dims");

  GridResult result;
  result.runs.resize(points.size());

  auto configs_for = [&](const GridPoint& pt) {
    ProbeConfig probe;
    probe.input_dims = train_data.dims;
    probe.hidden_size = pt.hidden_size;
    probe.dropout = pt.dropout;
    probe.seed = options.seed;
    TrainConfig tc = options.base;
    tc.batch_size = pt.batch_size;
    tc.peak_lr = pt.learning_rate;
    tc.seed = options.seed;
    return std::pair{probe, tc};
  };

  std::mutex mu;
  std::optional<std::size_t> best;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;

  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        const auto [probe, tc] = configs_for(points[i]);
        TrainResult tr = train(probe, train_data, val_data, tc);
        GridRunSummary s;
        s.point = points[i];
        s.best_val_loss = tr.best_val_loss;
        s.best_epoch = tr.best_epoch;
        s.epochs_run = static_cast<int>(tr.log.size());
        s.stopped_early = tr.stopped_early;
        s.diverged = tr.diverged || tr.best_epoch == 0;
        if (!s.diverged) {
          s.val_f1_macro = evaluate_probe(tr.best_params, val_data, model_id, input_name).f1_macro;
        }

        std::lock_guard lock(mu);
        result.runs[i] = s;
        if (!s.diverged && (!best || better(s, result.runs[*best], options.selection))) {
          best = i;
          result.best_probe_config = probe;
          result.best_train_config = tc;
          result.best_train = std::move(tr);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = points.size();
      }
    }
  };

  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(points.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  result.best_index = select_best(result.runs, options.selection);
  result.test_report =
      evaluate_probe(result.best_train.best_params, test_data, model_id, input_name);
  ++result.test_evaluations;
  return result;
}

std::string format_grid_summary(std::span<const GridRunSummary> runs) {
  std::ostringstream out;
  for (const auto& r : runs) {
    nlohmann::json config{{"index", r.point.index},
                          {"learning_rate", r.point.learning_rate},
                          {"batch_size", r.point.batch_size},
                          {"hidden_size", r.point.hidden_size},
                          {"dropout", r.point.dropout}};
    nlohmann::json rec{{"config", config},
                       {"best_epoch", r.best_epoch},
                       {"epochs_run", r.epochs_run},
                       {"stopped_early", r.stopped_early},
                       {"diverged", r.diverged},
                       {"val_f1_macro", r.val_f1_macro}};
    // Non-finite losses are not representable in JSON.
    rec["best_val_loss"] = std::isfinite(r.best_val_loss) ? nlohmann::json(r.best_val_loss)
                                                          : nlohmann::json(nullptr);
    out << rec.dump() << '\n';
  }
  return out.str();
}

std::string format_hparam(double value) {
  char buf[64];
  const bool scientific = value != 0.0 && std::fabs(value) < 1e-4;
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value,
                                 scientific ? std::chars_format::scientific : std::chars_format::fixed);
  if (ec != std::errc{}) throw InvalidArgument("value not representable");
  std::string out(buf, end);
  for (auto& ch : out) {
    if (ch == 'e') ch = 'E';
  }
  return out;
}

BestParamsRow best_params_row(const GridResult& result, std::string embedding, std::string input) {
  const auto& pt = result.runs.at(result.best_index).point;
  return BestParamsRow{std::move(embedding), std::move(input), pt.batch_size, pt.learning_rate,
                       pt.hidden_size, pt.dropout};
}

std::string export_best_params(std::span<const BestParamsRow> rows) {
  std::ostringstream out;
  out << "Embedding / Input / Batch size / Learning rate / Hidden size / Dropout\n";
  for (const auto& r : rows) {
    out << r.embedding << " / " << r.input << " / " << r.batch_size << " / "
        << format_hparam(r.learning_rate) << " / " << r.hidden_size << " / "
        << format_hparam(r.dropout) << '\n';
  }
  return out.str();
}

}  // namespace factprobe
