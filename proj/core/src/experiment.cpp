#include "homeostat/experiment.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "homeostat/controller.hpp"
#include "homeostat/rng.hpp"

namespace homeostat {

LoadedData load_data(const ExperimentConfig& cfg) {
  LoadedData d;
  d.train = load_idx(cfg.resolve_path(cfg.train_images), cfg.resolve_path(cfg.train_labels),
                     Split::Train);
  d.validation = load_idx(cfg.resolve_path(cfg.val_images), cfg.resolve_path(cfg.val_labels),
                          Split::Validation);
  return d;
}

namespace {

std::string cell_tag(ControllerKind kind, double rate, int replicate) {
  std::ostringstream s;
  s << to_string(kind) << "_rate" << format_double(rate) << "_rep" << replicate;
  return s.str();
}

}  // namespace

ReplicateResult run_replicate(const ExperimentConfig& cfg, const LoadedData& data,
                              ControllerKind kind, const ShiftSchedule& schedule,
                              double reported_rate, int replicate) {
  ReplicateResult result;
  try {
    std::ofstream step_csv;
    if (cfg.log_steps) {
      std::filesystem::create_directories(cfg.out_dir);
      step_csv.open(cfg.out_dir + "/steps_" + cell_tag(kind, reported_rate, replicate) + ".csv");
      if (!step_csv) throw IoError("cannot write step log in " + cfg.out_dir);
      step_csv << "presentation,predicted,true,correct,ingest,expected_dir,realized_dir,"
                  "lr_before,lr_after,loss\n";
    }
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(replicate);
    auto subset_rng = make_rng(seed, 0x5B);
    const Dataset train = stratified_subset(data.train, cfg.train_subset, subset_rng);
    const Dataset val = stratified_subset(data.validation, cfg.val_subset, subset_rng);
    const Batch val_batch = as_batch(val);

    auto weight_rng = make_rng(seed, 0x11);
    Mlp net({static_cast<int>(data.train.images.rows()), 80, 60, 10}, weight_rng);

    DriftStream stream(train, schedule, sub_seed(seed, 0x57));
    HomeostatState state =
        HomeostatState::make(kind, cfg.lr, cfg.store_capacity, sub_seed(seed, 0xC0));
    state.cf_passes = cfg.cf_passes;
    state.realized_effect = cfg.realized_effect;

    const long total = static_cast<long>(cfg.epochs) * cfg.epoch_length;
    long interval_ingests = 0;
    long interval_decisions = 0;
    long interval_correct = 0;
    long interval_count = 0;

    for (long p = 0; p < total; ++p) {
      const Presentation pres = stream.next();
      const StepLog log =
          controller_step(net, state, stream.image(pres), pres.label, p);
      ++interval_count;
      if (log.correct) ++interval_correct;
      if (log.decision) {
        ++interval_decisions;
        if (log.decision->ingest) ++interval_ingests;
      }
      if (step_csv.is_open()) {
        step_csv << log.presentation_index << ',' << log.predicted_label << ','
                 << log.true_label << ',' << (log.correct ? 1 : 0) << ','
                 << (log.decision && log.decision->ingest ? 1 : 0) << ','
                 << (log.decision ? log.decision->expected_direction : 0) << ','
                 << (log.decision ? log.decision->realized_direction : 0) << ','
                 << format_double(log.lr_before) << ',' << format_double(log.lr_after) << ','
                 << format_double(log.loss) << '\n';
      }

      if ((p + 1) % cfg.eval_interval == 0) {
        const EvalResult ev = evaluate(net, val_batch, stream.permutation());
        MetricsRow row;
        row.replicate = replicate;
        row.learner = kind;
        row.shift_rate = reported_rate;
        row.epoch = static_cast<int>(p / cfg.epoch_length);
        row.presentation = p + 1;
        row.val_accuracy = ev.accuracy;
        row.val_loss = ev.mean_loss;
        row.lr = state.lr;
        row.ingest_rate = interval_decisions > 0
                              ? static_cast<double>(interval_ingests) /
                                    static_cast<double>(interval_decisions)
                              : std::numeric_limits<double>::quiet_NaN();
        row.train_accuracy =
            static_cast<double>(interval_correct) / static_cast<double>(interval_count);
        result.rows.push_back(row);
        interval_ingests = interval_decisions = interval_correct = interval_count = 0;
      }
    }
    result.events = stream.event_log();
  } catch (const std::exception& e) {
    result.failed = true;
    result.error = to_string(kind) + " rate " + format_double(reported_rate) + " replicate " +
                   std::to_string(replicate) + ": " + e.what();
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const LoadedData& data) {
  struct Cell {
    ControllerKind kind;
    ShiftSchedule schedule;
    double rate;
    int replicate;
  };
  std::vector<Cell> cells;
  for (const auto kind : cfg.learners) {
    if (cfg.shift_mode == ShiftMode::ConstantRate) {
      for (double rate : cfg.shift_rates)
        for (int r = 0; r < cfg.replicates; ++r)
          cells.push_back({kind, ShiftSchedule::constant(rate, cfg.epoch_length), rate, r});
    } else {
      for (int r = 0; r < cfg.replicates; ++r)
        cells.push_back({kind, cfg.seasonal_schedule(), cfg.storm_rate, r});
    }
  }

  std::vector<ReplicateResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& c = cells[i];
      results[i] = run_replicate(cfg, data, c.kind, c.schedule, c.rate, c.replicate);
    }
  };
  const int nthreads = std::min<int>(cfg.threads, static_cast<int>(cells.size()));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (r.failed) {
      out.failures.push_back(r.error);
      continue;
    }
    out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
    if (cfg.log_events) {
      std::filesystem::create_directories(cfg.out_dir);
      const Cell& c = cells[i];
      write_event_log(r.events,
                      cfg.out_dir + "/events_" + cell_tag(c.kind, c.rate, c.replicate) + ".csv");
    }
  }
  out.aggregates = aggregate(out.rows);
  return out;
}

}  // namespace homeostat
