// Command-line front end: experiments, sweeps, seasonal runs, plotting, and
// the two verification suites (gradcheck, oracle-check).

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "homeostat/controller.hpp"
#include "homeostat/experiment.hpp"
#include "homeostat/oracle.hpp"
#include "homeostat/plot.hpp"
#include "homeostat/rng.hpp"

namespace hs = homeostat;

namespace {

struct Overrides {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<int> threads;
};

hs::ExperimentConfig load_with_overrides(const std::string& path, const Overrides& ov) {
  hs::ExperimentConfig cfg = hs::load_config(path);
  if (!ov.out.empty()) cfg.out_dir = ov.out;
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.replicates) cfg.replicates = *ov.replicates;
  if (ov.threads) cfg.threads = *ov.threads;
  cfg.validate();
  return cfg;
}

int finish_run(const hs::ExperimentConfig& cfg, const hs::ExperimentResult& result) {
  std::filesystem::create_directories(cfg.out_dir);
  hs::write_csv(result.rows, cfg.out_dir + "/metrics.csv");
  hs::write_aggregate_csv(result.aggregates, cfg.out_dir + "/aggregate.csv");
  for (const auto& f : result.failures) std::cerr << "replicate failed: " << f << "\n";
  std::cout << "wrote " << result.rows.size() << " metric rows to " << cfg.out_dir
            << "/metrics.csv\n";
  return result.failures.empty() ? 0 : 2;
}

int cmd_run(const std::string& config_path, const Overrides& ov) {
  const auto cfg = load_with_overrides(config_path, ov);
  const auto data = hs::load_data(cfg);
  return finish_run(cfg, hs::run_experiment(cfg, data));
}

int cmd_sweep(const std::string& config_path, const Overrides& ov) {
  auto cfg = load_with_overrides(config_path, ov);
  if (cfg.shift_mode != hs::ShiftMode::ConstantRate)
    throw hs::ConfigError("sweep requires shift_mode = constant");
  const auto data = hs::load_data(cfg);
  const auto result = hs::run_experiment(cfg, data);
  std::filesystem::create_directories(cfg.out_dir);
  for (double rate : cfg.shift_rates) {
    std::vector<hs::AggregateRow> rows;
    for (const auto& a : result.aggregates)
      if (a.shift_rate == rate) rows.push_back(a);
    hs::write_aggregate_csv(rows, cfg.out_dir + "/aggregate_rate" + hs::format_double(rate) +
                                      ".csv");
  }
  return finish_run(cfg, result);
}

int cmd_seasonal(const std::string& config_path, const Overrides& ov) {
  auto cfg = load_with_overrides(config_path, ov);
  cfg.shift_mode = hs::ShiftMode::Seasonal;
  const auto data = hs::load_data(cfg);
  return finish_run(cfg, hs::run_experiment(cfg, data));
}

int cmd_gradcheck() {
  auto rng = hs::make_rng(7, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const bool full_size = trial % 4 == 0;
    const std::vector<int> dims =
        full_size ? std::vector<int>{784, 80, 60, 10} : std::vector<int>{15, 9, 7, 10};
    hs::Mlp net(dims, rng);
    const int n = 6;
    hs::Batch batch;
    batch.images.resize(dims.front(), n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> cls(0, 9);
    for (int i = 0; i < n; ++i) {
      for (int p = 0; p < dims.front(); ++p) batch.images(p, i) = unit(rng);
      batch.labels.push_back(cls(rng));
    }
    // full nets get a sampled parameter subset, small nets every parameter
    const double err = full_size ? hs::gradient_check(net, batch, 1e-5, 200, &rng)
                                 : hs::gradient_check(net, batch, 1e-5);
    worst = std::max(worst, err);
  }
  std::printf("gradcheck: max relative error %.3e (tolerance 1e-4)\n", worst);
  return worst <= 1e-4 ? 0 : 1;
}

int cmd_oracle_check(int trials) {
  auto rng = hs::make_rng(11, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, 9);
  std::uniform_int_distribution<int> store_n(0, 6);
  int mismatches = 0;
  for (int t = 0; t < trials; ++t) {
    hs::Mlp net({12, 8, 10}, rng);
    hs::LrPolicy policy;
    // log-uniform lr across the bounds; sometimes pinned at a bound so the
    // clamp-tie path is exercised
    const double u = unit(rng);
    double lr = policy.lr_min * std::pow(policy.lr_max / policy.lr_min, u);
    if (t % 17 == 0) lr = policy.lr_min;
    if (t % 23 == 0) lr = policy.lr_max;
    hs::HomeostatState state =
        hs::HomeostatState::make(hs::ControllerKind::Homeostatic, policy, 8, 99);
    state.lr = lr;
    const int n = store_n(rng);
    for (int i = 0; i < n; ++i) {
      hs::Vec img(12);
      for (int p = 0; p < 12; ++p) img[p] = unit(rng);
      state.store.push(img, cls(rng));
    }
    const int predicted = cls(rng);
    const hs::Decision fast = hs::counterfactual_decide(net, state, predicted);
    const hs::Decision slow = hs::oracle_decide(net, state, predicted);
    if (fast.ingest != slow.ingest) {
      ++mismatches;
      std::fprintf(stderr, "mismatch at trial %d: impl=%d oracle=%d (losses %.12g/%.12g vs %.12g/%.12g)\n",
                   t, fast.ingest, slow.ingest, fast.loss_ingest, fast.loss_reject,
                   slow.loss_ingest, slow.loss_reject);
    }
  }
  std::printf("oracle-check: %d/%d decisions matched\n", trials - mismatches, trials);
  return mismatches == 0 ? 0 : 1;
}

int cmd_plot(const std::string& csv_path, const std::string& spec_path,
             const std::string& out_path) {
  std::ifstream f(spec_path);
  if (!f) throw hs::IoError("cannot open plot spec " + spec_path);
  std::stringstream ss;
  ss << f.rdbuf();
  const hs::PlotSpec spec = hs::parse_plot_spec(ss.str());
  const auto rows = hs::read_aggregate_csv(csv_path);
  hs::write_plot(rows, spec, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_synth(const std::string& out_dir, int train_n, int val_n, std::uint64_t seed,
              double noise) {
  std::filesystem::create_directories(out_dir);
  const hs::Dataset train = hs::make_synthetic(train_n, seed, noise, hs::Split::Train);
  hs::save_idx(train, out_dir + "/train-images-idx3-ubyte", out_dir + "/train-labels-idx1-ubyte");
  const hs::Dataset val = hs::make_synthetic(val_n, seed, noise, hs::Split::Validation);
  hs::save_idx(val, out_dir + "/val-images-idx3-ubyte", out_dir + "/val-labels-idx1-ubyte");
  std::cout << "wrote " << train_n << " train / " << val_n << " validation samples to "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homeostatic learning-rate experiments"};
  app.require_subcommand(1);

  Overrides ov;
  app.add_option("--out", ov.out, "Override output directory");
  app.add_option("--seed", ov.seed, "Override base seed");
  app.add_option("--replicates", ov.replicates, "Override replicate count");
  app.add_option("--threads", ov.threads, "Override worker thread count");

  std::string config_path, csv_path, spec_path, plot_out = "plot.svg";
  std::string synth_dir = "data";
  int synth_train = 60000, synth_val = 10000, oracle_trials = 1000;
  std::uint64_t synth_seed = 1;
  double synth_noise = 0.15;

  auto* run = app.add_subcommand("run", "Run the configured experiment grid");
  run->add_option("config", config_path, "Config file")->required();
  auto* sweep = app.add_subcommand("sweep", "Run a shift-rate sweep, one aggregate CSV per rate");
  sweep->add_option("config", config_path, "Config file")->required();
  auto* seasonal = app.add_subcommand("seasonal", "Run with a seasonal shift schedule");
  seasonal->add_option("config", config_path, "Config file")->required();
  auto* plot = app.add_subcommand("plot", "Render an SVG chart from an aggregate CSV");
  plot->add_option("aggregate", csv_path, "Aggregate CSV")->required();
  plot->add_option("spec", spec_path, "Plot spec file")->required();
  plot->add_option("--plot-out", plot_out, "Output SVG path");
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  auto* oracle = app.add_subcommand("oracle-check", "Counterfactual decision oracle suite");
  oracle->add_option("--trials", oracle_trials, "Number of randomized states");
  auto* synth = app.add_subcommand("synth", "Generate a synthetic IDX dataset pair");
  synth->add_option("--data-out", synth_dir, "Output directory");
  synth->add_option("--train", synth_train, "Training samples");
  synth->add_option("--val", synth_val, "Validation samples");
  synth->add_option("--synth-seed", synth_seed, "Generator seed");
  synth->add_option("--noise", synth_noise, "Corruption level in [0,1]");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, ov);
    if (sweep->parsed()) return cmd_sweep(config_path, ov);
    if (seasonal->parsed()) return cmd_seasonal(config_path, ov);
    if (plot->parsed()) return cmd_plot(csv_path, spec_path, plot_out);
    if (gradcheck->parsed()) return cmd_gradcheck();
    if (oracle->parsed()) return cmd_oracle_check(oracle_trials);
    if (synth->parsed()) return cmd_synth(synth_dir, synth_train, synth_val, synth_seed, synth_noise);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
