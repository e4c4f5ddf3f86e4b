#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "homeostat/experiment.hpp"
#include "homeostat/plot.hpp"

namespace hs = homeostat;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "homeostat_harness_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kMinimalConfig =
    "train_images = ti\n"
    "train_labels = tl\n"
    "val_images = vi\n"
    "val_labels = vl\n";

}  // namespace

TEST_CASE("minimal config gets the documented defaults") {
  const auto cfg = hs::parse_config(kMinimalConfig);
  CHECK(cfg.lr.lr_init == 0.005);
  CHECK(cfg.lr.delta == 0.2);
  CHECK(cfg.epochs == 20);
  CHECK(cfg.replicates == 5);
  CHECK(cfg.learners.size() == 3);
  CHECK(cfg.shift_rates == std::vector<double>{0.0});
  CHECK(cfg.store_capacity == 100);
  CHECK(cfg.realized_effect == hs::RealizedEffect::TrueLabel);
}

TEST_CASE("config parsing errors carry line numbers") {
  SUBCASE("unknown key") {
    const std::string text = std::string(kMinimalConfig) + "no_such_key = 1\n";
    try {
      hs::parse_config(text);
      FAIL("expected ConfigError");
    } catch (const hs::ConfigError& e) {
      CHECK(std::string(e.what()).find("line 5") != std::string::npos);
      CHECK(std::string(e.what()).find("no_such_key") != std::string::npos);
    }
  }
  SUBCASE("duplicate key") {
    const std::string text = std::string(kMinimalConfig) + "epochs = 5\nepochs = 6\n";
    CHECK_THROWS_AS(hs::parse_config(text), hs::ConfigError);
  }
  SUBCASE("malformed number") {
    const std::string text = std::string(kMinimalConfig) + "epochs = five\n";
    CHECK_THROWS_AS(hs::parse_config(text), hs::ConfigError);
  }
  SUBCASE("comments and blank lines are fine") {
    const std::string text = std::string("# leading comment\n\n") + kMinimalConfig;
    CHECK_NOTHROW(hs::parse_config(text));
  }
}

TEST_CASE("config validation rejects degenerate runs") {
  auto cfg = hs::parse_config(kMinimalConfig);
  SUBCASE("zero replicates") {
    cfg.replicates = 0;
    CHECK_THROWS_AS(cfg.validate(), hs::ConfigError);
  }
  SUBCASE("missing dataset path") {
    cfg.train_images.clear();
    CHECK_THROWS_AS(cfg.validate(), hs::ConfigError);
  }
  SUBCASE("no learners") {
    cfg.learners.clear();
    CHECK_THROWS_AS(cfg.validate(), hs::ConfigError);
  }
  SUBCASE("negative shift rate") {
    cfg.shift_rates = {-1.0};
    CHECK_THROWS_AS(cfg.validate(), hs::ConfigError);
  }
}

TEST_CASE("config serialization round-trips") {
  auto cfg = hs::parse_config(kMinimalConfig);
  cfg.shift_rates = {0.0, 2.5, 20.0};
  cfg.learners = {hs::ControllerKind::Homeostatic, hs::ControllerKind::Constant};
  cfg.lr.delta = 0.3;
  cfg.seed = 99;
  const auto back = hs::parse_config(hs::serialize_config(cfg));
  CHECK(back.shift_rates == cfg.shift_rates);
  CHECK(back.learners == cfg.learners);
  CHECK(back.lr.delta == cfg.lr.delta);
  CHECK(back.seed == cfg.seed);
  // a second serialize of the parsed copy is byte-identical
  CHECK(hs::serialize_config(back) == hs::serialize_config(cfg));
}

TEST_CASE("relative paths resolve against data_dir or the environment") {
  auto cfg = hs::parse_config(kMinimalConfig);
  cfg.data_dir = "/data/root";
  CHECK(cfg.resolve_path("x") == "/data/root/x");
  CHECK(cfg.resolve_path("/abs/x") == "/abs/x");
  cfg.data_dir.clear();
  setenv("HOMEOSTAT_DATA_DIR", "/from/env", 1);
  CHECK(cfg.resolve_path("x") == "/from/env/x");
  unsetenv("HOMEOSTAT_DATA_DIR");
}

TEST_CASE("controller kind names") {
  CHECK(hs::to_string(hs::ControllerKind::Homeostatic) == "homeostatic");
  CHECK(hs::controller_from_string("random") == hs::ControllerKind::RandomWalk);
  CHECK(hs::controller_from_string("constant") == hs::ControllerKind::Constant);
  CHECK_THROWS_AS(hs::controller_from_string("adam"), hs::ConfigError);
}

TEST_CASE("mean and standard error") {
  const auto r = hs::mean_sem({0.4, 0.6});
  CHECK(r.mean == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.sem == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(hs::mean_sem({0.7}).sem == 0.0);

  // agreement with a streaming (Welford) computation
  auto rng = std::mt19937_64(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> xs;
  double mean = 0.0, m2 = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    const double x = unit(rng);
    xs.push_back(x);
    const double d1 = x - mean;
    mean += d1 / i;
    m2 += d1 * (x - mean);
  }
  const auto batch = hs::mean_sem(xs);
  const double sem = std::sqrt(m2 / (xs.size() - 1)) / std::sqrt(double(xs.size()));
  CHECK(batch.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(batch.sem == doctest::Approx(sem).epsilon(1e-12));
}

TEST_CASE("aggregation keeps the epoch-end row of each replicate") {
  std::vector<hs::MetricsRow> rows;
  for (int rep = 0; rep < 2; ++rep)
    for (long pres : {500L, 1000L}) {  // mid-epoch and epoch-end evals
      hs::MetricsRow r;
      r.replicate = rep;
      r.learner = hs::ControllerKind::Constant;
      r.shift_rate = 0;
      r.epoch = 0;
      r.presentation = pres;
      r.val_accuracy = pres == 1000 ? 0.8 + 0.1 * rep : 0.1;
      r.lr = 0.005;
      rows.push_back(r);
    }
  const auto agg = hs::aggregate(rows);
  REQUIRE(agg.size() == 1);
  CHECK(agg[0].n_replicates == 2);
  CHECK(agg[0].acc_mean == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(agg[0].acc_sem == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(agg[0].lr_mean == doctest::Approx(0.005));
}

TEST_CASE("empty tables still write their headers") {
  const auto dir = temp_dir();
  const auto mpath = (dir / "empty_metrics.csv").string();
  const auto apath = (dir / "empty_agg.csv").string();
  hs::write_csv({}, mpath);
  hs::write_aggregate_csv({}, apath);
  CHECK(slurp(mpath) ==
        "replicate,learner,shift_rate,epoch,presentation,val_accuracy,val_loss,lr,"
        "ingest_rate,train_accuracy\n");
  CHECK(slurp(apath) ==
        "learner,shift_rate,epoch,acc_mean,acc_sem,lr_mean,lr_sem,n_replicates\n");
}

TEST_CASE("aggregate CSV re-export is byte-identical") {
  const auto dir = temp_dir();
  std::vector<hs::AggregateRow> rows;
  for (int e = 0; e < 3; ++e) {
    hs::AggregateRow r;
    r.learner = hs::ControllerKind::Homeostatic;
    r.shift_rate = 2.5;
    r.epoch = e;
    r.acc_mean = 0.123456789 + e;
    r.acc_sem = 0.01;
    r.lr_mean = 0.005;
    r.lr_sem = 1e-4;
    r.n_replicates = 5;
    rows.push_back(r);
  }
  const auto p1 = (dir / "agg1.csv").string();
  const auto p2 = (dir / "agg2.csv").string();
  hs::write_aggregate_csv(rows, p1);
  hs::write_aggregate_csv(hs::read_aggregate_csv(p1), p2);
  CHECK(slurp(p1) == slurp(p2));
}

namespace {

hs::ExperimentConfig tiny_config() {
  auto cfg = hs::parse_config(kMinimalConfig);
  cfg.train_subset = 100;
  cfg.val_subset = 50;
  cfg.epochs = 2;
  cfg.epoch_length = 60;
  cfg.eval_interval = 30;
  cfg.learners = {hs::ControllerKind::Homeostatic, hs::ControllerKind::Constant};
  cfg.shift_rates = {0.0, 3.0};
  cfg.store_capacity = 5;
  cfg.replicates = 2;
  cfg.seed = 5;
  return cfg;
}

hs::LoadedData tiny_data() {
  hs::LoadedData data;
  data.train = hs::make_synthetic(150, 3, 0.2, hs::Split::Train);
  data.validation = hs::make_synthetic(60, 3, 0.2, hs::Split::Validation);
  return data;
}

}  // namespace

TEST_CASE("experiments are deterministic and thread-count invariant") {
  const auto dir = temp_dir();
  const auto cfg = tiny_config();
  const auto data = tiny_data();

  auto run_to_file = [&](int threads, const std::string& name) {
    auto c = cfg;
    c.threads = threads;
    const auto result = hs::run_experiment(c, data);
    REQUIRE(result.failures.empty());
    const auto path = (dir / name).string();
    hs::write_csv(result.rows, path);
    return slurp(dir / name);
  };

  const std::string a = run_to_file(1, "a.csv");
  const std::string b = run_to_file(1, "b.csv");
  const std::string c = run_to_file(2, "c.csv");
  CHECK(a == b);
  CHECK(a == c);
  CHECK(a.find("homeostatic") != std::string::npos);
  CHECK(a.find("constant") != std::string::npos);
}

TEST_CASE("replicate rows cover the full grid") {
  const auto cfg = tiny_config();
  const auto result = hs::run_experiment(cfg, tiny_data());
  // learners x rates x replicates x (epochs * evals per epoch)
  CHECK(result.rows.size() == 2u * 2u * 2u * (2u * 2u));
  // aggregate: learners x rates x epochs
  CHECK(result.aggregates.size() == 2u * 2u * 2u);
  for (const auto& agg : result.aggregates) CHECK(agg.n_replicates == 2);
}

TEST_CASE("constant learner ignores the homeostat knobs") {
  auto cfg = tiny_config();
  cfg.learners = {hs::ControllerKind::Constant};
  const auto data = tiny_data();
  const auto r1 = hs::run_experiment(cfg, data);
  cfg.store_capacity = 37;
  cfg.cf_passes = 2;
  const auto r2 = hs::run_experiment(cfg, data);
  REQUIRE(r1.rows.size() == r2.rows.size());
  for (std::size_t i = 0; i < r1.rows.size(); ++i) {
    CHECK(r1.rows[i].val_accuracy == r2.rows[i].val_accuracy);
    CHECK(r1.rows[i].lr == r2.rows[i].lr);
  }
}

TEST_CASE("plots render one series per learner and rate") {
  std::vector<hs::AggregateRow> rows;
  for (auto kind : {hs::ControllerKind::Homeostatic, hs::ControllerKind::Constant})
    for (int e = 0; e < 4; ++e) {
      hs::AggregateRow r;
      r.learner = kind;
      r.shift_rate = 10;
      r.epoch = e;
      r.acc_mean = 0.5 + 0.05 * e;
      r.acc_sem = 0.02;
      r.lr_mean = 0.005;
      r.n_replicates = 3;
      rows.push_back(r);
    }

  hs::PlotSpec spec;
  spec.title = "sweep";
  const std::string svg = hs::render_plot(rows, spec);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("#1f77b4") != std::string::npos);  // homeostatic series color
  CHECK(svg.find("#d62728") != std::string::npos);  // constant series color
  CHECK(svg.find("sweep") != std::string::npos);

  SUBCASE("rate filter with no matches refuses to render") {
    spec.rates = {123.0};
    CHECK_THROWS_AS(hs::render_plot(rows, spec), hs::ConfigurationError);
  }
  SUBCASE("spec text parses") {
    const auto parsed = hs::parse_plot_spec("metric = lr\nlog_y = true\ntitle = t\n");
    CHECK(parsed.metric == hs::PlotSpec::Metric::LearningRate);
    CHECK(parsed.log_y);
    CHECK(parsed.title == "t");
  }
}
