#include "homeostat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <tuple>

#include "homeostat/dataset.hpp"

namespace homeostat {

MeanSem mean_sem(const std::vector<double>& values) {
  MeanSem r;
  const auto n = values.size();
  if (n == 0) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(n);
  if (n < 2) return r;  // SEM defined as 0 for a single replicate
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  r.sem = sd / std::sqrt(static_cast<double>(n));
  return r;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows) {
  // Epoch-end row per (kind, rate, epoch, replicate): the one with the
  // largest presentation index.
  using CellKey = std::tuple<int, double, int, int>;  // kind, rate, epoch, replicate
  std::map<CellKey, const MetricsRow*> last;
  for (const auto& row : rows) {
    CellKey key{static_cast<int>(row.learner), row.shift_rate, row.epoch, row.replicate};
    auto it = last.find(key);
    if (it == last.end() || row.presentation > it->second->presentation) last[key] = &row;
  }

  using GroupKey = std::tuple<int, double, int>;
  std::map<GroupKey, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& [key, row] : last) {
    GroupKey g{std::get<0>(key), std::get<1>(key), std::get<2>(key)};
    groups[g].first.push_back(row->val_accuracy);
    groups[g].second.push_back(row->lr);
  }

  std::vector<AggregateRow> out;
  for (const auto& [g, vals] : groups) {
    AggregateRow a;
    a.learner = static_cast<ControllerKind>(std::get<0>(g));
    a.shift_rate = std::get<1>(g);
    a.epoch = std::get<2>(g);
    const MeanSem acc = mean_sem(vals.first);
    const MeanSem lr = mean_sem(vals.second);
    a.acc_mean = acc.mean;
    a.acc_sem = acc.sem;
    a.lr_mean = lr.mean;
    a.lr_sem = lr.sem;
    a.n_replicates = static_cast<int>(vals.first.size());
    out.push_back(a);
  }
  // Deterministic order: kind, rate, epoch.
  std::sort(out.begin(), out.end(), [](const AggregateRow& x, const AggregateRow& y) {
    return std::tie(x.learner, x.shift_rate, x.epoch) <
           std::tie(y.learner, y.shift_rate, y.epoch);
  });
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "replicate,learner,shift_rate,epoch,presentation,val_accuracy,val_loss,lr,"
       "ingest_rate,train_accuracy\n";
  std::vector<const MetricsRow*> sorted;
  sorted.reserve(rows.size());
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const MetricsRow* a, const MetricsRow* b) {
    return std::tie(a->learner, a->shift_rate, a->replicate, a->presentation) <
           std::tie(b->learner, b->shift_rate, b->replicate, b->presentation);
  });
  for (const auto* r : sorted) {
    f << r->replicate << ',' << to_string(r->learner) << ',' << format_double(r->shift_rate)
      << ',' << r->epoch << ',' << r->presentation << ',' << format_double(r->val_accuracy)
      << ',' << format_double(r->val_loss) << ',' << format_double(r->lr) << ','
      << format_double(r->ingest_rate) << ',' << format_double(r->train_accuracy) << '\n';
  }
  if (!f) throw IoError("write failed for " + path);
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "learner,shift_rate,epoch,acc_mean,acc_sem,lr_mean,lr_sem,n_replicates\n";
  for (const auto& r : rows) {
    f << to_string(r.learner) << ',' << format_double(r.shift_rate) << ',' << r.epoch << ','
      << format_double(r.acc_mean) << ',' << format_double(r.acc_sem) << ','
      << format_double(r.lr_mean) << ',' << format_double(r.lr_sem) << ',' << r.n_replicates
      << '\n';
  }
  if (!f) throw IoError("write failed for " + path);
}

}  // namespace homeostat
