#include "homeostat/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "homeostat/dataset.hpp"

namespace homeostat {

namespace {

const char* color_for(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Homeostatic: return "#1f77b4";  // blue
    case ControllerKind::RandomWalk: return "#2ca02c";   // green
    case ControllerKind::Constant: return "#d62728";     // red
  }
  return "#000000";
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::string render_plot(const std::vector<AggregateRow>& aggregates, const PlotSpec& spec) {
  std::vector<const AggregateRow*> rows;
  for (const auto& r : aggregates) {
    if (!spec.rates.empty() &&
        std::find(spec.rates.begin(), spec.rates.end(), r.shift_rate) == spec.rates.end())
      continue;
    rows.push_back(&r);
  }
  if (rows.empty()) throw ConfigurationError("plot: no aggregate rows selected");

  auto value = [&](const AggregateRow& r) {
    return spec.metric == PlotSpec::Metric::Accuracy ? r.acc_mean : r.lr_mean;
  };
  auto sem = [&](const AggregateRow& r) {
    return spec.metric == PlotSpec::Metric::Accuracy ? r.acc_sem : r.lr_sem;
  };

  // series keyed by (learner, rate), points ordered by epoch
  std::map<std::pair<int, double>, std::vector<const AggregateRow*>> series;
  int max_epoch = 0;
  double lo = 1e300, hi = -1e300;
  for (const auto* r : rows) {
    series[{static_cast<int>(r->learner), r->shift_rate}].push_back(r);
    max_epoch = std::max(max_epoch, r->epoch);
    lo = std::min(lo, value(*r) - sem(*r));
    hi = std::max(hi, value(*r) + sem(*r));
  }
  for (auto& [key, pts] : series)
    std::sort(pts.begin(), pts.end(),
              [](const AggregateRow* a, const AggregateRow* b) { return a->epoch < b->epoch; });

  if (spec.log_y) lo = std::max(lo, 1e-8);
  if (hi <= lo) hi = lo + 1.0;
  auto ty = [&](double v) {
    double f;
    if (spec.log_y) {
      v = std::max(v, 1e-8);
      f = (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    } else {
      f = (v - lo) / (hi - lo);
    }
    return 40.0 + (spec.height - 90.0) * (1.0 - f);
  };
  auto tx = [&](double epoch) {
    return 60.0 + (spec.width - 90.0) * (max_epoch > 0 ? epoch / max_epoch : 0.0);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
      << spec.height << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    svg << "<text x=\"" << spec.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << spec.title << "</text>\n";

  // axes
  svg << "<line x1=\"60\" y1=\"40\" x2=\"60\" y2=\"" << spec.height - 50
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"60\" y1=\"" << spec.height - 50 << "\" x2=\"" << spec.width - 30
      << "\" y2=\"" << spec.height - 50 << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << spec.width / 2 << "\" y=\"" << spec.height - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">epoch</text>\n";
  const std::string ylab =
      spec.metric == PlotSpec::Metric::Accuracy ? "validation accuracy" : "learning rate";
  svg << "<text x=\"16\" y=\"" << spec.height / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\""
      << "rotate(-90 16 " << spec.height / 2 << ")\">" << ylab << "</text>\n";
  // y tick labels at min and max
  svg << "<text x=\"54\" y=\"" << ty(lo) + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << format_double(lo) << "</text>\n";
  svg << "<text x=\"54\" y=\"" << ty(hi) + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << format_double(hi) << "</text>\n";
  svg << "<text x=\"" << tx(0) << "\" y=\"" << spec.height - 34
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">0</text>\n";
  svg << "<text x=\"" << tx(max_epoch) << "\" y=\"" << spec.height - 34
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << max_epoch
      << "</text>\n";

  for (const auto& [key, pts] : series) {
    const auto kind = static_cast<ControllerKind>(key.first);
    const char* color = color_for(kind);
    // SEM band: forward along +sem, back along -sem
    svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (const auto* r : pts) svg << tx(r->epoch) << ',' << ty(value(*r) + sem(*r)) << ' ';
    for (auto it = pts.rbegin(); it != pts.rend(); ++it)
      svg << tx((*it)->epoch) << ',' << ty(value(**it) - sem(**it)) << ' ';
    svg << "\"/>\n";
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (const auto* r : pts) svg << tx(r->epoch) << ',' << ty(value(*r)) << ' ';
    svg << "\"/>\n";
  }

  // legend
  double ly = 50.0;
  for (const auto& [key, pts] : series) {
    std::ostringstream label;
    label << to_string(static_cast<ControllerKind>(key.first)) << " (rate "
          << format_double(key.second) << ")";
    svg << "<rect x=\"" << spec.width - 220 << "\" y=\"" << ly - 9
        << "\" width=\"14\" height=\"4\" fill=\"" << color_for(static_cast<ControllerKind>(key.first))
        << "\"/>\n";
    svg << "<text x=\"" << spec.width - 200 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << label.str() << "</text>\n";
    ly += 18.0;
  }

  svg << "</svg>\n";
  return svg.str();
}

void write_plot(const std::vector<AggregateRow>& aggregates, const PlotSpec& spec,
                const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << render_plot(aggregates, spec);
  if (!f) throw IoError("write failed for " + path);
}

PlotSpec parse_plot_spec(const std::string& text) {
  PlotSpec spec;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("plot spec line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (key == "metric") {
      if (val == "accuracy") spec.metric = PlotSpec::Metric::Accuracy;
      else if (val == "lr") spec.metric = PlotSpec::Metric::LearningRate;
      else throw ConfigError("plot spec: metric must be accuracy|lr");
    } else if (key == "title") spec.title = val;
    else if (key == "rates") {
      std::stringstream ss(val);
      std::string item;
      while (std::getline(ss, item, ',')) spec.rates.push_back(std::stod(trim(item)));
    } else if (key == "log_y") spec.log_y = (val == "true" || val == "1");
    else if (key == "width") spec.width = std::stoi(val);
    else if (key == "height") spec.height = std::stoi(val);
    else throw ConfigError("plot spec: unknown key '" + key + "'");
  }
  return spec;
}

std::vector<AggregateRow> read_aggregate_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string header;
  if (!std::getline(f, header)) throw FormatError(path + ": empty file");
  if (header != "learner,shift_rate,epoch,acc_mean,acc_sem,lr_mean,lr_sem,n_replicates")
    throw FormatError(path + ": unexpected aggregate CSV header");
  std::vector<AggregateRow> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string field;
    AggregateRow r;
    std::getline(ss, field, ',');
    r.learner = controller_from_string(field);
    auto next_d = [&]() {
      std::getline(ss, field, ',');
      return std::stod(field);
    };
    r.shift_rate = next_d();
    r.epoch = static_cast<int>(next_d());
    r.acc_mean = next_d();
    r.acc_sem = next_d();
    r.lr_mean = next_d();
    r.lr_sem = next_d();
    r.n_replicates = static_cast<int>(next_d());
    rows.push_back(r);
  }
  return rows;
}

}  // namespace homeostat
