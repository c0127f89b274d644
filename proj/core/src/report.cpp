#include "alseg/report.hpp"

#include "alseg/version.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace alseg {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fixed(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

int class_count(std::span<const VariantRun> runs) {
  for (const VariantRun& vr : runs)
    for (const BudgetResult& br : vr.run.budgets) return static_cast<int>(br.holdout.per_class.size());
  return 0;
}

// One mIoU per run cell, always rebuilt from the per-class values so stored
// and regenerated reports go through the same averaging routine.
double cell_miou(const BudgetResult& br) { return mean_of_present(br.holdout.per_class); }

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

const char* color(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof *kPalette)]; }

void svg_open(std::ostream& out, int w, int h) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
      << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
}

void svg_text(std::ostream& out, double x, double y, const std::string& s,
              const char* anchor = "middle", int size = 12) {
  out << "<text x=\"" << fixed(x, 1) << "\" y=\"" << fixed(y, 1) << "\" font-size=\"" << size
      << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s << "</text>\n";
}

void svg_line(std::ostream& out, double x1, double y1, double x2, double y2, const char* stroke,
              double width = 1.0) {
  out << "<line x1=\"" << fixed(x1, 1) << "\" y1=\"" << fixed(y1, 1) << "\" x2=\"" << fixed(x2, 1)
      << "\" y2=\"" << fixed(y2, 1) << "\" stroke=\"" << stroke << "\" stroke-width=\""
      << fixed(width, 1) << "\"/>\n";
}

// Distinct variant labels in first-seen order.
std::vector<std::string> row_labels(std::span<const SummaryRow> rows) {
  std::vector<std::string> labels;
  for (const SummaryRow& r : rows)
    if (std::find(labels.begin(), labels.end(), r.method) == labels.end())
      labels.push_back(r.method);
  return labels;
}

void svg_legend(std::ostream& out, const std::vector<std::string>& labels, int x, int y) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double ly = y + 16.0 * i;
    out << "<rect x=\"" << x << "\" y=\"" << fixed(ly - 9, 1)
        << "\" width=\"12\" height=\"12\" fill=\"" << color(i) << "\"/>\n";
    svg_text(out, x + 18, ly + 1, labels[i], "start", 11);
  }
}

json region_json(const RegionId& r) { return json::array({r.image_index, r.row, r.col}); }

RegionId region_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number_integer() || !j[1].is_number_integer() ||
      !j[2].is_number_integer())
    throw std::runtime_error("manifest: " + what + " must be [image,row,col]");
  return RegionId{j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

const json& need(const json& j, const char* key, const std::string& what) {
  auto it = j.find(key);
  if (it == j.end()) throw std::runtime_error("manifest: " + what + " is missing \"" + key + "\"");
  return *it;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size()));
  return out;
}

std::vector<SummaryRow> summarize(std::span<const VariantRun> runs) {
  std::vector<SummaryRow> rows;
  std::vector<std::string> labels;
  for (const VariantRun& vr : runs)
    if (std::find(labels.begin(), labels.end(), vr.label) == labels.end())
      labels.push_back(vr.label);

  for (const std::string& label : labels) {
    std::vector<const AcquisitionRun*> group;
    for (const VariantRun& vr : runs)
      if (vr.label == label) group.push_back(&vr.run);
    if (group.empty() || group.front()->budgets.empty()) continue;
    for (std::size_t bi = 0; bi < group.front()->budgets.size(); ++bi) {
      int budget = group.front()->budgets[bi].budget;
      SummaryRow row;
      row.method = label;
      row.budget = budget;
      std::vector<double> mious;
      std::vector<double> entropies;
      std::size_t classes = group.front()->budgets[bi].holdout.per_class.size();
      std::vector<double> class_sum(classes, 0.0);
      std::vector<int> class_n(classes, 0);
      std::vector<double> freq_sum;
      for (const AcquisitionRun* run : group) {
        if (bi >= run->budgets.size() || run->budgets[bi].budget != budget)
          throw std::invalid_argument("summarize: runs of one variant disagree on budgets");
        const BudgetResult& br = run->budgets[bi];
        mious.push_back(cell_miou(br));
        entropies.push_back(br.label_entropy);
        for (std::size_t c = 0; c < classes && c < br.holdout.per_class.size(); ++c)
          if (br.holdout.per_class[c]) {
            class_sum[c] += *br.holdout.per_class[c];
            ++class_n[c];
          }
        if (freq_sum.empty()) freq_sum.assign(br.class_frequencies.size(), 0.0);
        for (std::size_t c = 0; c < freq_sum.size() && c < br.class_frequencies.size(); ++c)
          freq_sum[c] += br.class_frequencies[c];
      }
      row.runs = static_cast<int>(group.size());
      row.miou = mean_std(mious);
      row.entropy = mean_std(entropies);
      row.per_class.resize(classes);
      for (std::size_t c = 0; c < classes; ++c)
        if (class_n[c] > 0) row.per_class[c] = class_sum[c] / class_n[c];
      row.frequencies.resize(freq_sum.size());
      for (std::size_t c = 0; c < freq_sum.size(); ++c)
        row.frequencies[c] = freq_sum[c] / static_cast<double>(group.size());
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_curves_csv(std::ostream& out, std::span<const VariantRun> runs) {
  int classes = class_count(runs);
  out << "method,seed,budget,miou";
  for (int c = 0; c < classes; ++c) out << ",iou_" << c;
  out << "\n";
  for (const VariantRun& vr : runs)
    for (const BudgetResult& br : vr.run.budgets) {
      out << vr.label << "," << vr.run.seed << "," << br.budget << "," << num(cell_miou(br));
      for (int c = 0; c < classes; ++c) {
        out << ",";
        if (c < static_cast<int>(br.holdout.per_class.size()) && br.holdout.per_class[c])
          out << num(*br.holdout.per_class[c]);
      }
      out << "\n";
    }
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  std::size_t classes = rows.empty() ? 0 : rows.front().per_class.size();
  out << "method,budget,runs,miou_mean,miou_std,entropy_mean,entropy_std";
  for (std::size_t c = 0; c < classes; ++c) out << ",iou_" << c;
  out << "\n";
  for (const SummaryRow& r : rows) {
    out << r.method << "," << r.budget << "," << r.runs << "," << num(r.miou.mean) << ","
        << num(r.miou.std) << "," << num(r.entropy.mean) << "," << num(r.entropy.std);
    for (std::size_t c = 0; c < classes; ++c) {
      out << ",";
      if (c < r.per_class.size() && r.per_class[c]) out << num(*r.per_class[c]);
    }
    out << "\n";
  }
}

void write_entropy_csv(std::ostream& out, std::span<const VariantRun> runs) {
  out << "method,seed,budget,entropy\n";
  for (const VariantRun& vr : runs)
    for (const BudgetResult& br : vr.run.budgets)
      out << vr.label << "," << vr.run.seed << "," << br.budget << "," << num(br.label_entropy)
          << "\n";
}

void write_frequencies_csv(std::ostream& out, std::span<const VariantRun> runs) {
  std::size_t classes = 0;
  for (const VariantRun& vr : runs)
    for (const BudgetResult& br : vr.run.budgets)
      classes = std::max(classes, br.class_frequencies.size());
  out << "method,seed,budget";
  for (std::size_t c = 0; c < classes; ++c) out << ",freq_" << c;
  out << "\n";
  for (const VariantRun& vr : runs)
    for (const BudgetResult& br : vr.run.budgets) {
      out << vr.label << "," << vr.run.seed << "," << br.budget;
      for (std::size_t c = 0; c < classes; ++c) {
        out << ",";
        if (c < br.class_frequencies.size()) out << num(br.class_frequencies[c]);
      }
      out << "\n";
    }
}

void write_curves_svg(std::ostream& out, std::span<const SummaryRow> rows) {
  const int W = 640, H = 420, L = 64, R = 620, T = 24, B = 376;
  svg_open(out, W, H);
  if (rows.empty()) {
    svg_text(out, W / 2.0, H / 2.0, "no data");
    out << "</svg>\n";
    return;
  }
  int bmin = rows.front().budget, bmax = rows.front().budget;
  double ymin = rows.front().miou.mean, ymax = ymin;
  for (const SummaryRow& r : rows) {
    bmin = std::min(bmin, r.budget);
    bmax = std::max(bmax, r.budget);
    ymin = std::min(ymin, r.miou.mean - r.miou.std);
    ymax = std::max(ymax, r.miou.mean + r.miou.std);
  }
  double pad = std::max(0.01, (ymax - ymin) * 0.1);
  ymin -= pad;
  ymax += pad;
  auto sx = [&](double b) {
    return bmax == bmin ? (L + R) / 2.0 : L + (b - bmin) / (bmax - bmin) * (R - L);
  };
  auto sy = [&](double v) { return B - (v - ymin) / (ymax - ymin) * (B - T); };

  svg_line(out, L, T, L, B, "#333");
  svg_line(out, L, B, R, B, "#333");
  for (int i = 0; i <= 4; ++i) {
    double v = ymin + (ymax - ymin) * i / 4.0;
    svg_line(out, L, sy(v), R, sy(v), "#ddd");
    svg_text(out, L - 6, sy(v) + 4, fixed(v, 3), "end", 10);
  }
  std::vector<int> budgets;
  for (const SummaryRow& r : rows)
    if (std::find(budgets.begin(), budgets.end(), r.budget) == budgets.end())
      budgets.push_back(r.budget);
  std::sort(budgets.begin(), budgets.end());
  for (int b : budgets) {
    svg_line(out, sx(b), B, sx(b), B + 4, "#333");
    svg_text(out, sx(b), B + 16, std::to_string(b), "middle", 10);
  }
  svg_text(out, (L + R) / 2.0, H - 6, "budget (regions)");
  out << "<text x=\"14\" y=\"" << (T + B) / 2 << "\" font-size=\"12\" font-family=\"sans-serif\""
      << " text-anchor=\"middle\" transform=\"rotate(-90 14 " << (T + B) / 2 << ")\">mIoU</text>\n";

  std::vector<std::string> labels = row_labels(rows);
  for (std::size_t li = 0; li < labels.size(); ++li) {
    std::string pts;
    for (const SummaryRow& r : rows) {
      if (r.method != labels[li]) continue;
      double x = sx(r.budget), y = sy(r.miou.mean);
      pts += fixed(x, 1) + "," + fixed(y, 1) + " ";
      svg_line(out, x, sy(r.miou.mean - r.miou.std), x, sy(r.miou.mean + r.miou.std), color(li));
      out << "<circle cx=\"" << fixed(x, 1) << "\" cy=\"" << fixed(y, 1) << "\" r=\"3\" fill=\""
          << color(li) << "\"/>\n";
    }
    out << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color(li)
        << "\" stroke-width=\"1.5\"/>\n";
  }
  svg_legend(out, labels, L + 10, T + 14);
  out << "</svg>\n";
}

// Bars at the largest budget, one per variant.
void write_entropy_svg(std::ostream& out, std::span<const SummaryRow> rows) {
  const int W = 640, H = 420, L = 64, R = 620, T = 24, B = 376;
  svg_open(out, W, H);
  int bmax = 0;
  for (const SummaryRow& r : rows) bmax = std::max(bmax, r.budget);
  std::vector<const SummaryRow*> bars;
  for (const SummaryRow& r : rows)
    if (r.budget == bmax) bars.push_back(&r);
  if (bars.empty()) {
    svg_text(out, W / 2.0, H / 2.0, "no data");
    out << "</svg>\n";
    return;
  }
  double ymax = 0.0;
  for (const SummaryRow* r : bars) ymax = std::max(ymax, r->entropy.mean + r->entropy.std);
  if (ymax <= 0.0) ymax = 1.0;
  ymax *= 1.1;
  auto sy = [&](double v) { return B - v / ymax * (B - T); };
  svg_line(out, L, T, L, B, "#333");
  svg_line(out, L, B, R, B, "#333");
  for (int i = 0; i <= 4; ++i) {
    double v = ymax * i / 4.0;
    svg_line(out, L, sy(v), R, sy(v), "#ddd");
    svg_text(out, L - 6, sy(v) + 4, fixed(v, 2), "end", 10);
  }
  double slot = double(R - L) / bars.size();
  for (std::size_t i = 0; i < bars.size(); ++i) {
    double x0 = L + slot * i + slot * 0.2, w = slot * 0.6;
    double y = sy(bars[i]->entropy.mean);
    out << "<rect x=\"" << fixed(x0, 1) << "\" y=\"" << fixed(y, 1) << "\" width=\"" << fixed(w, 1)
        << "\" height=\"" << fixed(B - y, 1) << "\" fill=\"" << color(i) << "\"/>\n";
    double xm = x0 + w / 2;
    svg_line(out, xm, sy(bars[i]->entropy.mean - bars[i]->entropy.std), xm,
             sy(bars[i]->entropy.mean + bars[i]->entropy.std), "#333");
    svg_text(out, xm, y - 6, fixed(bars[i]->entropy.mean, 3), "middle", 10);
    svg_text(out, xm, B + 16, bars[i]->method, "middle", 10);
  }
  svg_text(out, (L + R) / 2.0, H - 6,
           "label entropy at budget " + std::to_string(bmax) + " (nats)");
  out << "</svg>\n";
}

// Grouped bars: class on the x axis, one bar per variant, at the largest
// budget.
void write_frequencies_svg(std::ostream& out, std::span<const SummaryRow> rows) {
  const int W = 640, H = 420, L = 64, R = 620, T = 24, B = 356;
  svg_open(out, W, H);
  int bmax = 0;
  for (const SummaryRow& r : rows) bmax = std::max(bmax, r.budget);
  std::vector<const SummaryRow*> bars;
  for (const SummaryRow& r : rows)
    if (r.budget == bmax && !r.frequencies.empty()) bars.push_back(&r);
  if (bars.empty()) {
    svg_text(out, W / 2.0, H / 2.0, "no data");
    out << "</svg>\n";
    return;
  }
  std::size_t classes = bars.front()->frequencies.size();
  double ymax = 0.0;
  for (const SummaryRow* r : bars)
    for (double f : r->frequencies) ymax = std::max(ymax, f);
  if (ymax <= 0.0) ymax = 1.0;
  ymax *= 1.1;
  auto sy = [&](double v) { return B - v / ymax * (B - T); };
  svg_line(out, L, T, L, B, "#333");
  svg_line(out, L, B, R, B, "#333");
  for (int i = 0; i <= 4; ++i) {
    double v = ymax * i / 4.0;
    svg_line(out, L, sy(v), R, sy(v), "#ddd");
    svg_text(out, L - 6, sy(v) + 4, fixed(v, 3), "end", 10);
  }
  double group = double(R - L) / classes;
  double bar = group * 0.8 / bars.size();
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < bars.size(); ++i) {
      double f = c < bars[i]->frequencies.size() ? bars[i]->frequencies[c] : 0.0;
      double x0 = L + group * c + group * 0.1 + bar * i;
      double y = sy(f);
      out << "<rect x=\"" << fixed(x0, 1) << "\" y=\"" << fixed(y, 1) << "\" width=\""
          << fixed(bar, 1) << "\" height=\"" << fixed(B - y, 1) << "\" fill=\"" << color(i)
          << "\"/>\n";
    }
    svg_text(out, L + group * c + group / 2, B + 16, std::to_string(c), "middle", 10);
  }
  std::vector<std::string> labels;
  for (const SummaryRow* r : bars) labels.push_back(r->method);
  svg_legend(out, labels, R - 130, T + 14);
  svg_text(out, (L + R) / 2.0, H - 6,
           "labeled-pixel class frequency at budget " + std::to_string(bmax));
  out << "</svg>\n";
}

nlohmann::json experiment_manifest(const RunConfig& config, const ExperimentResult& result) {
  json runs = json::array();
  for (const VariantRun& vr : result.runs) {
    json budgets = json::array();
    for (const BudgetResult& br : vr.run.budgets) {
      json per_class = json::array();
      for (const std::optional<double>& v : br.holdout.per_class)
        per_class.push_back(v ? json(*v) : json());
      json labeled = json::array();
      for (const RegionId& r : br.labeled) labeled.push_back(region_json(r));
      budgets.push_back(json{{"budget", br.budget},
                             {"per_class_iou", per_class},
                             {"label_entropy", br.label_entropy},
                             {"class_frequencies", br.class_frequencies},
                             {"epochs", br.epochs},
                             {"labeled", labeled}});
    }
    runs.push_back(json{{"label", vr.label},
                        {"method", method_name(vr.run.method)},
                        {"seed", vr.run.seed},
                        {"budgets", budgets}});
  }
  return json{{"config", to_json(config)},
              {"version", std::string(kVersion)},
              {"result", json{{"runs", runs}}}};
}

ParsedManifest parse_manifest(const nlohmann::json& j) {
  if (!j.is_object()) throw std::runtime_error("manifest: root must be an object");
  ParsedManifest out;
  out.config = run_config_from_json(need(j, "config", "root"));
  const json& version = need(j, "version", "root");
  if (!version.is_string()) throw std::runtime_error("manifest: version must be a string");
  out.version = version.get<std::string>();
  const json& runs = need(need(j, "result", "root"), "runs", "result");
  if (!runs.is_array()) throw std::runtime_error("manifest: result.runs must be an array");
  for (const json& jr : runs) {
    VariantRun vr;
    const json& label = need(jr, "label", "run");
    if (!label.is_string()) throw std::runtime_error("manifest: run label must be a string");
    vr.label = label.get<std::string>();
    vr.run.method = parse_method(need(jr, "method", "run").get<std::string>());
    vr.run.seed = need(jr, "seed", "run").get<std::uint64_t>();
    const json& budgets = need(jr, "budgets", "run");
    if (!budgets.is_array()) throw std::runtime_error("manifest: run budgets must be an array");
    for (const json& jb : budgets) {
      BudgetResult br;
      br.budget = need(jb, "budget", "budget entry").get<int>();
      for (const json& v : need(jb, "per_class_iou", "budget entry")) {
        if (v.is_null())
          br.holdout.per_class.emplace_back(std::nullopt);
        else if (v.is_number())
          br.holdout.per_class.emplace_back(v.get<double>());
        else
          throw std::runtime_error("manifest: per_class_iou entries must be numbers or null");
      }
      br.holdout.mean = mean_of_present(br.holdout.per_class);
      br.miou = br.holdout.mean;
      br.label_entropy = need(jb, "label_entropy", "budget entry").get<double>();
      br.class_frequencies =
          need(jb, "class_frequencies", "budget entry").get<std::vector<double>>();
      br.epochs = need(jb, "epochs", "budget entry").get<int>();
      for (const json& r : need(jb, "labeled", "budget entry"))
        br.labeled.push_back(region_from_json(r, "labeled region"));
      vr.run.budgets.push_back(std::move(br));
    }
    out.result.runs.push_back(std::move(vr));
  }
  return out;
}

namespace {

void render_derived(const std::filesystem::path& dir, const ExperimentResult& result) {
  std::vector<SummaryRow> rows = summarize(result.runs);
  { auto f = open_out(dir / "curves.csv"); write_curves_csv(f, result.runs); }
  { auto f = open_out(dir / "summary.csv"); write_summary_csv(f, rows); }
  { auto f = open_out(dir / "entropy.csv"); write_entropy_csv(f, result.runs); }
  { auto f = open_out(dir / "frequencies.csv"); write_frequencies_csv(f, result.runs); }
  { auto f = open_out(dir / "curves.svg"); write_curves_svg(f, rows); }
  { auto f = open_out(dir / "entropy.svg"); write_entropy_svg(f, rows); }
  { auto f = open_out(dir / "frequencies.svg"); write_frequencies_svg(f, rows); }
}

}  // namespace

void write_run_dir(const std::filesystem::path& dir, const RunConfig& config,
                   const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  {
    auto f = open_out(dir / "manifest.json");
    f << experiment_manifest(config, result).dump(2) << '\n';
  }
  render_derived(dir, result);
}

void render_run_dir(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("cannot read " + (dir / "manifest.json").string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("manifest " + (dir / "manifest.json").string() + ": " + e.what());
  }
  ParsedManifest parsed = parse_manifest(j);
  render_derived(dir, parsed.result);
}

nlohmann::json training_manifest(const RunConfig& config, const TrainPolicyResult& result) {
  json episodes = json::array();
  for (const EpisodeLog& ep : result.episodes) {
    json steps = json::array();
    for (const StepLog& s : ep.steps) {
      json selected = json::array();
      for (const RegionId& r : s.selected) selected.push_back(region_json(r));
      steps.push_back(json{{"step", s.step},
                           {"epsilon", s.epsilon},
                           {"reward", s.reward},
                           {"loss", s.loss ? json(*s.loss) : json()},
                           {"selected", selected}});
    }
    episodes.push_back(json{{"steps", steps},
                            {"cumulative_reward", ep.cumulative_reward},
                            {"miou_start", ep.miou_start},
                            {"miou_end", ep.miou_end}});
  }
  return json{{"config", to_json(config)},
              {"version", std::string(kVersion)},
              {"training",
               json{{"episodes", episodes},
                    {"best_episode", result.best_episode},
                    {"steps", result.steps}}}};
}

void write_episodes_csv(std::ostream& out, std::span<const EpisodeLog> episodes) {
  out << "episode,steps,cumulative_reward,miou_start,miou_end\n";
  for (std::size_t e = 0; e < episodes.size(); ++e)
    out << e << "," << episodes[e].steps.size() << "," << num(episodes[e].cumulative_reward) << ","
        << num(episodes[e].miou_start) << "," << num(episodes[e].miou_end) << "\n";
}

void write_training_run_dir(const std::filesystem::path& dir, const RunConfig& config,
                            const TrainPolicyResult& result) {
  std::filesystem::create_directories(dir);
  {
    auto f = open_out(dir / "manifest.json");
    f << training_manifest(config, result).dump(2) << '\n';
  }
  {
    auto f = open_out(dir / "episodes.csv");
    write_episodes_csv(f, result.episodes);
  }
  result.agent.save_checkpoint(dir / "policy.ckpt");
}

}  // namespace alseg
