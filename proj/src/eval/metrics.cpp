#include "repute/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "repute/cae/autoencoder.hpp"
#include "repute/common/error.hpp"
#include "repute/common/format.hpp"

namespace repute::eval {
namespace {

double ratio(std::size_t num, std::size_t den, const char* name, std::vector<std::string>& flags) {
  if (den == 0) {
    flags.emplace_back(name);
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double f1(double p, double r, const char* name, std::vector<std::string>& flags) {
  if (p + r == 0.0) {
    flags.emplace_back(name);
    return 0.0;
  }
  return 2.0 * p * r / (p + r);
}

constexpr std::string_view kSweepHeader =
    "variant,percentile,cutoff,accuracy,precision_illicit,recall_illicit,f1_reputable,f1_illicit,tp,fp,tn,fn";

std::string fixed(double v) { return fmt::format("{:.3f}", v); }

}  // namespace

MetricsReport compute_metrics(std::span<const int> y_true, std::span<const int> y_pred,
                              std::optional<std::span<const double>> y_prob) {
  if (y_true.size() != y_pred.size()) {
    throw ShapeError("compute_metrics: " + std::to_string(y_true.size()) + " labels vs " +
                     std::to_string(y_pred.size()) + " predictions");
  }
  if (y_prob && y_prob->size() != y_true.size()) throw ShapeError("compute_metrics: probability length mismatch");
  MetricsReport m;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) throw Error("compute_metrics: labels must be 0 or 1");
    if (t == 1) (p == 1 ? m.tp : m.fn)++;
    else (p == 1 ? m.fp : m.tn)++;
  }
  auto& z = m.zero_division;
  m.accuracy = ratio(m.tp + m.tn, m.total(), "accuracy", z);
  m.precision_illicit = ratio(m.tp, m.tp + m.fp, "precision_illicit", z);
  m.recall_illicit = ratio(m.tp, m.tp + m.fn, "recall_illicit", z);
  m.f1_illicit = f1(m.precision_illicit, m.recall_illicit, "f1_illicit", z);
  m.precision_reputable = ratio(m.tn, m.tn + m.fn, "precision_reputable", z);
  m.recall_reputable = ratio(m.tn, m.tn + m.fp, "recall_reputable", z);
  m.f1_reputable = f1(m.precision_reputable, m.recall_reputable, "f1_reputable", z);
  if (y_prob && !y_true.empty()) {
    double sum = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const double q = std::clamp((*y_prob)[i], 1e-15, 1.0 - 1e-15);
      sum += y_true[i] ? std::log(q) : std::log(1.0 - q);
    }
    m.log_loss = -sum / static_cast<double>(y_true.size());
  }
  return m;
}

std::string metrics_csv(const std::vector<NamedMetrics>& rows) {
  std::string out =
      "name,accuracy,precision_illicit,recall_illicit,f1_illicit,precision_reputable,recall_reputable,"
      "f1_reputable,log_loss,tp,fp,tn,fn,zero_division\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    std::string flags;
    for (const auto& f : m.zero_division) flags += (flags.empty() ? "" : ";") + f;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.name, format_double(m.accuracy),
                       format_double(m.precision_illicit), format_double(m.recall_illicit),
                       format_double(m.f1_illicit), format_double(m.precision_reputable),
                       format_double(m.recall_reputable), format_double(m.f1_reputable),
                       m.log_loss ? format_double(*m.log_loss) : std::string{}, m.tp, m.fp, m.tn, m.fn, flags);
  }
  return out;
}

std::string metrics_markdown(const std::vector<NamedMetrics>& rows) {
  std::string out =
      "| Model | Accuracy | Precision (Illicit) | Recall (Illicit) | F1 (Reputable) | F1 (Illicit) | Log loss |\n"
      "|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out += fmt::format("| {} | {} | {} | {} | {} | {} | {} |\n", r.name, fixed(m.accuracy), fixed(m.precision_illicit),
                       fixed(m.recall_illicit), fixed(m.f1_reputable), fixed(m.f1_illicit),
                       m.log_loss ? fixed(*m.log_loss) : "-");
  }
  return out;
}

std::string SweepTable::to_csv() const {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.variant, format_double(r.percentile),
                       format_double(r.cutoff), format_double(m.accuracy), format_double(m.precision_illicit),
                       format_double(m.recall_illicit), format_double(m.f1_reputable), format_double(m.f1_illicit),
                       m.tp, m.fp, m.tn, m.fn);
  }
  return out;
}

std::string SweepTable::to_markdown() const {
  std::string out =
      "| Model | Threshold | Accuracy | Recall (Illicit) | F1 (Reputable) | F1 (Illicit) |\n"
      "|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out += fmt::format("| {} | {}th | {} | {} | {} | {} |\n", r.variant, format_double(r.percentile),
                       fixed(m.accuracy), fixed(m.recall_illicit), fixed(m.f1_reputable), fixed(m.f1_illicit));
  }
  return out;
}

SweepTable SweepTable::from_csv(std::string_view csv) {
  SweepTable t;
  const auto lines = split(csv, '\n');
  if (lines.empty() || lines[0] != kSweepHeader) throw ParseError("sweep CSV: unexpected header", 0);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], ',');
    if (f.size() != 12) throw ParseError("sweep CSV: line " + std::to_string(i + 1) + " has wrong field count", i);
    SweepRow r;
    r.variant = f[0];
    r.percentile = parse_double(f[1]);
    r.cutoff = parse_double(f[2]);
    auto& m = r.metrics;
    m.accuracy = parse_double(f[3]);
    m.precision_illicit = parse_double(f[4]);
    m.recall_illicit = parse_double(f[5]);
    m.f1_reputable = parse_double(f[6]);
    m.f1_illicit = parse_double(f[7]);
    m.tp = std::stoul(f[8]);
    m.fp = std::stoul(f[9]);
    m.tn = std::stoul(f[10]);
    m.fn = std::stoul(f[11]);
    t.rows.push_back(std::move(r));
  }
  return t;
}

SweepTable threshold_sweep(const std::vector<VariantScores>& variants, const std::vector<double>& percentiles) {
  SweepTable table;
  for (const auto& v : variants) {
    for (double p : percentiles) {
      const auto threshold = cae::fit_threshold(v.training_errors, p, v.variant);
      std::vector<int> truth, pred;
      for (const auto& c : v.contracts) {
        const auto report = cae::classify_contract(c.address, c.errors, threshold);
        truth.push_back(c.label);
        pred.push_back(report.verdict == ingest::Label::Illicit ? 1 : 0);
      }
      table.rows.push_back(SweepRow{v.variant, p, threshold.cutoff, compute_metrics(truth, pred)});
    }
  }
  return table;
}

}  // namespace repute::eval
