#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "repute/augment/augmentation.hpp"
#include "repute/common/format.hpp"

namespace repute::augment {
namespace {

void column_stats(const Matrix& m, std::vector<double>& mean, std::vector<double>& var) {
  const std::size_t n = m.rows();
  mean.assign(m.cols(), 0.0);
  var.assign(m.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) mean[j] += m(i, j);
  }
  for (auto& v : mean) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) var[j] += (m(i, j) - mean[j]) * (m(i, j) - mean[j]);
  }
  for (auto& v : var) v /= static_cast<double>(n);
}

}  // namespace

QualityReport quality_metrics(const Matrix& real, const Matrix& synthetic) {
  if (real.rows() == 0 || synthetic.rows() == 0) throw Error("quality_metrics: empty input");
  if (real.cols() != synthetic.cols()) throw ShapeError("quality_metrics: dimension mismatch");
  std::vector<double> mr, vr, ms, vs;
  column_stats(real, mr, vr);
  column_stats(synthetic, ms, vs);

  const double d = static_cast<double>(mr.size());
  double ar = 0.0, as = 0.0;
  for (std::size_t j = 0; j < mr.size(); ++j) {
    ar += mr[j];
    as += ms[j];
  }
  ar /= d;
  as /= d;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t j = 0; j < mr.size(); ++j) {
    sxy += (mr[j] - ar) * (ms[j] - as);
    sxx += (mr[j] - ar) * (mr[j] - ar);
    syy += (ms[j] - as) * (ms[j] - as);
  }
  QualityReport q;
  if (sxx == 0.0 || syy == 0.0) {
    q.correlation_coefficient = (mr == ms) ? 1.0 : 0.0;
  } else {
    q.correlation_coefficient = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  }

  double ratio_sum = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < vr.size(); ++j) {
    if (vr[j] == 0.0) continue;
    ratio_sum += vs[j] / vr[j];
    ++used;
  }
  q.variance_ratio = used ? ratio_sum / static_cast<double>(used) : 0.0;
  return q;
}

nlohmann::ordered_json QualityReport::to_json() const {
  nlohmann::ordered_json j;
  j["correlation_coefficient"] = correlation_coefficient;
  j["variance_ratio"] = variance_ratio;
  j["definitions"] = {
      {"correlation_coefficient", "Pearson correlation between per-dimension mean vectors of real and synthetic"},
      {"variance_ratio", "mean over dimensions of var(synthetic)/var(real), zero-variance real dimensions skipped"}};
  return j;
}

std::string provenance_csv(const Matrix& real, const Matrix& synthetic, Method method) {
  std::ostringstream out;
  const std::size_t dim = real.rows() ? real.cols() : synthetic.cols();
  out << "provenance";
  for (std::size_t d = 0; d < dim; ++d) out << ",e" << d;
  out << '\n';
  auto emit = [&](const Matrix& m, std::string_view tag) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      out << tag;
      for (double v : m.row(i)) out << ',' << format_double(v);
      out << '\n';
    }
  };
  emit(real, "real");
  emit(synthetic, method_name(method));
  return out.str();
}

}  // namespace repute::augment
