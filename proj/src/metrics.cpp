#include "decorl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "decorl/errors.hpp"

namespace decorl {

namespace {

void check_curve(const Curve& curve, const char* who) {
  if (curve.steps.size() != curve.values.size()) {
    throw DimensionError(std::string(who) + ": steps/values length mismatch");
  }
  if (curve.steps.empty()) throw UsageError(std::string(who) + ": empty curve");
  for (std::size_t i = 1; i < curve.steps.size(); ++i) {
    if (curve.steps[i] <= curve.steps[i - 1]) {
      throw UsageError(std::string(who) + ": steps must strictly increase");
    }
  }
}

// Last value at or before `step` under the piecewise-constant reading.
double value_at(const Curve& curve, double step) {
  auto it = std::upper_bound(curve.steps.begin(), curve.steps.end(), step);
  if (it == curve.steps.begin()) return curve.values.front();
  return curve.values[static_cast<std::size_t>(it - curve.steps.begin()) - 1];
}

double interpolate_at(const Curve& curve, double step) {
  auto it = std::lower_bound(curve.steps.begin(), curve.steps.end(), step);
  if (it == curve.steps.end()) return curve.values.back();
  const std::size_t hi = static_cast<std::size_t>(it - curve.steps.begin());
  if (curve.steps[hi] == step || hi == 0) return curve.values[hi];
  const std::size_t lo = hi - 1;
  const double t = (step - curve.steps[lo]) / (curve.steps[hi] - curve.steps[lo]);
  return curve.values[lo] + t * (curve.values[hi] - curve.values[lo]);
}

double trapezoid_auc(const Curve& curve) {
  double auc = 0.0;
  for (std::size_t i = 1; i < curve.steps.size(); ++i) {
    auc += 0.5 * (curve.values[i] + curve.values[i - 1]) *
           (curve.steps[i] - curve.steps[i - 1]);
  }
  return auc;
}

}  // namespace

Curve episode_curve(const std::vector<EpisodeRow>& rows) {
  Curve c;
  c.steps.reserve(rows.size());
  c.values.reserve(rows.size());
  for (const auto& r : rows) {
    c.steps.push_back(static_cast<double>(r.step));
    c.values.push_back(r.episode_return);
  }
  return c;
}

Curve correlation_curve(const std::vector<LossRow>& rows) {
  Curve c;
  c.steps.reserve(rows.size());
  c.values.reserve(rows.size());
  for (const auto& r : rows) {
    c.steps.push_back(static_cast<double>(r.step));
    c.values.push_back(r.correlation_loss);
  }
  return c;
}

Curve td_curve(const std::vector<LossRow>& rows) {
  Curve c;
  c.steps.reserve(rows.size());
  c.values.reserve(rows.size());
  for (const auto& r : rows) {
    c.steps.push_back(static_cast<double>(r.step));
    c.values.push_back(r.td_loss);
  }
  return c;
}

Curve resample_curve(const Curve& curve, std::size_t points, double lo, double hi) {
  check_curve(curve, "resample_curve");
  if (points < 2) throw UsageError("resample_curve: need at least 2 grid points");
  if (hi <= lo) throw UsageError("resample_curve: need hi > lo");
  Curve out;
  out.steps.resize(points);
  out.values.resize(points);
  for (std::size_t j = 0; j < points; ++j) {
    const double step =
        lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(points - 1);
    out.steps[j] = step;
    out.values[j] = value_at(curve, step);
  }
  return out;
}

Curve median_curve(const std::vector<Curve>& seeds, std::size_t points, double lo,
                   double hi) {
  if (seeds.empty()) throw UsageError("median_curve: no seed curves");
  std::vector<Curve> resampled;
  resampled.reserve(seeds.size());
  for (const Curve& c : seeds) resampled.push_back(resample_curve(c, points, lo, hi));
  Curve out;
  out.steps = resampled.front().steps;
  out.values.resize(points);
  std::vector<double> column(seeds.size());
  for (std::size_t j = 0; j < points; ++j) {
    for (std::size_t s = 0; s < seeds.size(); ++s) column[s] = resampled[s].values[j];
    std::sort(column.begin(), column.end());
    const std::size_t mid = column.size() / 2;
    out.values[j] = column.size() % 2 == 1 ? column[mid]
                                           : 0.5 * (column[mid - 1] + column[mid]);
  }
  return out;
}

AucReport normalized_auc(const Curve& a, const Curve& b) {
  check_curve(a, "normalized_auc");
  check_curve(b, "normalized_auc");
  Curve ra = a, rb = b;
  if (a.steps != b.steps) {
    const double lo = std::max(a.steps.front(), b.steps.front());
    const double hi = std::min(a.steps.back(), b.steps.back());
    if (hi <= lo) throw UsageError("normalized_auc: curves do not overlap");
    std::set<double> grid;
    for (double s : a.steps) {
      if (s >= lo && s <= hi) grid.insert(s);
    }
    for (double s : b.steps) {
      if (s >= lo && s <= hi) grid.insert(s);
    }
    ra.steps.assign(grid.begin(), grid.end());
    rb.steps = ra.steps;
    ra.values.clear();
    rb.values.clear();
    for (double s : ra.steps) {
      ra.values.push_back(interpolate_at(a, s));
      rb.values.push_back(interpolate_at(b, s));
    }
  }
  if (ra.steps.size() < 2) throw UsageError("normalized_auc: need at least 2 grid points");

  AucReport report;
  double min_value = ra.values.front();
  for (double v : ra.values) min_value = std::min(min_value, v);
  for (double v : rb.values) min_value = std::min(min_value, v);
  report.offset = std::min(0.0, min_value);
  if (report.offset != 0.0) {
    for (double& v : ra.values) v -= report.offset;
    for (double& v : rb.values) v -= report.offset;
  }
  report.auc_a = trapezoid_auc(ra);
  report.auc_b = trapezoid_auc(rb);
  if (report.auc_b == 0.0) {
    throw Error("normalized_auc: baseline AUC is zero after offset, undefined baseline");
  }
  report.improvement_pct =
      100.0 * (report.auc_a - report.auc_b) / std::fabs(report.auc_b);
  return report;
}

double tail_mean(const std::vector<EpisodeRow>& episodes, double fraction,
                 std::size_t total_steps) {
  if (fraction <= 0.0 || fraction > 1.0) {
    throw UsageError("tail_mean: fraction must lie in (0,1]");
  }
  const double threshold = (1.0 - fraction) * static_cast<double>(total_steps);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& e : episodes) {
    if (static_cast<double>(e.step) > threshold) {
      sum += e.episode_return;
      ++count;
    }
  }
  if (count == 0) throw Error("tail_mean: no episodes end inside the window");
  return sum / static_cast<double>(count);
}

double oracle_normalized_score(double score, double random_score, double optimal_score) {
  const double span = optimal_score - random_score;
  if (span == 0.0) {
    throw UsageError("oracle_normalized_score: optimal equals random baseline");
  }
  return (score - random_score) / span;
}

}  // namespace decorl
