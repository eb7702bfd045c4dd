#pragma once

#include <cstddef>
#include <vector>

#include "decorl/runlog.hpp"

namespace decorl {

// A learning curve: values sampled at strictly increasing step stamps.
struct Curve {
  std::vector<double> steps;
  std::vector<double> values;
};

Curve episode_curve(const std::vector<EpisodeRow>& rows);
Curve correlation_curve(const std::vector<LossRow>& rows);
Curve td_curve(const std::vector<LossRow>& rows);

// Piecewise-constant resample onto `points` uniform grid steps spanning
// [lo, hi]: each grid point takes the last value at or before it, and the
// first value before the curve starts.
Curve resample_curve(const Curve& curve, std::size_t points, double lo, double hi);

// Per-grid-point median across seeds after resampling every curve onto the
// same uniform grid. Even seed counts average the two middle values.
Curve median_curve(const std::vector<Curve>& seeds, std::size_t points, double lo,
                   double hi);

struct AucReport {
  double improvement_pct = 0.0;  // 100 (AUC_a - AUC_b) / |AUC_b|
  double offset = 0.0;           // common shift applied before integrating
  double auc_a = 0.0;
  double auc_b = 0.0;
};

// Trapezoidal AUC comparison of curve a against baseline b. Both curves are
// first shifted by -offset with offset = min(0, smallest value of either
// curve), so negative-valued curves get a positive baseline; the offset is
// recorded in the report. Curves on different grids are linearly resampled
// onto the union of their steps over the overlapping range.
AucReport normalized_auc(const Curve& a, const Curve& b);

// Mean unclipped episode return over episodes ending strictly after
// (1 - fraction) * total_steps.
double tail_mean(const std::vector<EpisodeRow>& episodes, double fraction,
                 std::size_t total_steps);

// (score - random) / (optimal - random). The desk-scale substitute for
// human-normalized scores; callers label it as oracle-normalized.
double oracle_normalized_score(double score, double random_score, double optimal_score);

}  // namespace decorl
