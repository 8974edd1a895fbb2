#pragma once

// Split-conformal scores, quantiles and intervals for linear regression.

#include <cstddef>
#include <span>
#include <vector>

#include "psfcp/types.hpp"

namespace psfcp {

struct ScoreSet {
    ClientId owner = 0;
    std::vector<double> scores;  // all >= 0
};

struct PredictionInterval {
    double lower = 0.0;
    double upper = 0.0;

    double width() const { return upper - lower; }
    bool contains(double y) const { return lower <= y && y <= upper; }
};

/// r_j = |y_j - w^T x_j|, in calibration order.
ScoreSet nonconformity_scores(std::span<const double> model, std::span<const Sample> cal,
                              ClientId owner = 0);

/// 1-based rank ceil((1 - alpha)(N + 1)), clamped to N. alpha in (0, 1).
std::size_t conformal_rank(std::size_t n, double alpha);

/// The conformal_rank-th smallest score.
double conformal_quantile(std::span<const double> scores, double alpha);

/// [w^T x - q, w^T x + q].
PredictionInterval prediction_interval(std::span<const double> model, std::span<const double> x, double q);

/// conformal_quantile over the union of every set's scores.
double pooled_quantile(std::span<const ScoreSet> sets, double alpha);

struct CoverageReport {
    double coverage = 0.0;
    double mean_width = 0.0;
    std::size_t n_points = 0;
};

/// Fraction of pooled test points inside C(x); intervals are constant width 2q.
CoverageReport coverage_and_width(std::span<const double> model, double q,
                                  std::span<const SampleList> test_sets);

}  // namespace psfcp
