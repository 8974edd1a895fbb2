#include "psfcp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psfcp {

ScoreSet nonconformity_scores(std::span<const double> model, std::span<const Sample> cal, ClientId owner) {
    ScoreSet out{owner, {}};
    out.scores.reserve(cal.size());
    for (const Sample& s : cal) out.scores.push_back(std::abs(s.y - dot(model, s.x)));
    return out;
}

std::size_t conformal_rank(std::size_t n, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("conformal quantile: alpha must lie in (0, 1)");
    if (n == 0) throw std::invalid_argument("conformal quantile: no scores");
    // Guard against (1 - alpha)(N + 1) landing a hair above an integer.
    const double target = (1.0 - alpha) * static_cast<double>(n + 1);
    auto rank = static_cast<std::size_t>(std::ceil(target - 1e-9));
    return std::clamp<std::size_t>(rank, 1, n);
}

double conformal_quantile(std::span<const double> scores, double alpha) {
    const std::size_t rank = conformal_rank(scores.size(), alpha);
    std::vector<double> work(scores.begin(), scores.end());
    auto nth = work.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(work.begin(), nth, work.end());
    return *nth;
}

PredictionInterval prediction_interval(std::span<const double> model, std::span<const double> x, double q) {
    if (!(q >= 0.0)) throw std::invalid_argument("prediction_interval: q must be non-negative");
    const double center = dot(model, x);
    return PredictionInterval{center - q, center + q};
}

double pooled_quantile(std::span<const ScoreSet> sets, double alpha) {
    std::vector<double> pooled;
    for (const ScoreSet& s : sets) pooled.insert(pooled.end(), s.scores.begin(), s.scores.end());
    if (pooled.empty()) throw std::invalid_argument("pooled_quantile: all score sets are empty");
    return conformal_quantile(pooled, alpha);
}

CoverageReport coverage_and_width(std::span<const double> model, double q,
                                  std::span<const SampleList> test_sets) {
    if (!(q >= 0.0)) throw std::invalid_argument("coverage_and_width: q must be non-negative");
    std::size_t covered = 0;
    std::size_t total = 0;
    for (const SampleList& set : test_sets) {
        for (const Sample& s : set) {
            if (prediction_interval(model, s.x, q).contains(s.y)) ++covered;
            ++total;
        }
    }
    if (total == 0) throw std::invalid_argument("coverage_and_width: no test data");
    return CoverageReport{static_cast<double>(covered) / static_cast<double>(total), 2.0 * q, total};
}

}  // namespace psfcp
