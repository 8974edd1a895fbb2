#include "psfcp/robust_calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace psfcp {

namespace {

constexpr double kMadConsistency = 1.4826;

double l2(std::span<const double> a, std::span<const double> b) { return std::sqrt(squared_distance(a, b)); }

void check_shapes(std::span<const CharacterizationVector> vectors) {
    if (vectors.empty()) return;
    const std::size_t h = vectors.front().v.size();
    for (const auto& cv : vectors)
        if (cv.v.size() != h) throw std::invalid_argument("pairwise_distances: mixed histogram sizes");
}

}  // namespace

HistogramSpec HistogramSpec::uniform(std::size_t bins, double r_max) {
    if (bins == 0) throw std::invalid_argument("HistogramSpec: H must be positive");
    std::vector<double> b(bins + 1);
    for (std::size_t h = 0; h <= bins; ++h) b[h] = static_cast<double>(h) / static_cast<double>(bins);
    return HistogramSpec(std::move(b), r_max);
}

HistogramSpec::HistogramSpec(std::vector<double> boundaries, double r_max)
    : boundaries_(std::move(boundaries)), r_max_(r_max) {
    if (boundaries_.size() < 2) throw std::invalid_argument("HistogramSpec: need at least one bin");
    if (boundaries_.front() != 0.0 || boundaries_.back() != 1.0)
        throw std::invalid_argument("HistogramSpec: boundaries must start at 0 and end at 1");
    for (std::size_t i = 1; i < boundaries_.size(); ++i)
        if (!(boundaries_[i] > boundaries_[i - 1]))
            throw std::invalid_argument("HistogramSpec: boundaries must be strictly increasing");
    if (!(r_max_ > 0.0) || !std::isfinite(r_max_))
        throw std::invalid_argument("HistogramSpec: r_max must be positive");
}

double HistogramSpec::max_bin_width() const {
    double w = 0.0;
    for (std::size_t i = 1; i < boundaries_.size(); ++i) w = std::max(w, boundaries_[i] - boundaries_[i - 1]);
    return w * r_max_;
}

std::size_t HistogramSpec::bin_of(double normalized) const {
    const double r = std::clamp(normalized, 0.0, 1.0);
    // First boundary strictly greater than r, minus one: a_{h-1} <= r < a_h.
    auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), r);
    auto h = static_cast<std::size_t>(it - boundaries_.begin());
    return std::min(h, bins()) - 1;
}

CharacterizationVector characterize_normalized(std::span<const double> normalized, ClientId owner,
                                               const HistogramSpec& spec) {
    if (normalized.empty()) throw std::invalid_argument("characterize: no scores");
    std::vector<std::size_t> counts(spec.bins(), 0);
    for (double r : normalized) {
        if (std::isnan(r)) throw std::invalid_argument("characterize: NaN score");
        ++counts[spec.bin_of(r)];
    }
    CharacterizationVector cv{owner, std::vector<double>(spec.bins()), normalized.size()};
    const double n = static_cast<double>(normalized.size());
    for (std::size_t h = 0; h < counts.size(); ++h) cv.v[h] = static_cast<double>(counts[h]) / n;
    return cv;
}

CharacterizationVector characterize(const ScoreSet& scores, const HistogramSpec& spec) {
    std::vector<double> normalized(scores.scores.size());
    std::transform(scores.scores.begin(), scores.scores.end(), normalized.begin(),
                   [&](double r) { return r / spec.r_max(); });
    return characterize_normalized(normalized, scores.owner, spec);
}

DistanceMatrix pairwise_distances(std::span<const CharacterizationVector> vectors) {
    check_shapes(vectors);
    const auto n = static_cast<std::ptrdiff_t>(vectors.size());
    DistanceMatrix d(vectors.size());
    // Each row owns its upper-triangle entries and mirrors them; rows write
    // disjoint cells so scheduling never changes the result.
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        for (std::ptrdiff_t j = i + 1; j < n; ++j) {
            const double dij = l2(vectors[static_cast<std::size_t>(i)].v, vectors[static_cast<std::size_t>(j)].v);
            d(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = dij;
            d(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) = dij;
        }
    }
    return d;
}

DistanceMatrix pairwise_distances_serial(std::span<const CharacterizationVector> vectors) {
    check_shapes(vectors);
    DistanceMatrix d(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        for (std::size_t j = i + 1; j < vectors.size(); ++j) {
            const double dij = l2(vectors[i].v, vectors[j].v);
            d(i, j) = dij;
            d(j, i) = dij;
        }
    }
    return d;
}

std::vector<double> maliciousness_scores(const DistanceMatrix& d, std::size_t benign_count) {
    const std::size_t k_total = d.size();
    if (benign_count < 2) throw std::invalid_argument("maliciousness_scores: K_b must be >= 2");
    if (benign_count > k_total) throw std::invalid_argument("maliciousness_scores: K_b must not exceed K");
    const std::size_t neighbors = benign_count - 1;

    std::vector<double> m(k_total);
    std::vector<std::pair<double, std::size_t>> row;
    row.reserve(k_total);
    for (std::size_t k = 0; k < k_total; ++k) {
        row.clear();
        for (std::size_t j = 0; j < k_total; ++j)
            if (j != k) row.emplace_back(d(k, j), j);
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbors), row.end());
        double sum = 0.0;
        for (std::size_t i = 0; i < neighbors; ++i) sum += row[i].first;
        m[k] = sum / static_cast<double>(neighbors);
    }
    return m;
}

std::vector<ClientId> select_benign_known(std::span<const double> m, std::size_t benign_count) {
    if (benign_count < 1 || benign_count > m.size())
        throw std::invalid_argument("select_benign_known: K_b must lie in [1, K]");
    std::vector<ClientId> order(m.size());
    std::iota(order.begin(), order.end(), ClientId{0});
    std::stable_sort(order.begin(), order.end(), [&](ClientId a, ClientId b) { return m[a] < m[b]; });
    order.resize(benign_count);
    std::sort(order.begin(), order.end());
    return order;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    const std::size_t n = values.size();
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

std::vector<ClientId> select_benign_mad(std::span<const double> m, double cutoff) {
    if (m.size() < 3) throw std::invalid_argument("select_benign_mad: need at least 3 clients");
    if (!(cutoff > 0.0)) throw std::invalid_argument("select_benign_mad: cutoff must be positive");
    const double med = median(std::vector<double>(m.begin(), m.end()));
    std::vector<double> dev(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) dev[k] = std::abs(m[k] - med);
    const double mad = median(dev);

    std::vector<ClientId> keep;
    for (std::size_t k = 0; k < m.size(); ++k) {
        const bool inlier = mad == 0.0 ? m[k] == med : dev[k] <= cutoff * kMadConsistency * mad;
        if (inlier) keep.push_back(k);
    }
    return keep;
}

double histogram_quantile(std::span<const CharacterizationVector> vectors, const HistogramSpec& spec,
                          double alpha) {
    if (vectors.empty()) throw std::invalid_argument("histogram_quantile: empty benign set");
    const std::size_t bins = spec.bins();
    std::vector<double> counts(bins, 0.0);
    std::size_t total = 0;
    for (const auto& cv : vectors) {
        if (cv.v.size() != bins) throw std::invalid_argument("histogram_quantile: histogram size mismatch");
        const double nk = static_cast<double>(cv.n_points);
        for (std::size_t h = 0; h < bins; ++h) counts[h] += cv.v[h] * nk;
        total += cv.n_points;
    }
    if (total == 0) throw std::invalid_argument("histogram_quantile: no calibration points");

    // Work in counts: target rank R = ceil((1 - alpha)(N + 1)) clamped to N,
    // which is t * N for the target level t.
    const double rank = static_cast<double>(conformal_rank(total, alpha));
    constexpr double kSlack = 1e-9;
    const auto& a = spec.boundaries();
    double cum = 0.0;
    for (std::size_t h = 0; h < bins; ++h) {
        if (counts[h] <= 0.0) continue;
        if (cum + counts[h] >= rank - kSlack) {
            const double frac = std::clamp((rank - cum) / counts[h], 0.0, 1.0);
            return (a[h] + frac * (a[h + 1] - a[h])) * spec.r_max();
        }
        cum += counts[h];
    }
    return spec.r_max();
}

MaliciousnessReport detect_byzantine(std::span<const CharacterizationVector> vectors,
                                     std::size_t benign_count, SelectionRule rule, double mad_cutoff) {
    MaliciousnessReport report;
    report.rule = rule;
    report.scores = maliciousness_scores(pairwise_distances(vectors), benign_count);
    report.benign = rule == SelectionRule::KnownCount ? select_benign_known(report.scores, benign_count)
                                                      : select_benign_mad(report.scores, mad_cutoff);
    return report;
}

}  // namespace psfcp
