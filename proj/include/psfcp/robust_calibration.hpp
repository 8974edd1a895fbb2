#pragma once

// Byzantine-robust calibration from histogram sketches.
//
// Every client bins its normalized scores into an H-bin probability vector.
// The server scores each client by its mean l2 distance to the K_b - 1
// closest other vectors, keeps the K_b least suspicious clients (or applies a
// MAD cutoff when K_b is unknown), and reads the conformal quantile off the
// pooled histogram of the kept clients.

#include <cstddef>
#include <span>
#include <vector>

#include "psfcp/conformal.hpp"
#include "psfcp/types.hpp"

namespace psfcp {

class HistogramSpec {
public:
    /// H equal-width bins on [0, 1].
    static HistogramSpec uniform(std::size_t bins, double r_max);

    /// Explicit boundaries 0 = a_0 < ... < a_H = 1.
    HistogramSpec(std::vector<double> boundaries, double r_max);

    std::size_t bins() const { return boundaries_.size() - 1; }
    const std::vector<double>& boundaries() const { return boundaries_; }
    double r_max() const { return r_max_; }

    /// Largest bin width in raw score units.
    double max_bin_width() const;

    /// 0-based bin of a normalized score; values are clipped into [0, 1] and
    /// the last bin is right-closed.
    std::size_t bin_of(double normalized) const;

private:
    std::vector<double> boundaries_;
    double r_max_;
};

struct CharacterizationVector {
    ClientId owner = 0;
    std::vector<double> v;    // on the simplex
    std::size_t n_points = 0; // N_k
};

/// Histogram of raw scores (divided by r_max, then clipped).
CharacterizationVector characterize(const ScoreSet& scores, const HistogramSpec& spec);

/// Histogram of scores already in normalized [0, 1] space.
CharacterizationVector characterize_normalized(std::span<const double> normalized, ClientId owner,
                                               const HistogramSpec& spec);

/// Dense symmetric K x K matrix, row-major.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return d_[i * n_ + j]; }
    std::span<const double> row(std::size_t i) const { return {d_.data() + i * n_, n_}; }

    friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> d_;
};

/// Pairwise l2 distances, rows computed in parallel when OpenMP is enabled.
DistanceMatrix pairwise_distances(std::span<const CharacterizationVector> vectors);

/// Single-threaded reference of pairwise_distances. Bit-identical output.
DistanceMatrix pairwise_distances_serial(std::span<const CharacterizationVector> vectors);

/// m_k: mean of the K_b - 1 smallest off-diagonal entries of row k.
/// Ties go to the smaller client index. Requires 2 <= K_b <= K.
std::vector<double> maliciousness_scores(const DistanceMatrix& d, std::size_t benign_count);

/// The K_b indices with the smallest m_k (ties to the smaller index), sorted.
std::vector<ClientId> select_benign_known(std::span<const double> m, std::size_t benign_count);

/// Keeps k with |m_k - median| <= c * 1.4826 * MAD. When MAD is zero only
/// exact-median clients are kept. Requires K >= 3.
std::vector<ClientId> select_benign_mad(std::span<const double> m, double cutoff = 3.0);

/// Median; the mean of the two middle values for even counts.
double median(std::vector<double> values);

/// Conformal quantile read from the N_k-weighted mixture histogram with
/// linear interpolation inside the bin, in raw score units.
double histogram_quantile(std::span<const CharacterizationVector> vectors, const HistogramSpec& spec,
                          double alpha);

enum class SelectionRule { KnownCount, Mad };

struct MaliciousnessReport {
    std::vector<double> scores;      // m_k
    std::vector<ClientId> benign;    // B, sorted
    SelectionRule rule = SelectionRule::KnownCount;
};

/// Distances, maliciousness scores and benign set in one call.
MaliciousnessReport detect_byzantine(std::span<const CharacterizationVector> vectors,
                                     std::size_t benign_count, SelectionRule rule,
                                     double mad_cutoff = 3.0);

}  // namespace psfcp
