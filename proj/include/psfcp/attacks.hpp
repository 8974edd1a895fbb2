#pragma once

// Byzantine behaviour in both phases: Bernoulli-Gaussian corruption of
// training uploads, and fabricated non-conformity scores at calibration.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "psfcp/rng.hpp"
#include "psfcp/types.hpp"

namespace psfcp {

struct TrainingAttackConfig {
    double attack_probability = 0.25;  // p_a
    double noise_variance = 0.1;       // sigma_B^2
    std::vector<ClientId> byzantine;   // S_B, sorted, 0-based

    bool is_byzantine(ClientId k) const;
    void validate(std::size_t num_clients) const;
};

/// The first `count` client ids, the default Byzantine placement.
std::vector<ClientId> first_clients(std::size_t count);

/// `count` distinct ids drawn uniformly from [0, num_clients), sorted.
std::vector<ClientId> random_clients(std::size_t num_clients, std::size_t count, Rng& rng);

enum class CalibrationAttackKind { None, Efficiency, Coverage, RandomUniform };

struct CalibrationAttack {
    CalibrationAttackKind kind = CalibrationAttackKind::None;
    double lo = 0.8;  // RandomUniform support, normalized score space
    double hi = 1.0;

    static CalibrationAttack none() { return {}; }
    static CalibrationAttack efficiency() { return {CalibrationAttackKind::Efficiency}; }
    static CalibrationAttack coverage() { return {CalibrationAttackKind::Coverage}; }
    static CalibrationAttack random_uniform(double lo, double hi) {
        return {CalibrationAttackKind::RandomUniform, lo, hi};
    }

    void validate() const;
};

/// "none", "efficiency", "coverage", "random".
std::string to_string(CalibrationAttackKind kind);
CalibrationAttackKind parse_calibration_attack(std::string_view name);

/// Result of one upload corruption draw. `fired` is tau.
struct CorruptedUpload {
    ModelVector upload;
    bool fired = false;
};

/// Returns w + tau * delta for Byzantine clients, w otherwise. delta is drawn
/// over all coordinates; the caller's upload mask decides what is transmitted.
/// Benign clients consume no randomness.
CorruptedUpload corrupt_upload(const ModelVector& w, bool byzantine,
                               const TrainingAttackConfig& cfg, Rng& rng);

/// Fabricated scores in normalized [0, 1] space.
std::vector<double> fabricate_scores(const CalibrationAttack& attack, std::size_t count, Rng& rng);

}  // namespace psfcp
