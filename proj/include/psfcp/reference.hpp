#pragma once

// Independent reference computations used by the oracle subcommand and the
// acceptance suite. Nothing here calls the optimized paths it is compared to.

#include <cstdint>
#include <vector>

#include "psfcp/attacks.hpp"
#include "psfcp/psofed.hpp"
#include "psfcp/synthetic_data.hpp"

namespace psfcp::reference {

/// Online LMS with periodic averaging: every selected client starts from the
/// global model, takes one LMS step, and the server averages the uploads.
/// Consumes the participant and attack streams exactly as run_training does.
struct FullSharingTrace {
    std::vector<ModelVector> global_per_round;
};

FullSharingTrace full_sharing_lms(const TrainingConfig& cfg, const std::vector<SampleList>& train_sets,
                                  const TrainingAttackConfig& attack, Rng& participants, Rng& attack_rng);

/// PSO-Fed global model after every round, for comparison with the reference.
std::vector<ModelVector> psofed_global_per_round(const TrainingConfig& cfg, const TrueModel& truth,
                                                 const std::vector<SampleList>& train_sets,
                                                 const TrainingAttackConfig& attack, std::uint64_t seed);

struct EquivalenceReport {
    std::size_t rounds = 0;
    std::size_t mismatched_rounds = 0;
    bool bit_identical() const { return mismatched_rounds == 0; }
};

/// Runs PSO-Fed with M = D and the full-sharing reference on a shared seed.
EquivalenceReport check_full_sharing_equivalence(std::size_t dim, std::size_t num_clients,
                                                 std::size_t participants, std::size_t rounds, double step_size,
                                                 const TrainingAttackConfig& attack, std::uint64_t seed);

/// One random benign calibration configuration and the two quantile routes.
struct QuantileCase {
    std::size_t index = 0;
    std::size_t num_clients = 0;
    std::size_t total_points = 0;
    double alpha = 0.1;
    double r_max = 0.0;
    double bin_width = 0.0;
    double pooled = 0.0;
    double histogram = 0.0;

    double gap() const;
    bool within_bin() const { return gap() <= bin_width * (1.0 + 1e-12); }
};

/// `cases` random configurations: 2-40 clients, 1-300 scores each, half-normal,
/// uniform or exponential score laws, r_max above every score.
std::vector<QuantileCase> quantile_oracle(std::size_t cases, std::size_t bins, double alpha, std::uint64_t seed);

}  // namespace psfcp::reference
