#pragma once

// Partial-sharing online federated learning (PSO-Fed).
//
// Each round the server samples |S_n| clients. A selected client blends the
// coordinates it downloads (its previous mask) from the global model into its
// local model, takes one LMS step on its next training sample, and uploads
// the coordinates picked by a fresh mask. The server averages uploads, filling
// coordinates a client did not send with the previous global value.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "psfcp/attacks.hpp"
#include "psfcp/rng.hpp"
#include "psfcp/synthetic_data.hpp"
#include "psfcp/types.hpp"

namespace psfcp {

/// Diagonal 0/1 selection matrix with M ones, stored as sorted indices plus a
/// membership table.
class SelectionMask {
public:
    SelectionMask() = default;
    SelectionMask(std::size_t dim, std::vector<std::size_t> indices);

    static SelectionMask full(std::size_t dim);
    static SelectionMask empty(std::size_t dim);

    std::size_t dim() const { return member_.size(); }
    std::size_t size() const { return indices_.size(); }
    const std::vector<std::size_t>& indices() const { return indices_; }
    bool contains(std::size_t i) const { return member_[i] != 0; }

    /// S v.
    ModelVector project(std::span<const double> v) const;

    /// S a + (I - S) b.
    ModelVector blend(std::span<const double> a, std::span<const double> b) const;

    friend bool operator==(const SelectionMask&, const SelectionMask&) = default;

private:
    std::vector<std::size_t> indices_;
    std::vector<unsigned char> member_;
};

/// M coordinates of [0, D) uniformly without replacement.
SelectionMask draw_mask(std::size_t dim, std::size_t shared, Rng& rng);

struct TrainingConfig {
    std::size_t dim = 50;                    // D
    std::size_t shared = 15;                 // M
    double step_size = 0.05;                 // mu
    std::size_t num_clients = 100;           // K
    std::size_t participants_per_round = 10; // |S_n|
    std::size_t rounds = 2000;

    void validate() const;
};

struct FederatedState {
    ModelVector global;
    std::vector<ModelVector> local;
    std::size_t round = 0;

    static FederatedState zeros(std::size_t num_clients, std::size_t dim);
};

/// y - [S g + (I - S) l]^T x.
double client_innovation(std::span<const double> global_prev, std::span<const double> local_prev,
                         const SelectionMask& mask_prev, std::span<const double> x, double y);

/// S g + (I - S) l + mu x eps.
ModelVector client_update(std::span<const double> global_prev, std::span<const double> local_prev,
                          const SelectionMask& mask_prev, std::span<const double> x, double y,
                          double step_size);

struct Upload {
    ClientId client = 0;
    SelectionMask mask;
    ModelVector vector;  // full-length, possibly corrupted; only masked coordinates are read
};

/// (1/|S_n|) sum_k [S_k u_k + (I - S_k) g], accumulated in upload order.
ModelVector server_aggregate(std::span<const double> global_prev, std::span<const Upload> uploads);

struct TrainingResult {
    ModelVector global;
    std::vector<double> mse_trace;  // ||w_n - w*||^2 after each round
    std::size_t corrupted_uploads = 0;
};

/// Streams feeding run_training. Kept separate so the participant schedule
/// is unaffected by M and by attack draws.
struct TrainingStreams {
    Rng participants;
    Rng masks;
    Rng attack;

    static TrainingStreams from_seed(std::uint64_t seed);
};

/// Called after each round with the round number (1-based) and the state.
using RoundObserver = std::function<void(std::size_t, const FederatedState&)>;

/// Runs the federated loop. train_sets[k] is cycled when exhausted.
/// Participants are processed in ascending client index.
TrainingResult run_training(const TrainingConfig& cfg, const TrueModel& truth,
                            std::span<const SampleList> train_sets,
                            const TrainingAttackConfig& attack, TrainingStreams& streams,
                            const RoundObserver& observer = {});

/// (1/N) sum |y_j - w^T x_j|^2.
double mse_objective(std::span<const double> w, std::span<const Sample> samples);

}  // namespace psfcp
