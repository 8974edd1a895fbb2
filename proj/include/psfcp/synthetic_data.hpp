#pragma once

// Non-IID linear-regression streams y = w*^T x + nu, one stream per client.

#include <cstddef>
#include <optional>
#include <vector>

#include "psfcp/rng.hpp"
#include "psfcp/types.hpp"

namespace psfcp {

struct TrueModel {
    ModelVector w_star;

    std::size_t dim() const { return w_star.size(); }

    /// w* = (1/sqrt(D)) [1, ..., 1], unit energy.
    static TrueModel unit_energy(std::size_t dim);
};

struct ClientDataConfig {
    double input_variance = 0.7;     // per-entry variance of x
    double noise_variance = 0.015;   // variance of nu
    std::size_t n_train = 600;
    std::size_t n_cal = 200;
    std::size_t n_test = 200;

    std::size_t total() const { return n_train + n_cal + n_test; }
    void validate() const;
};

/// Sampling law for the per-client variances and the per-client split.
struct DataLaw {
    double input_variance_lo = 0.2;
    double input_variance_hi = 1.2;
    double noise_variance_lo = 0.005;
    double noise_variance_hi = 0.025;
    std::size_t n_train = 600;
    std::size_t n_cal = 200;
    std::size_t n_test = 200;

    void validate() const;
};

std::vector<ClientDataConfig> draw_client_configs(std::size_t num_clients, Rng& rng,
                                                  const DataLaw& law = {});

/// Fixed draws for exact-value tests. Unset fields are drawn from rng.
struct SampleOverride {
    std::optional<std::vector<double>> x;
    std::optional<double> noise;
};

Sample generate_sample(const TrueModel& model, const ClientDataConfig& cfg, Rng& rng,
                       const SampleOverride& forced = {});

struct ClientDataset {
    SampleList train;
    SampleList cal;
    SampleList test;
};

/// Draws cfg.total() samples in stream order and splits them contiguously
/// into train, calibration and test.
ClientDataset build_dataset(const TrueModel& model, const ClientDataConfig& cfg, Rng& rng);

}  // namespace psfcp
