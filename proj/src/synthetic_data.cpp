#include "psfcp/synthetic_data.hpp"

#include <cmath>
#include <stdexcept>

namespace psfcp {

TrueModel TrueModel::unit_energy(std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("TrueModel: dimension must be positive");
    return TrueModel{ModelVector(dim, 1.0 / std::sqrt(static_cast<double>(dim)))};
}

void ClientDataConfig::validate() const {
    if (!(input_variance > 0.0) || !std::isfinite(input_variance))
        throw std::invalid_argument("ClientDataConfig: input_variance must be positive");
    if (!(noise_variance > 0.0) || !std::isfinite(noise_variance))
        throw std::invalid_argument("ClientDataConfig: noise_variance must be positive");
}

void DataLaw::validate() const {
    if (!(input_variance_lo > 0.0) || !(input_variance_hi >= input_variance_lo))
        throw std::invalid_argument("DataLaw: input variance range must satisfy 0 < lo <= hi");
    if (!(noise_variance_lo > 0.0) || !(noise_variance_hi >= noise_variance_lo))
        throw std::invalid_argument("DataLaw: noise variance range must satisfy 0 < lo <= hi");
}

std::vector<ClientDataConfig> draw_client_configs(std::size_t num_clients, Rng& rng,
                                                  const DataLaw& law) {
    if (num_clients == 0) throw std::invalid_argument("draw_client_configs: K must be >= 1");
    law.validate();
    std::vector<ClientDataConfig> out;
    out.reserve(num_clients);
    for (std::size_t k = 0; k < num_clients; ++k) {
        ClientDataConfig cfg;
        cfg.input_variance = rng.uniform(law.input_variance_lo, law.input_variance_hi);
        cfg.noise_variance = rng.uniform(law.noise_variance_lo, law.noise_variance_hi);
        cfg.n_train = law.n_train;
        cfg.n_cal = law.n_cal;
        cfg.n_test = law.n_test;
        out.push_back(cfg);
    }
    return out;
}

Sample generate_sample(const TrueModel& model, const ClientDataConfig& cfg, Rng& rng,
                       const SampleOverride& forced) {
    const std::size_t dim = model.dim();
    Sample s;
    if (forced.x) {
        if (forced.x->size() != dim)
            throw std::invalid_argument("generate_sample: forced x has wrong dimension");
        s.x = *forced.x;
    } else {
        const double sd = std::sqrt(cfg.input_variance);
        s.x.resize(dim);
        for (auto& xi : s.x) xi = sd * rng.normal();
    }
    const double noise = forced.noise ? *forced.noise : std::sqrt(cfg.noise_variance) * rng.normal();
    s.y = dot(model.w_star, s.x) + noise;
    return s;
}

ClientDataset build_dataset(const TrueModel& model, const ClientDataConfig& cfg, Rng& rng) {
    cfg.validate();
    ClientDataset ds;
    ds.train.reserve(cfg.n_train);
    ds.cal.reserve(cfg.n_cal);
    ds.test.reserve(cfg.n_test);
    for (std::size_t i = 0; i < cfg.n_train; ++i) ds.train.push_back(generate_sample(model, cfg, rng));
    for (std::size_t i = 0; i < cfg.n_cal; ++i) ds.cal.push_back(generate_sample(model, cfg, rng));
    for (std::size_t i = 0; i < cfg.n_test; ++i) ds.test.push_back(generate_sample(model, cfg, rng));
    return ds;
}

}  // namespace psfcp
