#include "psfcp/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "psfcp/conformal.hpp"
#include "psfcp/robust_calibration.hpp"

namespace psfcp::reference {

FullSharingTrace full_sharing_lms(const TrainingConfig& cfg, const std::vector<SampleList>& train_sets,
                                  const TrainingAttackConfig& attack, Rng& participants, Rng& attack_rng) {
    const std::size_t dim = cfg.dim;
    std::vector<double> global(dim, 0.0);
    std::vector<std::size_t> cursor(cfg.num_clients, 0);
    FullSharingTrace trace;

    for (std::size_t n = 0; n < cfg.rounds; ++n) {
        auto selected = participants.sample_without_replacement(cfg.num_clients, cfg.participants_per_round);
        std::sort(selected.begin(), selected.end());
        std::vector<double> sum(dim, 0.0);
        for (std::size_t k : selected) {
            const SampleList& train = train_sets[k];
            const Sample& s = train[cursor[k]++ % train.size()];
            double pred = 0.0;
            for (std::size_t i = 0; i < dim; ++i) pred += global[i] * s.x[i];
            const double err = s.y - pred;
            std::vector<double> local(dim);
            for (std::size_t i = 0; i < dim; ++i) local[i] = global[i] + cfg.step_size * s.x[i] * err;
            if (std::binary_search(attack.byzantine.begin(), attack.byzantine.end(), k) &&
                attack_rng.bernoulli(attack.attack_probability)) {
                const double sd = std::sqrt(attack.noise_variance);
                for (std::size_t i = 0; i < dim; ++i) local[i] += sd * attack_rng.normal();
            }
            for (std::size_t i = 0; i < dim; ++i) sum[i] += local[i];
        }
        for (std::size_t i = 0; i < dim; ++i) global[i] = sum[i] / static_cast<double>(selected.size());
        trace.global_per_round.push_back(global);
    }
    return trace;
}

std::vector<ModelVector> psofed_global_per_round(const TrainingConfig& cfg, const TrueModel& truth,
                                                 const std::vector<SampleList>& train_sets,
                                                 const TrainingAttackConfig& attack, std::uint64_t seed) {
    std::vector<ModelVector> out;
    out.reserve(cfg.rounds);
    TrainingStreams streams = TrainingStreams::from_seed(seed);
    run_training(cfg, truth, train_sets, attack, streams,
                 [&](std::size_t, const FederatedState& state) { out.push_back(state.global); });
    return out;
}

EquivalenceReport check_full_sharing_equivalence(std::size_t dim, std::size_t num_clients,
                                                 std::size_t participants, std::size_t rounds, double step_size,
                                                 const TrainingAttackConfig& attack, std::uint64_t seed) {
    TrainingConfig cfg;
    cfg.dim = dim;
    cfg.shared = dim;
    cfg.num_clients = num_clients;
    cfg.participants_per_round = participants;
    cfg.rounds = rounds;
    cfg.step_size = step_size;

    const TrueModel truth = TrueModel::unit_energy(dim);
    Rng cfg_rng(derive_seed(seed, Stream::ClientConfigs));
    DataLaw law;
    law.n_train = std::max<std::size_t>(rounds, 1);
    law.n_cal = 0;
    law.n_test = 0;
    const auto clients = draw_client_configs(num_clients, cfg_rng, law);
    std::vector<SampleList> train;
    for (std::size_t k = 0; k < num_clients; ++k) {
        Rng rng(derive_seed(seed, Stream::ClientData, k));
        train.push_back(build_dataset(truth, clients[k], rng).train);
    }

    const auto psofed = psofed_global_per_round(cfg, truth, train, attack, seed);
    const TrainingStreams streams = TrainingStreams::from_seed(seed);
    Rng part = streams.participants;
    Rng atk = streams.attack;
    const auto ref = full_sharing_lms(cfg, train, attack, part, atk);

    EquivalenceReport report;
    report.rounds = rounds;
    for (std::size_t n = 0; n < rounds; ++n)
        if (psofed[n] != ref.global_per_round[n]) ++report.mismatched_rounds;
    return report;
}

double QuantileCase::gap() const { return std::abs(histogram - pooled); }

std::vector<QuantileCase> quantile_oracle(std::size_t cases, std::size_t bins, double alpha, std::uint64_t seed) {
    std::vector<QuantileCase> out;
    out.reserve(cases);
    for (std::size_t c = 0; c < cases; ++c) {
        Rng rng(derive_seed(seed, c));
        const std::size_t num_clients = 2 + rng.below(39);
        const int law = static_cast<int>(rng.below(3));
        const double scale = rng.uniform(0.05, 2.0);

        std::vector<ScoreSet> sets;
        double max_score = 0.0;
        for (std::size_t k = 0; k < num_clients; ++k) {
            ScoreSet s{k, {}};
            const std::size_t n = 1 + rng.below(300);
            for (std::size_t j = 0; j < n; ++j) {
                double r = 0.0;
                if (law == 0) r = std::abs(scale * rng.normal());
                else if (law == 1) r = scale * rng.uniform();
                else r = -scale * std::log(1.0 - rng.uniform());
                s.scores.push_back(r);
                max_score = std::max(max_score, r);
            }
            sets.push_back(std::move(s));
        }
        const double r_max = std::max(max_score, 1e-12) * rng.uniform(1.0, 3.0);
        const HistogramSpec spec = HistogramSpec::uniform(bins, r_max);
        std::vector<CharacterizationVector> vectors;
        std::size_t total = 0;
        for (const auto& s : sets) {
            vectors.push_back(characterize(s, spec));
            total += s.scores.size();
        }

        QuantileCase qc;
        qc.index = c;
        qc.num_clients = num_clients;
        qc.total_points = total;
        qc.alpha = alpha;
        qc.r_max = r_max;
        qc.bin_width = spec.max_bin_width();
        qc.pooled = pooled_quantile(sets, alpha);
        qc.histogram = histogram_quantile(vectors, spec, alpha);
        out.push_back(qc);
    }
    return out;
}

}  // namespace psfcp::reference
