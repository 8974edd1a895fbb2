#include "psfcp/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psfcp {

bool TrainingAttackConfig::is_byzantine(ClientId k) const {
    return std::binary_search(byzantine.begin(), byzantine.end(), k);
}

void TrainingAttackConfig::validate(std::size_t num_clients) const {
    if (!(attack_probability >= 0.0 && attack_probability <= 1.0))
        throw std::invalid_argument("TrainingAttackConfig: p_a must lie in [0, 1]");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
        throw std::invalid_argument("TrainingAttackConfig: sigma_B^2 must be non-negative");
    if (!std::is_sorted(byzantine.begin(), byzantine.end()) ||
        std::adjacent_find(byzantine.begin(), byzantine.end()) != byzantine.end())
        throw std::invalid_argument("TrainingAttackConfig: Byzantine ids must be sorted and distinct");
    if (!byzantine.empty() && byzantine.back() >= num_clients)
        throw std::invalid_argument("TrainingAttackConfig: Byzantine id out of range");
}

std::vector<ClientId> first_clients(std::size_t count) {
    std::vector<ClientId> ids(count);
    for (std::size_t i = 0; i < count; ++i) ids[i] = i;
    return ids;
}

std::vector<ClientId> random_clients(std::size_t num_clients, std::size_t count, Rng& rng) {
    auto ids = rng.sample_without_replacement(num_clients, count);
    std::sort(ids.begin(), ids.end());
    return ids;
}

void CalibrationAttack::validate() const {
    if (kind == CalibrationAttackKind::RandomUniform && !(lo >= 0.0 && lo < hi && hi <= 1.0))
        throw std::invalid_argument("CalibrationAttack: random support must satisfy 0 <= lo < hi <= 1");
}

std::string to_string(CalibrationAttackKind kind) {
    switch (kind) {
        case CalibrationAttackKind::None: return "none";
        case CalibrationAttackKind::Efficiency: return "efficiency";
        case CalibrationAttackKind::Coverage: return "coverage";
        case CalibrationAttackKind::RandomUniform: return "random";
    }
    return "none";
}

CalibrationAttackKind parse_calibration_attack(std::string_view name) {
    if (name == "none") return CalibrationAttackKind::None;
    if (name == "efficiency") return CalibrationAttackKind::Efficiency;
    if (name == "coverage") return CalibrationAttackKind::Coverage;
    if (name == "random") return CalibrationAttackKind::RandomUniform;
    throw std::invalid_argument("unknown calibration attack '" + std::string(name) + "'");
}

CorruptedUpload corrupt_upload(const ModelVector& w, bool byzantine,
                               const TrainingAttackConfig& cfg, Rng& rng) {
    CorruptedUpload out{w, false};
    if (!byzantine) return out;
    out.fired = rng.bernoulli(cfg.attack_probability);
    if (out.fired) {
        const double sd = std::sqrt(cfg.noise_variance);
        for (auto& wi : out.upload) wi += sd * rng.normal();
    }
    return out;
}

std::vector<double> fabricate_scores(const CalibrationAttack& attack, std::size_t count, Rng& rng) {
    if (count == 0) throw std::invalid_argument("fabricate_scores: N_k must be >= 1");
    attack.validate();
    switch (attack.kind) {
        case CalibrationAttackKind::Efficiency: return std::vector<double>(count, 0.0);
        case CalibrationAttackKind::Coverage: return std::vector<double>(count, 1.0);
        case CalibrationAttackKind::RandomUniform: {
            std::vector<double> s(count);
            for (auto& v : s) v = rng.uniform(attack.lo, attack.hi);
            return s;
        }
        case CalibrationAttackKind::None: break;
    }
    throw std::invalid_argument("fabricate_scores: no attack configured; benign clients report real scores");
}

}  // namespace psfcp
