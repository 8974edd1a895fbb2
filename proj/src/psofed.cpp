#include "psfcp/psofed.hpp"

#include <algorithm>
#include <stdexcept>

namespace psfcp {

namespace {

void require_dim(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace

SelectionMask::SelectionMask(std::size_t dim, std::vector<std::size_t> indices)
    : indices_(std::move(indices)), member_(dim, 0) {
    std::sort(indices_.begin(), indices_.end());
    for (std::size_t i : indices_) {
        if (i >= dim) throw std::invalid_argument("SelectionMask: index out of range");
        if (member_[i]) throw std::invalid_argument("SelectionMask: duplicate index");
        member_[i] = 1;
    }
}

SelectionMask SelectionMask::full(std::size_t dim) {
    std::vector<std::size_t> all(dim);
    for (std::size_t i = 0; i < dim; ++i) all[i] = i;
    return SelectionMask(dim, std::move(all));
}

SelectionMask SelectionMask::empty(std::size_t dim) { return SelectionMask(dim, {}); }

ModelVector SelectionMask::project(std::span<const double> v) const {
    require_dim(dim(), v.size(), "SelectionMask::project");
    ModelVector out(v.size(), 0.0);
    for (std::size_t i : indices_) out[i] = v[i];
    return out;
}

ModelVector SelectionMask::blend(std::span<const double> a, std::span<const double> b) const {
    require_dim(dim(), a.size(), "SelectionMask::blend");
    require_dim(dim(), b.size(), "SelectionMask::blend");
    ModelVector out(b.begin(), b.end());
    for (std::size_t i : indices_) out[i] = a[i];
    return out;
}

SelectionMask draw_mask(std::size_t dim, std::size_t shared, Rng& rng) {
    if (shared > dim) throw std::invalid_argument("draw_mask: M must not exceed D");
    return SelectionMask(dim, rng.sample_without_replacement(dim, shared));
}

void TrainingConfig::validate() const {
    if (dim == 0) throw std::invalid_argument("TrainingConfig: D must be positive");
    if (shared > dim) throw std::invalid_argument("TrainingConfig: M must not exceed D");
    if (!(step_size > 0.0)) throw std::invalid_argument("TrainingConfig: mu must be positive");
    if (num_clients == 0) throw std::invalid_argument("TrainingConfig: K must be positive");
    if (participants_per_round < 1 || participants_per_round > num_clients)
        throw std::invalid_argument("TrainingConfig: |S_n| must lie in [1, K]");
}

FederatedState FederatedState::zeros(std::size_t num_clients, std::size_t dim) {
    return FederatedState{ModelVector(dim, 0.0), std::vector<ModelVector>(num_clients, ModelVector(dim, 0.0)), 0};
}

double client_innovation(std::span<const double> global_prev, std::span<const double> local_prev,
                         const SelectionMask& mask_prev, std::span<const double> x, double y) {
    require_dim(global_prev.size(), x.size(), "client_innovation");
    const ModelVector blended = mask_prev.blend(global_prev, local_prev);
    return y - dot(blended, x);
}

ModelVector client_update(std::span<const double> global_prev, std::span<const double> local_prev,
                          const SelectionMask& mask_prev, std::span<const double> x, double y,
                          double step_size) {
    require_dim(global_prev.size(), x.size(), "client_update");
    ModelVector w = mask_prev.blend(global_prev, local_prev);
    const double eps = y - dot(w, x);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += step_size * x[i] * eps;
    return w;
}

ModelVector server_aggregate(std::span<const double> global_prev, std::span<const Upload> uploads) {
    if (uploads.empty()) throw std::invalid_argument("server_aggregate: no uploads");
    const std::size_t dim = global_prev.size();
    ModelVector acc(dim, 0.0);
    for (const Upload& u : uploads) {
        require_dim(dim, u.vector.size(), "server_aggregate");
        require_dim(dim, u.mask.dim(), "server_aggregate");
        for (std::size_t i = 0; i < dim; ++i) acc[i] += u.mask.contains(i) ? u.vector[i] : global_prev[i];
    }
    const double count = static_cast<double>(uploads.size());
    for (auto& a : acc) a /= count;
    return acc;
}

TrainingStreams TrainingStreams::from_seed(std::uint64_t seed) {
    return TrainingStreams{Rng(derive_seed(seed, Stream::Participants)),
                           Rng(derive_seed(seed, Stream::Masks)),
                           Rng(derive_seed(seed, Stream::TrainingAttack))};
}

TrainingResult run_training(const TrainingConfig& cfg, const TrueModel& truth,
                            std::span<const SampleList> train_sets,
                            const TrainingAttackConfig& attack, TrainingStreams& streams,
                            const RoundObserver& observer) {
    cfg.validate();
    attack.validate(cfg.num_clients);
    require_dim(cfg.dim, truth.dim(), "run_training");
    if (train_sets.size() != cfg.num_clients)
        throw std::invalid_argument("run_training: need one training set per client");

    FederatedState state = FederatedState::zeros(cfg.num_clients, cfg.dim);
    std::vector<SelectionMask> last_mask;
    last_mask.reserve(cfg.num_clients);
    for (std::size_t k = 0; k < cfg.num_clients; ++k)
        last_mask.push_back(draw_mask(cfg.dim, cfg.shared, streams.masks));
    std::vector<std::size_t> cursor(cfg.num_clients, 0);

    TrainingResult result;
    result.mse_trace.reserve(cfg.rounds);
    std::vector<Upload> uploads;
    uploads.reserve(cfg.participants_per_round);

    for (std::size_t n = 0; n < cfg.rounds; ++n) {
        auto selected = streams.participants.sample_without_replacement(cfg.num_clients,
                                                                        cfg.participants_per_round);
        std::sort(selected.begin(), selected.end());
        uploads.clear();
        for (ClientId k : selected) {
            const SampleList& train = train_sets[k];
            if (train.empty())
                throw std::invalid_argument("run_training: client selected with an empty training set");
            const Sample& s = train[cursor[k] % train.size()];
            ++cursor[k];
            state.local[k] = client_update(state.global, state.local[k], last_mask[k], s.x, s.y, cfg.step_size);

            SelectionMask upload_mask = draw_mask(cfg.dim, cfg.shared, streams.masks);
            auto sent = corrupt_upload(state.local[k], attack.is_byzantine(k), attack, streams.attack);
            if (sent.fired) ++result.corrupted_uploads;
            last_mask[k] = upload_mask;
            uploads.push_back(Upload{k, std::move(upload_mask), std::move(sent.upload)});
        }
        state.global = server_aggregate(state.global, uploads);
        state.round = n + 1;
        result.mse_trace.push_back(squared_distance(state.global, truth.w_star));
        if (observer) observer(state.round, state);
    }
    result.global = std::move(state.global);
    return result;
}

double mse_objective(std::span<const double> w, std::span<const Sample> samples) {
    if (samples.empty()) throw std::invalid_argument("mse_objective: no samples");
    double s = 0.0;
    for (const Sample& smp : samples) {
        const double r = smp.y - dot(w, smp.x);
        s += r * r;
    }
    return s / static_cast<double>(samples.size());
}

}  // namespace psfcp
