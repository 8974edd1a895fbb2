#include "doctest.h"
#include "psfcp/psofed.hpp"
#include "psfcp/reference.hpp"

#include <stdexcept>
#include <cmath>
#include <numeric>

using namespace psfcp;

namespace {

std::vector<SampleList> make_train_sets(std::size_t clients, std::size_t per_client, const TrueModel& truth,
                                        std::uint64_t seed) {
    Rng cfg_rng(derive_seed(seed, Stream::ClientConfigs));
    DataLaw law;
    law.n_train = per_client;
    law.n_cal = 0;
    law.n_test = 0;
    const auto cfgs = draw_client_configs(clients, cfg_rng, law);
    std::vector<SampleList> out;
    for (std::size_t k = 0; k < clients; ++k) {
        Rng rng(derive_seed(seed, Stream::ClientData, k));
        out.push_back(build_dataset(truth, cfgs[k], rng).train);
    }
    return out;
}

double tail_mean(const std::vector<double>& v, std::size_t tail) {
    return std::accumulate(v.end() - static_cast<std::ptrdiff_t>(tail), v.end(), 0.0) / static_cast<double>(tail);
}

}  // namespace

TEST_CASE("draw_mask edge cases") {
    Rng rng(1);
    CHECK(draw_mask(5, 5, rng).indices() == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(draw_mask(5, 0, rng).indices().empty());
    CHECK_THROWS_AS(draw_mask(5, 6, rng), std::invalid_argument);
}

TEST_CASE("mask inclusion frequency is M/D") {
    Rng rng(2);
    std::vector<std::size_t> hits(50, 0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const auto mask = draw_mask(50, 15, rng);
        for (std::size_t j : mask.indices()) ++hits[j];
    }
    for (std::size_t h : hits) CHECK(std::abs(static_cast<double>(h) / draws - 0.3) <= 0.01);
}

TEST_CASE("mask projection is idempotent and blends are identities on equal inputs") {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const std::size_t dim = 1 + rng.below(30);
        const auto mask = draw_mask(dim, rng.below(dim + 1), rng);
        ModelVector v(dim);
        for (auto& x : v) x = rng.normal();
        const auto once = mask.project(v);
        CHECK(mask.project(once) == once);
        CHECK(mask.blend(v, v) == v);
    }
}

TEST_CASE("client innovation") {
    const auto full = SelectionMask::full(2);
    const auto none = SelectionMask::empty(2);
    CHECK(client_innovation(ModelVector{0, 0}, ModelVector{3, 3}, full, ModelVector{1, 0}, 1.0) == 1.0);
    CHECK(client_innovation(ModelVector{9, 9}, ModelVector{1, 0}, none, ModelVector{1, 0}, 1.0) == 0.0);
    // Blend keeps coordinate 0 from the global model: [2, 7]; 10 - 9 = 1.
    const SelectionMask first(2, {0});
    CHECK(client_innovation(ModelVector{2, 5}, ModelVector{3, 7}, first, ModelVector{1, 1}, 10.0) == 1.0);
    CHECK_THROWS_AS(client_innovation(ModelVector{0, 0}, ModelVector{0, 0}, full, ModelVector{1}, 0.0),
                    std::invalid_argument);
}

TEST_CASE("client update") {
    const auto full = SelectionMask::full(2);
    CHECK(client_update(ModelVector{0, 0}, ModelVector{4, -4}, full, ModelVector{1, 0}, 1.0, 0.5) ==
          ModelVector{0.5, 0.0});

    const SelectionMask first(2, {0});
    CHECK(client_update(ModelVector{2, 5}, ModelVector{3, 7}, first, ModelVector{0, 0}, 3.0, 0.1) ==
          ModelVector{2, 7});

    const auto w = client_update(ModelVector{2, 5}, ModelVector{3, 7}, first, ModelVector{1, 1}, 10.0, 0.1);
    CHECK(w[0] == doctest::Approx(2.1));
    CHECK(w[1] == doctest::Approx(7.1));
}

TEST_CASE("server aggregation") {
    const ModelVector g{0, 0};
    SUBCASE("single full upload replaces the global model") {
        std::vector<Upload> u{{0, SelectionMask::full(2), {3, 4}}};
        CHECK(server_aggregate(g, u) == ModelVector{3, 4});
    }
    SUBCASE("empty mask keeps the global model") {
        std::vector<Upload> u{{0, SelectionMask::empty(2), {3, 4}}};
        CHECK(server_aggregate(ModelVector{1, 2}, u) == ModelVector{1, 2});
    }
    SUBCASE("two partial uploads") {
        std::vector<Upload> u{{0, SelectionMask(2, {0}), {1, 9}}, {1, SelectionMask(2, {1}), {9, 2}}};
        CHECK(server_aggregate(g, u) == ModelVector{0.5, 1.0});
    }
    SUBCASE("no uploads") {
        CHECK_THROWS_AS(server_aggregate(g, std::vector<Upload>{}), std::invalid_argument);
    }
}

TEST_CASE("mse objective") {
    CHECK(mse_objective(ModelVector{1}, SampleList{{{2}, 5}}) == 9.0);
    const SampleList noise_free{{{1, 2}, 3}, {{-1, 1}, 0}};
    CHECK(mse_objective(ModelVector{1, 1}, noise_free) == 0.0);
    CHECK(mse_objective(ModelVector{0, 0}, noise_free) == doctest::Approx((9.0 + 0.0) / 2.0));
    CHECK_THROWS_AS(mse_objective(ModelVector{1}, SampleList{}), std::invalid_argument);
}

TEST_CASE("zero rounds returns the zero model") {
    TrainingConfig cfg;
    cfg.dim = 4;
    cfg.shared = 2;
    cfg.num_clients = 3;
    cfg.participants_per_round = 2;
    cfg.rounds = 0;
    const auto truth = TrueModel::unit_energy(4);
    const auto train = make_train_sets(3, 10, truth, 1);
    auto streams = TrainingStreams::from_seed(1);
    const auto r = run_training(cfg, truth, train, {}, streams);
    CHECK(r.global == ModelVector(4, 0.0));
    CHECK(r.mse_trace.empty());
}

TEST_CASE("single-client full-sharing LMS converges") {
    TrainingConfig cfg;
    cfg.dim = 10;
    cfg.shared = 10;
    cfg.num_clients = 1;
    cfg.participants_per_round = 1;
    cfg.rounds = 2000;
    cfg.step_size = 0.01;
    const auto truth = TrueModel::unit_energy(10);
    const auto train = make_train_sets(1, 2000, truth, 5);
    auto streams = TrainingStreams::from_seed(5);
    const auto r = run_training(cfg, truth, train, {}, streams);
    CHECK(r.mse_trace.back() < r.mse_trace.front());
    const double head = std::accumulate(r.mse_trace.begin(), r.mse_trace.begin() + 200, 0.0) / 200.0;
    CHECK(tail_mean(r.mse_trace, 200) < head);
}

TEST_CASE("default federation converges without attack") {
    TrainingConfig cfg;  // K=100, D=50, M=15, |S_n|=10, mu=0.05, 2000 rounds
    const auto truth = TrueModel::unit_energy(cfg.dim);
    const auto train = make_train_sets(cfg.num_clients, 600, truth, 1234);
    auto streams = TrainingStreams::from_seed(1234);
    const auto r = run_training(cfg, truth, train, {}, streams);
    CHECK(r.mse_trace.size() == 2000);
    CHECK(r.mse_trace.back() < 1e-2);
}

TEST_CASE("clients that are never selected keep their local model") {
    TrainingConfig cfg;
    cfg.dim = 6;
    cfg.shared = 3;
    cfg.num_clients = 30;
    cfg.participants_per_round = 2;
    cfg.rounds = 5;
    const auto truth = TrueModel::unit_energy(6);
    const auto train = make_train_sets(30, 10, truth, 9);
    std::vector<std::size_t> updates(30, 0);
    std::vector<ModelVector> previous(30, ModelVector(6, 0.0));
    std::vector<std::size_t> changed(30, 0);
    auto streams = TrainingStreams::from_seed(9);
    run_training(cfg, truth, train, {}, streams, [&](std::size_t, const FederatedState& s) {
        for (std::size_t k = 0; k < 30; ++k) {
            if (s.local[k] != previous[k]) ++changed[k];
            previous[k] = s.local[k];
        }
    });
    // 5 rounds x 2 participants touch at most 10 clients.
    const auto untouched = std::count(changed.begin(), changed.end(), 0u);
    CHECK(untouched >= 20);
    for (std::size_t k = 0; k < 30; ++k)
        if (changed[k] == 0) CHECK(previous[k] == ModelVector(6, 0.0));
}

TEST_CASE("full sharing matches the independent LMS-with-averaging reference bit for bit") {
    TrainingAttackConfig attack;
    SUBCASE("benign") {
        const auto r = reference::check_full_sharing_equivalence(50, 100, 10, 100, 0.05, attack, 17);
        CHECK(r.rounds == 100);
        CHECK(r.bit_identical());
    }
    SUBCASE("with Byzantine uploads") {
        attack.byzantine = first_clients(20);
        const auto r = reference::check_full_sharing_equivalence(50, 100, 10, 100, 0.05, attack, 18);
        CHECK(r.bit_identical());
    }
}

TEST_CASE("partial sharing attenuates the training attack") {
    // Seed-averaged steady-state error over the last 500 rounds, 20 seeds.
    TrainingAttackConfig attack;
    attack.attack_probability = 0.25;
    attack.noise_variance = 0.1;
    attack.byzantine = first_clients(20);
    double partial = 0.0, full = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        TrainingConfig cfg;
        const auto truth = TrueModel::unit_energy(cfg.dim);
        const auto train = make_train_sets(cfg.num_clients, 600, truth, 500 + seed);
        auto s1 = TrainingStreams::from_seed(500 + seed);
        partial += tail_mean(run_training(cfg, truth, train, attack, s1).mse_trace, 500);
        cfg.shared = cfg.dim;
        auto s2 = TrainingStreams::from_seed(500 + seed);
        full += tail_mean(run_training(cfg, truth, train, attack, s2).mse_trace, 500);
    }
    MESSAGE("steady-state error, M/D=0.3: " << partial / 20 << ", M/D=1: " << full / 20);
    CHECK(partial < full);
}

TEST_CASE("training config validation") {
    TrainingConfig cfg;
    cfg.shared = 51;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.participants_per_round = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.step_size = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
