#include "doctest.h"
#include "psfcp/experiment.hpp"
#include "test_support.hpp"

#include <stdexcept>
#include <cmath>

using namespace psfcp;
using psfcp::testing::small_config;

namespace {

void check_same(const TrialRecord& a, const TrialRecord& b) {
    CHECK(a.coverage == b.coverage);
    CHECK(a.mean_width == b.mean_width);
    CHECK(a.final_mse == b.final_mse);
    CHECK(a.q_hat == b.q_hat);
    CHECK(a.detected_benign == b.detected_benign);
}

}  // namespace

TEST_CASE("trial records are well formed") {
    auto cfg = small_config();
    for (Method m : {Method::Fcp, Method::RobFcp, Method::PsoFedRob}) {
        cfg.method = m;
        const auto rec = run_trial(cfg, 0, {true, true});
        CHECK(rec.coverage >= 0.0);
        CHECK(rec.coverage <= 1.0);
        CHECK(rec.mean_width == doctest::Approx(2.0 * rec.q_hat));
        CHECK(rec.mse_trace.size() == cfg.training.rounds);
        CHECK(rec.final_mse == rec.mse_trace.back());
        CHECK(rec.histograms.size() == cfg.training.num_clients);
        CHECK(rec.byzantine == first_clients(4));
        CHECK(rec.n_detected_true_benign + rec.n_detected_false_benign == rec.detected_benign.size());
        if (m == Method::Fcp) CHECK(rec.detected_benign.size() == cfg.training.num_clients);
        else CHECK(rec.detected_benign.size() == cfg.training.num_clients - 4);
    }
}

TEST_CASE("experiments are deterministic and parallel equals serial") {
    const auto cfg = small_config();
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    const auto s = run_experiment_serial(cfg);
    REQUIRE(a.trials.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        check_same(a.trials[i], b.trials[i]);
        check_same(a.trials[i], s.trials[i]);
        CHECK(a.trials[i].trial == i);
    }
    CHECK(a.coverage.mean == s.coverage.mean);
}

TEST_CASE("one trial aggregates to itself") {
    auto cfg = small_config();
    cfg.n_trials = 1;
    const auto r = run_experiment(cfg);
    CHECK(r.coverage.mean == r.trials[0].coverage);
    CHECK(r.mean_width.mean == r.trials[0].mean_width);
    CHECK(r.coverage.stddev == 0.0);
}

TEST_CASE("summary statistics") {
    const auto s = summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(s.mean == 2.5);
    CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
}

TEST_CASE("partial-sharing method with M = D is rob-fcp") {
    auto cfg = small_config();
    cfg.training.shared = cfg.training.dim;
    cfg.method = Method::PsoFedRob;
    const auto ours = run_experiment(cfg);
    cfg.method = Method::RobFcp;
    const auto rob = run_experiment(cfg);
    for (std::size_t i = 0; i < ours.trials.size(); ++i) check_same(ours.trials[i], rob.trials[i]);
}

TEST_CASE("without Byzantine clients fcp and rob-fcp differ by at most one bin") {
    auto cfg = small_config();
    cfg.attack.byzantine_count = 0;
    cfg.attack.calibration = CalibrationAttack::none();
    cfg.calibration.normalization = {NormalizationMode::Model, 5.0, 1.0};
    cfg.method = Method::Fcp;
    const auto fcp = run_experiment(cfg);
    cfg.method = Method::RobFcp;
    const auto rob = run_experiment(cfg);
    for (std::size_t i = 0; i < fcp.trials.size(); ++i) {
        const double bin = rob.trials[i].r_max / static_cast<double>(cfg.calibration.bins);
        CHECK(std::abs(fcp.trials[i].q_hat - rob.trials[i].q_hat) <= bin);
    }
}

TEST_CASE("methods see the same data at equal trial index") {
    auto cfg = small_config();
    cfg.method = Method::Fcp;
    const auto a = run_trial(cfg, 1);
    cfg.method = Method::RobFcp;
    const auto b = run_trial(cfg, 1);
    CHECK(a.final_mse == b.final_mse);
}

TEST_CASE("r_max modes") {
    auto cfg = small_config();
    cfg.calibration.normalization = {NormalizationMode::Fixed, 5.0, 2.5};
    CHECK(run_trial(cfg, 0).r_max == 2.5);
    cfg.calibration.normalization = {NormalizationMode::Noise, 5.0, 1.0};
    const double noise = run_trial(cfg, 0).r_max;
    CHECK(noise <= 5.0 * std::sqrt(0.025));
    CHECK(noise >= 5.0 * std::sqrt(0.005));
    cfg.calibration.normalization = {NormalizationMode::Model, 5.0, 1.0};
    CHECK(run_trial(cfg, 0).r_max > noise);
}

TEST_CASE("MAD selection runs end to end") {
    auto cfg = small_config();
    cfg.calibration.selection = SelectionRule::Mad;
    const auto rec = run_trial(cfg, 0);
    CHECK(rec.n_detected_false_benign == 0);
}

TEST_CASE("config validation") {
    auto cfg = small_config();
    cfg.n_trials = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.attack.byzantine_count = cfg.training.num_clients;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.attack.byzantine_count = cfg.training.num_clients - 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // K_b = 1 cannot rank neighbours
    cfg = small_config();
    cfg.calibration.alpha = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.data.n_cal = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("method names round-trip") {
    for (Method m : {Method::Fcp, Method::RobFcp, Method::PsoFedRob}) CHECK(parse_method(to_string(m)) == m);
    CHECK_THROWS_AS(parse_method("fedavg"), std::invalid_argument);
}
