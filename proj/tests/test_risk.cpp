#include <cmath>
#include <random>

#include "doctest.h"
#include "opsqa/risk.hpp"
#include "opsqa/rng.hpp"

using namespace opsqa;

namespace {

// Linearly separable two-class set in 2D.
std::vector<EpisodeFact> separable_facts(int n_per_class, std::uint64_t seed) {
    std::vector<EpisodeFact> facts;
    SplitMix64 rng(seed);
    for (int i = 0; i < n_per_class; ++i) {
        EpisodeFact healthy;
        healthy.fact_id = "h" + std::to_string(i);
        healthy.label = "healthy";
        healthy.features = {{"x0", rng.normal(-2.0, 0.5), {}}, {"x1", rng.normal(-2.0, 0.5), {}}};
        facts.push_back(healthy);

        EpisodeFact fail;
        fail.fact_id = "f" + std::to_string(i);
        fail.label = "worn";
        fail.features = {{"x0", rng.normal(2.0, 0.5), {}}, {"x1", rng.normal(2.0, 0.5), {}}};
        facts.push_back(fail);
    }
    return facts;
}

// Hand-built two-class model: P(class1) = sigmoid(w^T z + b) in standardized
// coordinates z.
RiskModel toy_model() {
    nlohmann::ordered_json j;
    j["format"] = "opsqa-risk-model";
    j["version"] = 1;
    j["class_names"] = {"healthy", "worn"};
    j["feature_names"] = {"x0", "x1"};
    j["weights"] = {0.0, 0.0, 1.5, -0.5};  // healthy row zero, worn row (1.5, -0.5)
    j["biases"] = {0.0, 0.25};
    j["standardization"] = {{"centers", {1.0, 2.0}}, {"scales", {2.0, 4.0}}};
    return RiskModel::from_json_string(j.dump());
}

}  // namespace

TEST_CASE("analytic gradient matches central finite differences") {
    // the oracle: central differences of training_loss at random parameters
    SplitMix64 rng(99);
    const int n = 40, d = 3, k = 3;
    std::vector<std::vector<double>> x(n, std::vector<double>(d));
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) x[i][j] = rng.normal(0.0, 1.0);
        y[i] = static_cast<int>(rng.below(k));
    }
    const double l2 = 1e-3;
    const double h = 1e-5;

    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> theta(static_cast<std::size_t>(k) * (d + 1));
        for (auto& t : theta) t = rng.normal(0.0, 0.7);
        auto grad = training_gradient(x, y, k, l2, theta);
        double max_diff = 0.0;
        for (std::size_t p = 0; p < theta.size(); ++p) {
            auto plus = theta, minus = theta;
            plus[p] += h;
            minus[p] -= h;
            double numeric =
                (training_loss(x, y, k, l2, plus) - training_loss(x, y, k, l2, minus)) / (2 * h);
            max_diff = std::max(max_diff, std::abs(numeric - grad[p]));
        }
        CHECK(max_diff <= 1e-5);
    }
}

TEST_CASE("separable data trains to >= 0.99 accuracy") {
    auto facts = separable_facts(100, 5);
    RiskModel model = train_risk_model(facts);
    int correct = 0;
    for (const auto& fact : facts) {
        auto probs = model.predict_proba(fact);
        std::string best;
        double best_p = -1;
        for (const auto& [label, p] : probs) {
            if (p > best_p) {
                best_p = p;
                best = label;
            }
        }
        if (best == fact.label) ++correct;
    }
    CHECK(static_cast<double>(correct) / facts.size() >= 0.99);
    CHECK(model.training_meta().final_loss < 0.2);
}

TEST_CASE("single-label data is rejected") {
    std::vector<EpisodeFact> facts(3);
    for (int i = 0; i < 3; ++i) {
        facts[i].fact_id = "f" + std::to_string(i);
        facts[i].label = "healthy";
        facts[i].features = {{"x0", static_cast<double>(i), {}}};
    }
    CHECK_THROWS_AS(train_risk_model(facts), std::invalid_argument);
}

TEST_CASE("all-null and constant columns are dropped with a warning") {
    auto facts = separable_facts(20, 6);
    for (auto& fact : facts) {
        fact.features.push_back({"always_null", std::nullopt, {}});
        fact.features.push_back({"always_same", 3.0, {}});
    }
    RiskModel model = train_risk_model(facts);
    const auto& dropped = model.training_meta().dropped_features;
    CHECK(std::find(dropped.begin(), dropped.end(), "always_null") != dropped.end());
    CHECK(std::find(dropped.begin(), dropped.end(), "always_same") != dropped.end());
    CHECK(model.feature_names() == std::vector<std::string>{"x0", "x1"});
    CHECK(!model.training_meta().warnings.empty());
}

TEST_CASE("zero weights give uniform probabilities") {
    nlohmann::ordered_json j;
    j["format"] = "opsqa-risk-model";
    j["version"] = 1;
    j["class_names"] = {"a", "b", "c", "healthy"};
    j["feature_names"] = {"x0"};
    j["weights"] = {0.0, 0.0, 0.0, 0.0};
    j["biases"] = {0.0, 0.0, 0.0, 0.0};
    j["standardization"] = {{"centers", {0.0}}, {"scales", {1.0}}};
    RiskModel model = RiskModel::from_json_string(j.dump());
    auto probs = model.predict_proba(FeatureVector{{"x0"}, {3.0}});
    for (const auto& [_, p] : probs) CHECK(p == doctest::Approx(0.25));
}

TEST_CASE("two-class probabilities match the closed-form sigmoid") {
    RiskModel model = toy_model();
    FeatureVector x{{"x0", "x1"}, {3.0, -1.0}};
    // standardized: z0 = (3-1)/2 = 1, z1 = (-1-2)/4 = -0.75
    // logit(worn) - logit(healthy) = 1.5*1 - 0.5*(-0.75) + 0.25 = 2.125
    double expected_worn = 1.0 / (1.0 + std::exp(-2.125));
    auto probs = model.predict_proba(x);
    CHECK(probs["worn"] == doctest::Approx(expected_worn).epsilon(1e-12));
    CHECK(probs["healthy"] == doctest::Approx(1.0 - expected_worn).epsilon(1e-12));
}

TEST_CASE("probabilities normalize within 1e-9 over random inputs") {
    auto facts = separable_facts(50, 11);
    RiskModel model = train_risk_model(facts);
    SplitMix64 rng(123);
    for (int i = 0; i < 10000; ++i) {
        FeatureVector x{{"x0", "x1"}, {rng.uniform(-50, 50), rng.uniform(-50, 50)}};
        auto probs = model.predict_proba(x);
        double sum = 0;
        for (const auto& [_, p] : probs) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);  // saturates to 1.0 in doubles at extreme logits
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("unknown feature names are ignored with a warning") {
    RiskModel model = toy_model();
    std::vector<std::string> warnings;
    auto probs = model.predict_proba(FeatureVector{{"x0", "mystery"}, {1.0, 9.0}}, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("mystery") != std::string::npos);
    auto base = model.predict_proba(FeatureVector{{"x0"}, {1.0}});
    CHECK(probs["worn"] == doctest::Approx(base["worn"]));
}

TEST_CASE("missing coordinates impute to the training center") {
    RiskModel model = toy_model();
    // x1 missing -> center (2.0) -> standardized 0
    auto with_missing = model.predict_proba(FeatureVector{{"x0"}, {3.0}});
    auto with_center = model.predict_proba(FeatureVector{{"x0", "x1"}, {3.0, 2.0}});
    CHECK(with_missing["worn"] == doctest::Approx(with_center["worn"]).epsilon(1e-12));
}

TEST_CASE("empty intervention is the identity") {
    RiskModel model = toy_model();
    FeatureVector x{{"x0", "x1"}, {2.5, 1.0}};
    auto cf = model.simulate_intervention(x, {});
    CHECK(cf.delta_risk == 0.0);
    CHECK(cf.direction == RiskDirection::no_change);
    CHECK(cf.risk_before == cf.risk_after);
}

TEST_CASE("confidence follows the extremity heuristic") {
    RiskModel model = toy_model();
    // choose x0 so that risk_before hits the target; risk = P(worn)
    auto x_for_risk = [&](double target_risk) {
        // logit = 1.5*z0 + 0.25 with x1 at center; solve sigmoid(logit) = target
        double logit = std::log(target_risk / (1.0 - target_risk));
        double z0 = (logit - 0.25) / 1.5;
        return FeatureVector{{"x0"}, {1.0 + 2.0 * z0}};
    };
    auto c_at = [&](double risk) {
        return model.simulate_intervention(x_for_risk(risk), {}).confidence;
    };
    CHECK(c_at(0.5) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(c_at(0.75) == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(c_at(0.9999999) == doctest::Approx(1.0).epsilon(1e-6));

    // monotone in |risk_before - 0.5|
    double prev = 0.0;
    for (double r : {0.5, 0.55, 0.65, 0.8, 0.95}) {
        double c = c_at(r);
        CHECK(c >= prev);
        prev = c;
    }
}

TEST_CASE("interventions only touch named coordinates and unknown names are ignored") {
    RiskModel model = toy_model();
    FeatureVector x{{"x0", "x1"}, {2.5, 1.0}};
    auto cf = model.simulate_intervention(x, {{"x1", 10.0}, {"phantom", 1.0}});
    CHECK(cf.intervention.size() == 1);
    CHECK(cf.intervention.count("x1") == 1);
    // x0 unchanged: probs_before respects the same x0
    auto before = model.predict_proba(x);
    CHECK(cf.probs_before.at("worn") == doctest::Approx(before["worn"]).epsilon(1e-12));
    CHECK(cf.risk_before >= 0.0);
    CHECK(cf.risk_before <= 1.0);
    CHECK(cf.risk_after >= 0.0);
    CHECK(cf.risk_after <= 1.0);
    CHECK(cf.delta_risk == cf.risk_after - cf.risk_before);
    CHECK(cf.confidence >= 0.5);
    CHECK(cf.confidence <= 1.0);
}

TEST_CASE("direction rule uses the shared epsilon") {
    CHECK(direction_from_delta(0.0) == RiskDirection::no_change);
    CHECK(direction_from_delta(5e-7) == RiskDirection::no_change);
    CHECK(direction_from_delta(-5e-7) == RiskDirection::no_change);
    CHECK(direction_from_delta(2e-6) == RiskDirection::increase);
    CHECK(direction_from_delta(-2e-6) == RiskDirection::decrease);
}

TEST_CASE("model without a healthy class cannot simulate") {
    nlohmann::ordered_json j;
    j["format"] = "opsqa-risk-model";
    j["version"] = 1;
    j["class_names"] = {"a", "b"};
    j["feature_names"] = {"x0"};
    j["weights"] = {0.0, 1.0};
    j["biases"] = {0.0, 0.0};
    j["standardization"] = {{"centers", {0.0}}, {"scales", {1.0}}};
    RiskModel model = RiskModel::from_json_string(j.dump());
    CHECK_THROWS_AS(model.simulate_intervention(FeatureVector{{"x0"}, {1.0}}, {}),
                    std::logic_error);
}

TEST_CASE("serialization round trips weights and metadata") {
    auto facts = separable_facts(30, 21);
    RiskModel model = train_risk_model(facts);
    model.save("/tmp/opsqa_model.json");
    RiskModel again = RiskModel::load("/tmp/opsqa_model.json");
    CHECK(again.class_names() == model.class_names());
    CHECK(again.feature_names() == model.feature_names());
    CHECK(again.weights() == model.weights());
    CHECK(again.biases() == model.biases());
    CHECK(again.centers() == model.centers());
    CHECK(again.scales() == model.scales());

    FeatureVector x{{"x0", "x1"}, {0.3, -0.8}};
    CHECK(again.predict_proba(x).at("worn") ==
          doctest::Approx(model.predict_proba(x).at("worn")).epsilon(1e-15));
}

TEST_CASE("training is deterministic") {
    auto facts = separable_facts(40, 33);
    RiskModel a = train_risk_model(facts);
    RiskModel b = train_risk_model(facts);
    CHECK(a.to_json_string() == b.to_json_string());
}
