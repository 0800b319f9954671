#pragma once
// Multinomial logistic risk model over episode labels, with do-intervention
// counterfactual queries: risk r(x) = 1 - P(healthy | x) evaluated before and
// after substituting intervened coordinates.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opsqa/facts.hpp"

namespace opsqa {

// Direction changes smaller than this are numerical noise, not findings.
// Shared with the verifier so both sides derive the same direction.
inline constexpr double kDirectionEpsilon = 1e-6;

enum class RiskDirection { increase, decrease, no_change };

const char* to_string(RiskDirection d);
std::optional<RiskDirection> direction_from_string(const std::string& text);
RiskDirection direction_from_delta(double delta_risk);

struct TrainConfig {
    double l2_strength = 1e-3;
    int max_iters = 500;
    double tolerance = 1e-6;  // on the max-abs gradient entry
};

struct TrainingMeta {
    TrainConfig config;
    double final_loss = 0.0;
    double final_gradient_norm = 0.0;
    int iterations = 0;
    std::vector<std::string> dropped_features;  // all-null or constant columns
    std::vector<std::string> warnings;
};

struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;  // NaN marks a missing coordinate
};

struct CounterfactualResult {
    std::map<std::string, double> intervention;
    double risk_before = 0.0;
    double risk_after = 0.0;
    double delta_risk = 0.0;
    RiskDirection direction = RiskDirection::no_change;
    std::map<std::string, double> probs_before;
    std::map<std::string, double> probs_after;
    double confidence = 0.5;  // 0.5 + 0.5 * min(1, |r_before - 0.5| / 0.5)
};

class RiskModel {
public:
    const std::vector<std::string>& class_names() const { return class_names_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::vector<double>& weights() const { return weights_; }  // row-major class x feature
    const std::vector<double>& biases() const { return biases_; }
    const std::vector<double>& centers() const { return centers_; }
    const std::vector<double>& scales() const { return scales_; }
    const TrainingMeta& training_meta() const { return training_meta_; }

    // Aligns a named vector onto the model's feature order. Unknown names are
    // ignored (reported through `warnings` when given); absent or null
    // coordinates impute to the training center.
    std::vector<double> align(const FeatureVector& x,
                              std::vector<std::string>* warnings = nullptr) const;
    std::vector<double> align(const EpisodeFact& fact,
                              std::vector<std::string>* warnings = nullptr) const;

    std::map<std::string, double> predict_proba(const FeatureVector& x,
                                                std::vector<std::string>* warnings = nullptr) const;
    std::map<std::string, double> predict_proba(const EpisodeFact& fact) const;

    // 1 - P(healthy | x); throws std::logic_error when the model has no
    // healthy class.
    double risk(const FeatureVector& x) const;

    CounterfactualResult simulate_intervention(
        const FeatureVector& x, const std::map<std::string, double>& intervention) const;
    CounterfactualResult simulate_intervention(
        const EpisodeFact& fact, const std::map<std::string, double>& intervention) const;

    std::string to_json_string() const;
    static RiskModel from_json_string(const std::string& text);
    void save(const std::string& path) const;
    static RiskModel load(const std::string& path);

    friend RiskModel train_risk_model(const std::vector<EpisodeFact>&, const TrainConfig&);
    friend class RiskModelBuilder;

private:
    std::map<std::string, double> softmax_probs(const std::vector<double>& aligned) const;

    std::vector<std::string> class_names_;
    std::vector<std::string> feature_names_;
    std::vector<double> weights_;
    std::vector<double> biases_;
    std::vector<double> centers_;
    std::vector<double> scales_;
    TrainingMeta training_meta_;
};

// Deterministic full-batch training: zero initialization, gradient descent
// with Armijo backtracking on the L2-regularized multinomial cross-entropy.
// Requires at least two distinct labels.
RiskModel train_risk_model(const std::vector<EpisodeFact>& facts, const TrainConfig& config = {});

// Loss/gradient of the training objective at explicit parameters, exposed so
// tests can run finite-difference checks against the analytic gradient.
// theta layout: K*(D+1) values, class-major, bias last per class.
double training_loss(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                     int num_classes, double l2, const std::vector<double>& theta);
std::vector<double> training_gradient(const std::vector<std::vector<double>>& x,
                                      const std::vector<int>& y, int num_classes, double l2,
                                      const std::vector<double>& theta);

}  // namespace opsqa
