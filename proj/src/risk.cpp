#include "opsqa/risk.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace opsqa {

namespace {

constexpr const char* kHealthyLabel = "healthy";

std::vector<double> softmax(const std::vector<double>& logits) {
    double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double z = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp(logits[k] - top);
        z += out[k];
    }
    for (double& v : out) v /= z;
    return out;
}

}  // namespace

const char* to_string(RiskDirection d) {
    switch (d) {
        case RiskDirection::increase: return "increase";
        case RiskDirection::decrease: return "decrease";
        case RiskDirection::no_change: return "no_change";
    }
    return "no_change";
}

std::optional<RiskDirection> direction_from_string(const std::string& text) {
    if (text == "increase") return RiskDirection::increase;
    if (text == "decrease") return RiskDirection::decrease;
    if (text == "no_change" || text == "no change") return RiskDirection::no_change;
    return std::nullopt;
}

RiskDirection direction_from_delta(double delta_risk) {
    if (std::abs(delta_risk) <= kDirectionEpsilon) return RiskDirection::no_change;
    return delta_risk > 0 ? RiskDirection::increase : RiskDirection::decrease;
}

double training_loss(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                     int num_classes, double l2, const std::vector<double>& theta) {
    const std::size_t n = x.size();
    const std::size_t d = x.empty() ? 0 : x[0].size();
    double loss = 0.0;
    std::vector<double> logits(num_classes);
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < num_classes; ++k) {
            const double* wk = theta.data() + static_cast<std::size_t>(k) * (d + 1);
            double z = wk[d];  // bias
            for (std::size_t j = 0; j < d; ++j) z += wk[j] * x[i][j];
            logits[k] = z;
        }
        double top = *std::max_element(logits.begin(), logits.end());
        double lse = 0.0;
        for (int k = 0; k < num_classes; ++k) lse += std::exp(logits[k] - top);
        loss += std::log(lse) + top - logits[static_cast<std::size_t>(y[i])];
    }
    loss /= static_cast<double>(n);
    // Biases are unpenalized.
    double reg = 0.0;
    for (int k = 0; k < num_classes; ++k) {
        const double* wk = theta.data() + static_cast<std::size_t>(k) * (d + 1);
        for (std::size_t j = 0; j < d; ++j) reg += wk[j] * wk[j];
    }
    return loss + 0.5 * l2 * reg;
}

std::vector<double> training_gradient(const std::vector<std::vector<double>>& x,
                                      const std::vector<int>& y, int num_classes, double l2,
                                      const std::vector<double>& theta) {
    const std::size_t n = x.size();
    const std::size_t d = x.empty() ? 0 : x[0].size();
    std::vector<double> grad(theta.size(), 0.0);
    std::vector<double> logits(num_classes);
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < num_classes; ++k) {
            const double* wk = theta.data() + static_cast<std::size_t>(k) * (d + 1);
            double z = wk[d];
            for (std::size_t j = 0; j < d; ++j) z += wk[j] * x[i][j];
            logits[k] = z;
        }
        std::vector<double> p = softmax(logits);
        for (int k = 0; k < num_classes; ++k) {
            double coeff = p[static_cast<std::size_t>(k)] - (y[i] == k ? 1.0 : 0.0);
            double* gk = grad.data() + static_cast<std::size_t>(k) * (d + 1);
            for (std::size_t j = 0; j < d; ++j) gk[j] += coeff * x[i][j];
            gk[d] += coeff;
        }
    }
    for (double& g : grad) g /= static_cast<double>(n);
    for (int k = 0; k < num_classes; ++k) {
        const double* wk = theta.data() + static_cast<std::size_t>(k) * (d + 1);
        double* gk = grad.data() + static_cast<std::size_t>(k) * (d + 1);
        for (std::size_t j = 0; j < d; ++j) gk[j] += l2 * wk[j];
    }
    return grad;
}

RiskModel train_risk_model(const std::vector<EpisodeFact>& facts, const TrainConfig& config) {
    if (facts.empty()) throw std::invalid_argument("no training facts");

    std::set<std::string> label_set;
    std::set<std::string> name_set;
    for (const auto& fact : facts) {
        label_set.insert(fact.label);
        for (const auto& f : fact.features) name_set.insert(f.name);
    }
    if (label_set.size() < 2)
        throw std::invalid_argument("training requires at least two distinct labels");

    RiskModel model;
    model.class_names_.assign(label_set.begin(), label_set.end());
    std::vector<std::string> all_names(name_set.begin(), name_set.end());

    // Column statistics over non-missing entries.
    const std::size_t n = facts.size();
    std::vector<std::string> kept;
    std::vector<double> centers, scales;
    TrainingMeta meta;
    meta.config = config;
    for (const auto& name : all_names) {
        double sum = 0.0, count = 0.0;
        for (const auto& fact : facts) {
            if (auto v = fact.feature(name)) {
                sum += *v;
                count += 1.0;
            }
        }
        if (count == 0.0) {
            meta.dropped_features.push_back(name);
            meta.warnings.push_back("feature '" + name + "' has no numeric values; dropped");
            continue;
        }
        double mean = sum / count;
        double ss = 0.0;
        for (const auto& fact : facts) {
            if (auto v = fact.feature(name)) ss += (*v - mean) * (*v - mean);
        }
        double scale = std::sqrt(ss / count);
        if (scale <= 1e-12) {
            meta.dropped_features.push_back(name);
            meta.warnings.push_back("feature '" + name + "' is constant; dropped");
            continue;
        }
        kept.push_back(name);
        centers.push_back(mean);
        scales.push_back(scale);
    }
    if (kept.empty()) throw std::invalid_argument("no usable feature columns");

    model.feature_names_ = kept;
    model.centers_ = centers;
    model.scales_ = scales;

    const std::size_t d = kept.size();
    const int num_classes = static_cast<int>(model.class_names_.size());

    std::vector<std::vector<double>> x(n, std::vector<double>(d, 0.0));
    std::vector<int> y(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            auto v = facts[i].feature(kept[j]);
            // missing -> center -> standardized zero
            x[i][j] = v ? (*v - centers[j]) / scales[j] : 0.0;
        }
        y[i] = static_cast<int>(std::lower_bound(model.class_names_.begin(),
                                                 model.class_names_.end(), facts[i].label) -
                                model.class_names_.begin());
    }

    // Full-batch descent from zero with Armijo backtracking.
    std::vector<double> theta(static_cast<std::size_t>(num_classes) * (d + 1), 0.0);
    double loss = training_loss(x, y, num_classes, config.l2_strength, theta);
    double grad_norm = 0.0;
    int iter = 0;
    for (; iter < config.max_iters; ++iter) {
        std::vector<double> grad = training_gradient(x, y, num_classes, config.l2_strength, theta);
        grad_norm = 0.0;
        double grad_sq = 0.0;
        for (double g : grad) {
            grad_norm = std::max(grad_norm, std::abs(g));
            grad_sq += g * g;
        }
        if (grad_norm <= config.tolerance) break;

        double step = 1.0;
        std::vector<double> candidate(theta.size());
        while (true) {
            for (std::size_t t = 0; t < theta.size(); ++t) candidate[t] = theta[t] - step * grad[t];
            double cand_loss = training_loss(x, y, num_classes, config.l2_strength, candidate);
            if (cand_loss <= loss - 1e-4 * step * grad_sq || step < 1e-12) {
                theta.swap(candidate);
                loss = cand_loss;
                break;
            }
            step *= 0.5;
        }
    }
    meta.final_loss = loss;
    meta.final_gradient_norm = grad_norm;
    meta.iterations = iter;
    model.training_meta_ = meta;

    model.weights_.assign(static_cast<std::size_t>(num_classes) * d, 0.0);
    model.biases_.assign(static_cast<std::size_t>(num_classes), 0.0);
    for (int k = 0; k < num_classes; ++k) {
        const double* wk = theta.data() + static_cast<std::size_t>(k) * (d + 1);
        for (std::size_t j = 0; j < d; ++j) model.weights_[static_cast<std::size_t>(k) * d + j] = wk[j];
        model.biases_[static_cast<std::size_t>(k)] = wk[d];
    }
    return model;
}

std::vector<double> RiskModel::align(const FeatureVector& x,
                                     std::vector<std::string>* warnings) const {
    if (x.names.size() != x.values.size())
        throw std::invalid_argument("feature vector names/values length mismatch");
    std::vector<double> out(feature_names_.size());
    for (std::size_t j = 0; j < feature_names_.size(); ++j) out[j] = centers_[j];
    std::set<std::string> known(feature_names_.begin(), feature_names_.end());
    for (std::size_t i = 0; i < x.names.size(); ++i) {
        if (!known.count(x.names[i])) {
            if (warnings) warnings->push_back("unknown feature '" + x.names[i] + "' ignored");
            continue;
        }
        if (std::isnan(x.values[i])) continue;  // missing -> center
        auto it = std::lower_bound(feature_names_.begin(), feature_names_.end(), x.names[i]);
        out[static_cast<std::size_t>(it - feature_names_.begin())] = x.values[i];
    }
    return out;
}

std::vector<double> RiskModel::align(const EpisodeFact& fact,
                                     std::vector<std::string>* warnings) const {
    FeatureVector fv;
    for (const auto& f : fact.features) {
        fv.names.push_back(f.name);
        fv.values.push_back(f.value ? *f.value : std::nan(""));
    }
    return align(fv, warnings);
}

std::map<std::string, double> RiskModel::softmax_probs(const std::vector<double>& raw) const {
    const std::size_t d = feature_names_.size();
    std::vector<double> logits(class_names_.size());
    for (std::size_t k = 0; k < class_names_.size(); ++k) {
        double z = biases_[k];
        for (std::size_t j = 0; j < d; ++j) {
            double standardized = (raw[j] - centers_[j]) / scales_[j];
            z += weights_[k * d + j] * standardized;
        }
        logits[k] = z;
    }
    std::vector<double> p = softmax(logits);
    std::map<std::string, double> out;
    for (std::size_t k = 0; k < class_names_.size(); ++k) out[class_names_[k]] = p[k];
    return out;
}

std::map<std::string, double> RiskModel::predict_proba(const FeatureVector& x,
                                                       std::vector<std::string>* warnings) const {
    return softmax_probs(align(x, warnings));
}

std::map<std::string, double> RiskModel::predict_proba(const EpisodeFact& fact) const {
    return softmax_probs(align(fact));
}

double RiskModel::risk(const FeatureVector& x) const {
    auto probs = predict_proba(x);
    auto it = probs.find(kHealthyLabel);
    if (it == probs.end()) throw std::logic_error("model has no 'healthy' class");
    return 1.0 - it->second;
}

CounterfactualResult RiskModel::simulate_intervention(
    const FeatureVector& x, const std::map<std::string, double>& intervention) const {
    if (std::find(class_names_.begin(), class_names_.end(), kHealthyLabel) == class_names_.end())
        throw std::logic_error("model has no 'healthy' class");

    std::vector<double> raw = align(x);
    std::vector<double> raw_do = raw;
    CounterfactualResult result;
    for (const auto& [name, value] : intervention) {
        auto it = std::lower_bound(feature_names_.begin(), feature_names_.end(), name);
        if (it == feature_names_.end() || *it != name) continue;  // silently ignored
        raw_do[static_cast<std::size_t>(it - feature_names_.begin())] = value;
        result.intervention[name] = value;
    }

    result.probs_before = softmax_probs(raw);
    result.probs_after = softmax_probs(raw_do);
    result.risk_before = 1.0 - result.probs_before.at(kHealthyLabel);
    result.risk_after = 1.0 - result.probs_after.at(kHealthyLabel);
    result.delta_risk = result.risk_after - result.risk_before;
    result.direction = direction_from_delta(result.delta_risk);
    result.confidence = 0.5 + 0.5 * std::min(1.0, std::abs(result.risk_before - 0.5) / 0.5);
    return result;
}

CounterfactualResult RiskModel::simulate_intervention(
    const EpisodeFact& fact, const std::map<std::string, double>& intervention) const {
    FeatureVector fv;
    for (const auto& f : fact.features) {
        fv.names.push_back(f.name);
        fv.values.push_back(f.value ? *f.value : std::nan(""));
    }
    return simulate_intervention(fv, intervention);
}

std::string RiskModel::to_json_string() const {
    nlohmann::ordered_json j;
    j["format"] = "opsqa-risk-model";
    j["version"] = 1;
    j["class_names"] = class_names_;
    j["feature_names"] = feature_names_;
    j["weights"] = weights_;
    j["biases"] = biases_;
    j["standardization"] = {{"centers", centers_}, {"scales", scales_}};
    nlohmann::ordered_json meta;
    meta["l2_strength"] = training_meta_.config.l2_strength;
    meta["max_iters"] = training_meta_.config.max_iters;
    meta["tolerance"] = training_meta_.config.tolerance;
    meta["final_loss"] = training_meta_.final_loss;
    meta["final_gradient_norm"] = training_meta_.final_gradient_norm;
    meta["iterations"] = training_meta_.iterations;
    meta["dropped_features"] = training_meta_.dropped_features;
    meta["warnings"] = training_meta_.warnings;
    j["training_meta"] = std::move(meta);
    return j.dump(2);
}

RiskModel RiskModel::from_json_string(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "opsqa-risk-model")
        throw std::runtime_error("not a risk model document");
    if (j.value("version", 0) != 1)
        throw std::runtime_error("unsupported risk model version");
    RiskModel m;
    m.class_names_ = j["class_names"].get<std::vector<std::string>>();
    m.feature_names_ = j["feature_names"].get<std::vector<std::string>>();
    m.weights_ = j["weights"].get<std::vector<double>>();
    m.biases_ = j["biases"].get<std::vector<double>>();
    m.centers_ = j["standardization"]["centers"].get<std::vector<double>>();
    m.scales_ = j["standardization"]["scales"].get<std::vector<double>>();
    if (j.contains("training_meta")) {
        const auto& meta = j["training_meta"];
        m.training_meta_.config.l2_strength = meta.value("l2_strength", 1e-3);
        m.training_meta_.config.max_iters = meta.value("max_iters", 500);
        m.training_meta_.config.tolerance = meta.value("tolerance", 1e-6);
        m.training_meta_.final_loss = meta.value("final_loss", 0.0);
        m.training_meta_.final_gradient_norm = meta.value("final_gradient_norm", 0.0);
        m.training_meta_.iterations = meta.value("iterations", 0);
        if (meta.contains("dropped_features"))
            m.training_meta_.dropped_features =
                meta["dropped_features"].get<std::vector<std::string>>();
        if (meta.contains("warnings"))
            m.training_meta_.warnings = meta["warnings"].get<std::vector<std::string>>();
    }
    if (m.weights_.size() != m.class_names_.size() * m.feature_names_.size())
        throw std::runtime_error("risk model weight matrix shape mismatch");
    return m;
}

void RiskModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << to_json_string() << "\n";
}

RiskModel RiskModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open risk model '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

}  // namespace opsqa
