#include "opsqa/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace opsqa {

namespace {

bool is_token_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' ||
           c == '+';
}

// Lowercased word/number tokens; leading/trailing punctuation stripped.
std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&]() {
        while (!cur.empty() && (cur.back() == '.' || cur.back() == '-' || cur.back() == '+'))
            cur.pop_back();
        while (!cur.empty() && (cur.front() == '-' || cur.front() == '+')) {
            // keep a sign only if the rest parses as a number
            if (parse_numeric_literal(cur)) break;
            cur.erase(cur.begin());
        }
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
    };
    for (char c : text) {
        if (is_token_char(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

const std::set<std::string>& stopwords() {
    static const std::set<std::string> words = {
        "a",    "an",   "and",  "are",  "as",   "at",   "be",   "because", "been", "by",
        "for",  "from", "has",  "have", "in",   "is",   "it",   "its",     "of",   "on",
        "or",   "over", "that", "the",  "this", "these", "those", "to",    "was",  "were",
        "with", "would", "approximately", "about"};
    return words;
}

}  // namespace

bool numeric_claim_matches(double claimed, double actual) {
    return std::abs(claimed - actual) <= std::max(1e-6, 1e-3 * std::abs(actual));
}

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i + 1 < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && text[i + 1] == ' ') {
            // boundary only when followed by an uppercase letter or digit
            std::size_t next = i + 2;
            while (next < text.size() && text[next] == ' ') ++next;
            if (next < text.size() &&
                (std::isupper(static_cast<unsigned char>(text[next])) ||
                 std::isdigit(static_cast<unsigned char>(text[next])))) {
                out.push_back(text.substr(start, i - start + 1));
                start = next;
                i = next - 1;
            }
        }
    }
    if (start < text.size()) {
        std::string tail = text.substr(start);
        if (tail.find_first_not_of(" \t") != std::string::npos) out.push_back(tail);
    }
    return out;
}

std::vector<AtomicClaim> extract_claims(const std::string& reasoning_text) {
    std::vector<AtomicClaim> claims;

    // numeric assertions: <name_with_underscore> [=≈] <number>
    for (std::size_t i = 0; i < reasoning_text.size(); ++i) {
        if (!(std::isalpha(static_cast<unsigned char>(reasoning_text[i])) ||
              reasoning_text[i] == '_'))
            continue;
        std::size_t name_start = i;
        while (i < reasoning_text.size() &&
               (std::isalnum(static_cast<unsigned char>(reasoning_text[i])) ||
                reasoning_text[i] == '_'))
            ++i;
        std::string name = reasoning_text.substr(name_start, i - name_start);
        if (name.find('_') == std::string::npos) continue;  // prose words carry no claim

        std::size_t j = i;
        while (j < reasoning_text.size() && reasoning_text[j] == ' ') ++j;
        bool approx = false;
        if (j + 2 < reasoning_text.size() &&
            static_cast<unsigned char>(reasoning_text[j]) == 0xE2 &&
            static_cast<unsigned char>(reasoning_text[j + 1]) == 0x89 &&
            static_cast<unsigned char>(reasoning_text[j + 2]) == 0x88) {
            approx = true;  // UTF-8 "≈"
            j += 3;
        } else if (reasoning_text[j] == '=') {
            ++j;
        } else if (reasoning_text.compare(j, 2, "~=") == 0) {
            j += 2;
        } else {
            continue;
        }
        while (j < reasoning_text.size() && reasoning_text[j] == ' ') ++j;
        std::size_t num_start = j;
        while (j < reasoning_text.size() &&
               (std::isdigit(static_cast<unsigned char>(reasoning_text[j])) ||
                reasoning_text[j] == '.' || reasoning_text[j] == '-' || reasoning_text[j] == '+' ||
                reasoning_text[j] == 'e' || reasoning_text[j] == 'E'))
            ++j;
        std::string number = reasoning_text.substr(num_start, j - num_start);
        while (!number.empty() && number.back() == '.') number.pop_back();
        auto value = parse_numeric_literal(number);
        if (!value) continue;
        AtomicClaim claim;
        claim.kind = AtomicClaim::Kind::numeric;
        claim.subject = name;
        claim.value = *value;
        claim.text =
            name + (approx ? " ≈ " : "=") + number;
        claims.push_back(std::move(claim));
        i = j;
    }

    // relation assertions: "<word> indicates|belongs to <name>"
    for (const char* verb : {"indicates", "belongs to"}) {
        std::size_t pos = 0;
        const std::string needle = std::string(" ") + verb + " ";
        while ((pos = reasoning_text.find(needle, pos)) != std::string::npos) {
            // subject: the word immediately before
            std::size_t sub_end = pos;
            std::size_t sub_start = sub_end;
            while (sub_start > 0 &&
                   (std::isalnum(static_cast<unsigned char>(reasoning_text[sub_start - 1])) ||
                    reasoning_text[sub_start - 1] == '_'))
                --sub_start;
            std::string subject = reasoning_text.substr(sub_start, sub_end - sub_start);
            std::size_t obj_start = pos + needle.size();
            std::size_t obj_end = reasoning_text.find_first_of(".,;\n", obj_start);
            if (obj_end == std::string::npos) obj_end = reasoning_text.size();
            std::string object = reasoning_text.substr(obj_start, obj_end - obj_start);
            while (!object.empty() && object.back() == ' ') object.pop_back();
            if (!subject.empty() && !object.empty()) {
                AtomicClaim claim;
                claim.kind = AtomicClaim::Kind::relation;
                claim.subject = subject;
                claim.verb = verb;
                claim.object = object;
                claim.text = subject + " " + verb + " " + object;
                claims.push_back(std::move(claim));
            }
            pos = obj_end;
        }
    }
    return claims;
}

double LexicalEntailmentJudge::score(const std::string& sentence,
                                     const std::vector<std::string>& evidence_texts) const {
    std::vector<std::string> tokens = tokenize(sentence);
    std::vector<std::string> content;
    for (auto& t : tokens) {
        if (!stopwords().count(t)) content.push_back(t);
    }
    if (content.empty()) return 1.0;

    std::set<std::string> evidence_tokens;
    std::vector<double> evidence_numbers;
    for (const auto& text : evidence_texts) {
        for (const auto& t : tokenize(text)) {
            evidence_tokens.insert(t);
            if (auto v = parse_numeric_literal(t)) evidence_numbers.push_back(*v);
        }
    }

    std::size_t hits = 0;
    for (const auto& t : content) {
        if (evidence_tokens.count(t)) {
            ++hits;
            continue;
        }
        if (auto v = parse_numeric_literal(t)) {
            bool matched = false;
            for (double ev : evidence_numbers) {
                if (numeric_claim_matches(*v, ev)) {
                    matched = true;
                    break;
                }
            }
            if (matched) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(content.size());
}

bool windows_overlap(Timestamp a_start, Timestamp a_end, Timestamp b_start, Timestamp b_end) {
    return a_start <= b_end && b_start <= a_end;
}

namespace {

// First integer in the text, for count-style temporal answers.
std::optional<long long> first_integer(const std::string& text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(text[i]))) {
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            return std::stoll(text.substr(i, j - i));
        }
    }
    return std::nullopt;
}

}  // namespace

MetricRecord score_instance(const ParsedAnswer& answer, const QAInstance& qa,
                            const VerifierReport& report, const EpisodeFact* fact,
                            const KnowledgeGraph& kg, const EntailmentJudge& judge,
                            const std::vector<std::string>& evidence_texts) {
    MetricRecord record;
    record.qa_id = qa.qa_id;
    record.task_type = qa.task_type;
    record.struct_ok = report.struct_ok;
    record.prov_ok = report.struct_ok && report.prov_ok;
    record.label_consistent = report.label_consistent;
    record.cf_direction_ok = report.cf_direction_ok;

    if (qa.task_type == TaskType::temporal_count) {
        if (answer.ok()) {
            auto predicted = first_integer(answer.envelope->direct_answer);
            auto gold = first_integer(qa.label);
            record.temporal_ok = predicted && gold && *predicted == *gold;
        } else {
            record.temporal_ok = false;
        }
    }

    if (answer.ok()) {
        const std::string& reasoning = answer.envelope->reasoning_answer;
        auto sentences = split_sentences(reasoning);
        if (!sentences.empty()) {
            std::size_t passed = 0;
            for (const auto& s : sentences) {
                if (judge.score(s, evidence_texts) >= kEntailmentThreshold) ++passed;
            }
            record.entail_pass_rate =
                static_cast<double>(passed) / static_cast<double>(sentences.size());
            record.entail_pass_instance = passed == sentences.size();
        }

        auto claims = extract_claims(reasoning);
        if (!claims.empty()) {
            std::size_t valid = 0;
            for (const auto& claim : claims) {
                if (claim.kind == AtomicClaim::Kind::numeric) {
                    if (fact) {
                        auto actual = fact->feature(claim.subject);
                        if (actual && numeric_claim_matches(claim.value, *actual)) ++valid;
                    }
                } else {
                    // relation claims check the KG: the named failure mode must
                    // list the subject among its associated sensors
                    auto profile = kg.failure_profile(claim.object);
                    if (profile) {
                        const auto& sensors = profile->associated_sensors;
                        if (std::find(sensors.begin(), sensors.end(), claim.subject) !=
                            sensors.end())
                            ++valid;
                    }
                }
            }
            record.claim_precision =
                static_cast<double>(valid) / static_cast<double>(claims.size());
        }
    }
    return record;
}

namespace {

struct MeanAccum {
    double sum = 0.0;
    std::int64_t n = 0;
    void add(double v) {
        sum += v;
        ++n;
    }
    MetricMean done() const { return {n ? sum / static_cast<double>(n) : 0.0, n}; }
};

}  // namespace

AggregateReport aggregate(const std::string& config_name,
                          const std::vector<MetricRecord>& records) {
    AggregateReport report;
    report.config = config_name;
    report.total_instances = static_cast<std::int64_t>(records.size());

    MeanAccum s, p, label, cf, temporal, entail_rate, entail_inst, claims, full;
    for (const auto& r : records) {
        ++report.per_task[to_string(r.task_type)];
        s.add(r.struct_ok ? 1.0 : 0.0);
        p.add(r.prov_ok ? 1.0 : 0.0);
        if (r.label_consistent) label.add(*r.label_consistent ? 1.0 : 0.0);
        if (r.cf_direction_ok) cf.add(*r.cf_direction_ok ? 1.0 : 0.0);
        if (r.temporal_ok) temporal.add(*r.temporal_ok ? 1.0 : 0.0);
        if (r.entail_pass_rate) entail_rate.add(*r.entail_pass_rate);
        if (r.entail_pass_instance) entail_inst.add(*r.entail_pass_instance ? 1.0 : 0.0);
        if (r.claim_precision) claims.add(*r.claim_precision);
        if (r.task_type == TaskType::diagnostic) {
            double sum = (r.struct_ok ? 1.0 : 0.0) + (r.prov_ok ? 1.0 : 0.0) +
                         (r.label_consistent.value_or(false) ? 1.0 : 0.0);
            full.add(sum / 3.0);
        }
    }
    report.struct_ok = s.done();
    report.prov_ok = p.done();
    report.label_consistent = label.done();
    report.cf_direction_ok = cf.done();
    report.temporal_ok = temporal.done();
    report.entail_pass_rate = entail_rate.done();
    report.entail_pass_instance = entail_inst.done();
    report.claim_precision = claims.done();
    report.full_pass = full.done();
    return report;
}

namespace {

nlohmann::ordered_json mean_json(const MetricMean& m) {
    return {{"mean", m.mean}, {"n", m.count}};
}

}  // namespace

nlohmann::ordered_json aggregate_to_json(const AggregateReport& r) {
    nlohmann::ordered_json j;
    j["config"] = r.config;
    j["total_instances"] = r.total_instances;
    j["per_task"] = r.per_task;
    j["struct_ok"] = mean_json(r.struct_ok);
    j["prov_ok"] = mean_json(r.prov_ok);
    j["label_consistent"] = mean_json(r.label_consistent);
    j["cf_direction_ok"] = mean_json(r.cf_direction_ok);
    j["temporal_ok"] = mean_json(r.temporal_ok);
    j["entail_pass_rate"] = mean_json(r.entail_pass_rate);
    j["entail_pass_instance"] = mean_json(r.entail_pass_instance);
    j["claim_precision"] = mean_json(r.claim_precision);
    j["full_pass"] = mean_json(r.full_pass);
    return j;
}

nlohmann::ordered_json metric_record_to_json(const MetricRecord& r) {
    nlohmann::ordered_json j;
    j["qa_id"] = r.qa_id;
    j["task_type"] = to_string(r.task_type);
    j["struct_ok"] = r.struct_ok;
    j["prov_ok"] = r.prov_ok;
    j["label_consistent"] = r.label_consistent ? nlohmann::ordered_json(*r.label_consistent)
                                               : nlohmann::ordered_json(nullptr);
    j["cf_direction_ok"] = r.cf_direction_ok ? nlohmann::ordered_json(*r.cf_direction_ok)
                                             : nlohmann::ordered_json(nullptr);
    j["temporal_ok"] = r.temporal_ok ? nlohmann::ordered_json(*r.temporal_ok)
                                     : nlohmann::ordered_json(nullptr);
    j["entail_pass_rate"] = r.entail_pass_rate ? nlohmann::ordered_json(*r.entail_pass_rate)
                                               : nlohmann::ordered_json(nullptr);
    j["entail_pass_instance"] = r.entail_pass_instance
                                    ? nlohmann::ordered_json(*r.entail_pass_instance)
                                    : nlohmann::ordered_json(nullptr);
    j["claim_precision"] = r.claim_precision ? nlohmann::ordered_json(*r.claim_precision)
                                             : nlohmann::ordered_json(nullptr);
    return j;
}

std::string aggregate_csv_header() {
    return "config,total_instances,struct_ok,prov_ok,label_consistent,cf_direction_ok,"
           "temporal_ok,entail_pass_rate,entail_pass_instance,claim_precision,full_pass";
}

namespace {
std::string csv_num(const MetricMean& m) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", m.mean);
    return buf;
}
}  // namespace

std::string aggregate_csv_row(const AggregateReport& r) {
    std::string out = r.config + "," + std::to_string(r.total_instances);
    for (const MetricMean* m :
         {&r.struct_ok, &r.prov_ok, &r.label_consistent, &r.cf_direction_ok, &r.temporal_ok,
          &r.entail_pass_rate, &r.entail_pass_instance, &r.claim_precision, &r.full_pass}) {
        out += "," + csv_num(*m);
    }
    return out;
}

std::string render_comparison_markdown(const std::vector<AggregateReport>& reports) {
    std::string md;
    md += "| Configuration | Struct.OK | Prov.OK | Label Cons. | CF Acc. | Entail.Pass | "
          "Claim Prec. | Full Pass |\n";
    md += "|---|---|---|---|---|---|---|---|\n";
    char buf[32];
    auto cell = [&](const MetricMean& m) {
        if (m.count == 0) return std::string("-");
        std::snprintf(buf, sizeof(buf), "%.2f", m.mean);
        return std::string(buf);
    };
    for (const auto& r : reports) {
        md += "| " + r.config + " | " + cell(r.struct_ok) + " | " + cell(r.prov_ok) + " | " +
              cell(r.label_consistent) + " | " + cell(r.cf_direction_ok) + " | " +
              cell(r.entail_pass_rate) + " | " + cell(r.claim_precision) + " | " +
              cell(r.full_pass) + " |\n";
    }
    return md;
}

double mcnemar_test(std::int64_t b, std::int64_t c) {
    if (b < 0 || c < 0) throw std::invalid_argument("discordant counts must be non-negative");
    const std::int64_t n = b + c;
    if (n == 0) return 1.0;
    if (n < 25) {
        // exact two-sided binomial on min(b, c) under p = 1/2
        const std::int64_t k = std::min(b, c);
        long double tail = 0.0L;
        long double coeff = 1.0L;  // C(n, 0)
        for (std::int64_t i = 0; i <= k; ++i) {
            if (i > 0) coeff = coeff * static_cast<long double>(n - i + 1) / static_cast<long double>(i);
            tail += coeff;
        }
        long double p = 2.0L * tail * std::pow(0.5L, static_cast<long double>(n));
        return static_cast<double>(std::min(1.0L, p));
    }
    const double diff = std::abs(static_cast<double>(b - c)) - 1.0;
    const double chi2 = diff * diff / static_cast<double>(n);
    // chi-square(1) upper tail
    return std::erfc(std::sqrt(chi2 / 2.0));
}

std::optional<RunPreset> preset_by_name(const std::string& name) {
    for (const auto& preset : all_presets()) {
        if (preset.name == name) return preset;
    }
    return std::nullopt;
}

std::vector<RunPreset> all_presets() {
    return {
        {"full", true, true, true, true},
        {"llm_only", false, false, false, false},
        {"episodic_only", true, false, false, false},
        {"episodic_kg", true, true, false, false},
        {"no_provenance", true, true, false, true},
        {"no_simulator", true, true, true, false},
        {"no_kg", true, false, true, true},
        {"no_episodic", false, true, true, true},
    };
}

RunResult run_config(const std::vector<QAInstance>& corpus, const EpisodicStore& store,
                     const KnowledgeGraph& kg, const RiskModel* model, AnswerBackend& backend,
                     const RunPreset& preset, const GatePolicy& gate_policy,
                     IncidentLog* incident_log) {
    (void)model;
    RunResult result;
    LexicalEntailmentJudge judge;

    PromptOptions options;
    options.include_episodic = preset.include_episodic;
    options.include_kg = preset.include_kg;
    options.enforce_contract = preset.provenance_enforcement;
    options.include_simulator = preset.simulator_access;

    for (const auto& qa : corpus) {
        auto fact = store.get_fact(qa.fact_id);
        ParsedAnswer parsed;
        std::string raw;
        std::vector<std::string> evidence;
        if (!fact) {
            parsed.failure = "fact missing from store";
        } else {
            Prompt prompt = build_prompt(*fact, qa, options);
            evidence.push_back(prompt.user_text);
            try {
                raw = backend.answer(prompt, qa);
                parsed = parse_answer(raw);
            } catch (const std::exception& e) {
                parsed = ParsedAnswer{};
                parsed.failure = std::string("backend error: ") + e.what();
            }
        }
        result.answers.push_back(raw);

        VerifierReport report = verify(parsed, qa, store, kg);
        gate(report, parsed, gate_policy, incident_log);
        result.verifier_reports.push_back(report);
        result.records.push_back(score_instance(parsed, qa, report, fact ? &*fact : nullptr, kg,
                                                judge, evidence));
    }
    result.report = aggregate(preset.name, result.records);
    return result;
}

}  // namespace opsqa
