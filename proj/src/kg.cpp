#include "opsqa/kg.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "opsqa/csv.hpp"

namespace opsqa {

namespace {

const std::pair<const char*, EntityKind> kKinds[] = {
    {"asset_category", EntityKind::asset_category},
    {"asset_class", EntityKind::asset_class},
    {"component", EntityKind::component},
    {"failure_mode", EntityKind::failure_mode},
    {"sensor", EntityKind::sensor},
    {"action", EntityKind::action},
};

const std::pair<const char*, Predicate> kPredicates[] = {
    {"affects", Predicate::affects},
    {"component_of", Predicate::component_of},
    {"indicated_by", Predicate::indicated_by},
    {"mitigated_by", Predicate::mitigated_by},
    {"description", Predicate::description},
    {"involves", Predicate::involves},
};

const std::pair<const char*, Severity> kSeverities[] = {
    {"low", Severity::low},
    {"medium", Severity::medium},
    {"high", Severity::high},
    {"very_high", Severity::very_high},
};

std::vector<std::string> split_csv_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

const char* to_string(EntityKind kind) {
    for (const auto& [name, k] : kKinds)
        if (k == kind) return name;
    return "component";
}

std::optional<EntityKind> entity_kind_from_string(const std::string& text) {
    for (const auto& [name, k] : kKinds)
        if (text == name) return k;
    return std::nullopt;
}

const char* to_string(Predicate p) {
    for (const auto& [name, pred] : kPredicates)
        if (pred == p) return name;
    return "other";
}

bool predicate_object_is_id(const KgRelation& rel) {
    switch (rel.predicate) {
        case Predicate::affects:
        case Predicate::component_of:
        case Predicate::indicated_by:
        case Predicate::mitigated_by:
        case Predicate::involves:
            return true;
        default:
            return false;
    }
}

const char* to_string(Severity s) {
    for (const auto& [name, sev] : kSeverities)
        if (sev == s) return name;
    return "medium";
}

std::optional<Severity> severity_from_string(const std::string& text) {
    for (const auto& [name, sev] : kSeverities)
        if (text == name) return sev;
    return std::nullopt;
}

std::string fold_label(const std::string& label) {
    std::size_t begin = 0, end = label.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(label[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(label[end - 1]))) --end;
    std::string out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(label[i]))));
    }
    return out;
}

KnowledgeGraph::KnowledgeGraph(std::vector<KgEntity> entities,
                               std::vector<KgRelation> relations)
    : entities_(std::move(entities)), relations_(std::move(relations)) {
    rebuild_indexes();
}

const KgEntity* KnowledgeGraph::entity(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &entities_[it->second];
}

void KnowledgeGraph::rebuild_indexes() {
    // Canonical order keeps the graph independent of record order in the file.
    std::sort(entities_.begin(), entities_.end(),
              [](const KgEntity& a, const KgEntity& b) { return a.id < b.id; });
    std::sort(relations_.begin(), relations_.end(), [](const KgRelation& a, const KgRelation& b) {
        return std::tie(a.subject, a.predicate_text, a.object) <
               std::tie(b.subject, b.predicate_text, b.object);
    });

    by_id_.clear();
    for (std::size_t i = 0; i < entities_.size(); ++i) by_id_[entities_[i].id] = i;

    profiles_.clear();
    for (const auto& e : entities_) {
        if (e.kind != EntityKind::failure_mode) continue;
        FailureProfile p;
        p.failure_label = e.id;
        p.display_name = e.name;
        if (auto it = e.attributes.find("description"); it != e.attributes.end())
            p.description = it->second;
        if (auto it = e.attributes.find("equipment_category"); it != e.attributes.end())
            p.equipment_category = it->second;
        if (auto it = e.attributes.find("severity"); it != e.attributes.end())
            if (auto sev = severity_from_string(it->second)) p.severity = *sev;
        for (const auto& [key, value] : e.attributes) {
            if (key.rfind("indicator:", 0) == 0) p.typical_indicators[key.substr(10)] = value;
        }
        profiles_[e.id] = std::move(p);
    }
    for (const auto& r : relations_) {
        auto it = profiles_.find(r.subject);
        if (it == profiles_.end()) continue;
        if (r.predicate == Predicate::indicated_by) {
            if (const KgEntity* s = entity(r.object)) it->second.associated_sensors.push_back(s->name);
        } else if (r.predicate == Predicate::mitigated_by) {
            if (const KgEntity* a = entity(r.object)) it->second.recommended_actions.push_back(a->name);
        }
    }
    for (auto& [label, p] : profiles_) {
        std::sort(p.associated_sensors.begin(), p.associated_sensors.end());
        std::sort(p.recommended_actions.begin(), p.recommended_actions.end());
    }

    // Synonyms: canonical ids, display names, and explicit alias edges.
    // Ties resolve to the lexicographically smallest canonical label.
    synonyms_.clear();
    auto put = [&](const std::string& key, const std::string& canonical) {
        if (key.empty()) return;
        auto [it, inserted] = synonyms_.emplace(key, canonical);
        if (!inserted && canonical < it->second) it->second = canonical;
    };
    for (const auto& e : entities_) {
        if (e.kind != EntityKind::failure_mode) continue;
        put(fold_label(e.id), e.id);
        put(fold_label(e.name), e.id);
    }
    for (const auto& r : relations_) {
        if (r.predicate == Predicate::other && r.predicate_text == "alias" &&
            profiles_.count(r.subject)) {
            put(fold_label(r.object), r.subject);
        }
    }
}

std::string KnowledgeGraph::normalize_label(const std::string& label) const {
    std::string folded = fold_label(label);
    auto it = synonyms_.find(folded);
    return it == synonyms_.end() ? folded : it->second;
}

std::optional<FailureProfile> KnowledgeGraph::failure_profile(const std::string& label,
                                                              const std::string& asset_name) const {
    std::string canonical = normalize_label(label);
    auto it = profiles_.find(canonical);
    if (it == profiles_.end()) return std::nullopt;
    if (!asset_name.empty()) {
        if (auto asset = asset_profile(asset_name)) {
            if (!asset->equipment_category.empty() && !it->second.equipment_category.empty() &&
                asset->equipment_category != it->second.equipment_category) {
                return std::nullopt;
            }
        }
    }
    return it->second;
}

std::optional<AssetProfile> KnowledgeGraph::asset_profile(const std::string& asset_name) const {
    std::string folded = fold_label(asset_name);
    for (const auto& e : entities_) {
        if (e.kind != EntityKind::asset_class) continue;
        if (fold_label(e.name) != folded && fold_label(e.id) != folded) continue;
        AssetProfile p;
        p.asset_name = e.name;
        if (auto it = e.attributes.find("equipment_category"); it != e.attributes.end())
            p.equipment_category = it->second;
        if (auto it = e.attributes.find("equipment_class_type"); it != e.attributes.end())
            p.equipment_class_type = it->second;
        if (auto it = e.attributes.find("unit_subunit"); it != e.attributes.end())
            p.unit_subunit = split_csv_list(it->second);
        return p;
    }
    return std::nullopt;
}

std::optional<std::string> KnowledgeGraph::sensor_description(const std::string& sensor_name) const {
    for (const auto& e : entities_) {
        if (e.kind == EntityKind::sensor && e.name == sensor_name) {
            auto it = e.attributes.find("description");
            if (it != e.attributes.end()) return it->second;
            return e.name;
        }
    }
    return std::nullopt;
}

ValidationReport KnowledgeGraph::validate() const {
    ValidationReport report;
    report.entity_count = entities_.size();
    report.relation_count = relations_.size();

    std::set<std::string> seen;
    for (const auto& e : entities_) {
        if (!seen.insert(e.id).second) report.duplicate_ids.push_back(e.id);
    }
    for (const auto& r : relations_) {
        bool bad = by_id_.find(r.subject) == by_id_.end() ||
                   (predicate_object_is_id(r) && by_id_.find(r.object) == by_id_.end());
        if (bad) {
            report.dangling.push_back(r.subject + " -" + r.predicate_text + "-> " + r.object);
        }
    }
    for (const auto& e : entities_) {
        if (e.kind != EntityKind::failure_mode) continue;
        auto it = profiles_.find(e.id);
        if (it != profiles_.end() && it->second.associated_sensors.empty())
            report.modes_without_sensors.push_back(e.id);
    }

    // Cycle scan over component_of edges (self-loops included).
    std::unordered_map<std::string, std::vector<std::string>> up;
    for (const auto& r : relations_) {
        if (r.predicate == Predicate::component_of) up[r.subject].push_back(r.object);
    }
    std::unordered_map<std::string, int> state;  // 0 unseen, 1 in stack, 2 done
    std::vector<std::string> order;
    for (const auto& [node, _] : up) order.push_back(node);
    std::sort(order.begin(), order.end());
    std::function<bool(const std::string&)> visit = [&](const std::string& node) -> bool {
        int& st = state[node];
        if (st == 1) return true;
        if (st == 2) return false;
        st = 1;
        bool cyclic = false;
        auto it = up.find(node);
        if (it != up.end()) {
            for (const auto& parent : it->second) {
                if (visit(parent)) {
                    cyclic = true;
                    break;
                }
            }
        }
        st = 2;
        if (cyclic) report.cycle_warnings.push_back("component_of cycle through " + node);
        return cyclic;
    };
    for (const auto& node : order) {
        if (state[node] == 0) visit(node);
    }
    return report;
}

void KnowledgeGraph::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path, 0, "cannot open for writing");
    for (const auto& e : entities_) {
        nlohmann::ordered_json j;
        j["record"] = "entity";
        j["id"] = e.id;
        j["kind"] = to_string(e.kind);
        j["name"] = e.name;
        j["attributes"] = e.attributes;
        out << j.dump() << "\n";
    }
    for (const auto& r : relations_) {
        nlohmann::ordered_json j;
        j["record"] = "relation";
        j["subject"] = r.subject;
        j["predicate"] = r.predicate_text;
        j["object"] = r.object;
        out << j.dump() << "\n";
    }
}

KnowledgeGraph load_kg(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, 0, "cannot open file");

    std::vector<KgEntity> entities;
    std::vector<KgRelation> relations;
    std::set<std::string> ids;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path, line_no, std::string("invalid JSON: ") + e.what());
        }
        const std::string record = j.value("record", "");
        if (record == "entity") {
            KgEntity e;
            e.id = j.value("id", "");
            if (e.id.empty()) throw ParseError(path, line_no, "entity with empty id");
            if (!ids.insert(e.id).second)
                throw ParseError(path, line_no, "duplicate entity id '" + e.id + "'");
            const std::string kind = j.value("kind", "");
            auto k = entity_kind_from_string(kind);
            if (!k) throw ParseError(path, line_no, "unknown kind '" + kind + "'");
            e.kind = *k;
            e.name = j.value("name", "");
            if (j.contains("attributes")) {
                for (auto it = j["attributes"].begin(); it != j["attributes"].end(); ++it) {
                    e.attributes[it.key()] =
                        it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
                }
            }
            entities.push_back(std::move(e));
        } else if (record == "relation") {
            KgRelation r;
            r.subject = j.value("subject", "");
            r.predicate_text = j.value("predicate", "");
            r.object = j.value("object", "");
            r.predicate = Predicate::other;
            for (const auto& [name, pred] : kPredicates) {
                if (r.predicate_text == name) {
                    r.predicate = pred;
                    break;
                }
            }
            relations.push_back(std::move(r));
        } else {
            throw ParseError(path, line_no, "record must be 'entity' or 'relation'");
        }
    }

    // Endpoint resolution; relations may precede their entities in the file.
    for (const auto& r : relations) {
        if (!ids.count(r.subject))
            throw ParseError(path, 0, "relation subject '" + r.subject + "' does not resolve");
        KgRelation probe = r;
        if (predicate_object_is_id(probe) && !ids.count(r.object))
            throw ParseError(path, 0, "relation object '" + r.object + "' does not resolve");
    }

    return KnowledgeGraph(std::move(entities), std::move(relations));
}

}  // namespace opsqa
