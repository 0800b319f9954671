#pragma once
// FMEA knowledge graph: typed entities plus predicate-labeled relations,
// loaded from line-delimited JSON. Immutable after load; safe for concurrent
// readers.

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace opsqa {

enum class EntityKind {
    asset_category,
    asset_class,
    component,
    failure_mode,
    sensor,
    action,
};

const char* to_string(EntityKind kind);
std::optional<EntityKind> entity_kind_from_string(const std::string& text);

struct KgEntity {
    std::string id;
    EntityKind kind = EntityKind::component;
    std::string name;
    std::map<std::string, std::string> attributes;
};

// Known predicates carry entity-id objects except `description`; anything
// else is preserved verbatim as an "other" predicate with a literal object.
enum class Predicate {
    affects,
    component_of,
    indicated_by,
    mitigated_by,
    description,
    involves,
    other,
};

const char* to_string(Predicate p);

struct KgRelation {
    std::string subject;
    Predicate predicate = Predicate::other;
    std::string predicate_text;  // original token; meaningful for `other`
    std::string object;
};

// True when the relation's object must resolve to an entity id.
bool predicate_object_is_id(const KgRelation& rel);

enum class Severity { low, medium, high, very_high };

const char* to_string(Severity s);
std::optional<Severity> severity_from_string(const std::string& text);

struct FailureProfile {
    std::string failure_label;
    std::string display_name;
    std::string description;
    std::string equipment_category;
    std::vector<std::string> associated_sensors;          // sorted by sensor name
    std::map<std::string, std::string> typical_indicators;  // feature -> expectation
    std::vector<std::string> recommended_actions;
    Severity severity = Severity::medium;
};

struct AssetProfile {
    std::string asset_name;
    std::string equipment_category;
    std::string equipment_class_type;
    std::vector<std::string> unit_subunit;
};

struct ValidationReport {
    std::size_t entity_count = 0;
    std::size_t relation_count = 0;
    std::vector<std::string> dangling;            // "subject -pred-> object" strings
    std::vector<std::string> duplicate_ids;
    std::vector<std::string> modes_without_sensors;
    std::vector<std::string> cycle_warnings;      // component_of cycles

    bool clean() const {
        return dangling.empty() && duplicate_ids.empty() && cycle_warnings.empty();
    }
};

class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    KnowledgeGraph(std::vector<KgEntity> entities, std::vector<KgRelation> relations);

    const std::vector<KgEntity>& entities() const { return entities_; }
    const std::vector<KgRelation>& relations() const { return relations_; }

    const KgEntity* entity(const std::string& id) const;

    // Case-folds, trims, and resolves display names / alias edges to the
    // canonical failure label. Unknown labels come back folded. Idempotent.
    std::string normalize_label(const std::string& label) const;

    // Profile whose failure_label or display name matches the normalized
    // label; `asset_name`, when provided and known, narrows candidates to the
    // asset's equipment category.
    std::optional<FailureProfile> failure_profile(const std::string& label,
                                                  const std::string& asset_name = {}) const;

    std::optional<AssetProfile> asset_profile(const std::string& asset_name) const;

    // Description text for a sensor entity with the given display name.
    std::optional<std::string> sensor_description(const std::string& sensor_name) const;

    ValidationReport validate() const;

    void save(const std::string& path) const;

private:
    void rebuild_indexes();

    std::vector<KgEntity> entities_;
    std::vector<KgRelation> relations_;
    std::unordered_map<std::string, std::size_t> by_id_;
    // folded label -> canonical failure label (smallest canonical wins ties)
    std::unordered_map<std::string, std::string> synonyms_;
    std::unordered_map<std::string, FailureProfile> profiles_;  // by failure label
};

// Strict load: rejects duplicate ids, unknown kinds, and relations whose
// endpoints do not resolve, all with a line locator.
KnowledgeGraph load_kg(const std::string& path);

std::string fold_label(const std::string& label);

}  // namespace opsqa
