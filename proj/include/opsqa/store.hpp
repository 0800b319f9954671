#pragma once
// Single-file episodic store with the two-table schema: `facts` keeps the
// full serialized fact, `features` explodes the feature vector for numeric
// search. Single writer, many readers; per-file ingest is transactional.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "opsqa/facts.hpp"

struct sqlite3;

namespace opsqa {

struct IngestReport {
    std::int64_t ingested = 0;
    std::int64_t skipped = 0;
    std::vector<std::string> errors;  // "line N: message"
};

enum class ThresholdOp { lt, le, eq, ge, gt };

// Accepts "<", "<=", "=", ">=", ">"; throws std::invalid_argument otherwise.
ThresholdOp threshold_op_from_token(const std::string& token);

using FeatureCell = std::variant<std::monostate, double, std::string>;

class EpisodicStore {
public:
    explicit EpisodicStore(const std::string& path);
    ~EpisodicStore();

    EpisodicStore(const EpisodicStore&) = delete;
    EpisodicStore& operator=(const EpisodicStore&) = delete;

    // Upserts facts by fact_id (replace when `overwrite`, keep-first
    // otherwise). Malformed lines are skipped and reported; I/O failures
    // abort and roll the whole file back.
    IngestReport ingest_jsonl(const std::string& path, bool overwrite = true);

    std::int64_t upsert_fact(const EpisodeFact& fact, bool overwrite = true);

    std::optional<EpisodeFact> get_fact(const std::string& fact_id) const;

    // name -> numeric value or text fallback (missing features excluded)
    std::map<std::string, FeatureCell> get_features(const std::string& fact_id) const;

    // Facts whose named numeric feature satisfies the comparison; null and
    // text cells never match. Sorted by fact_id.
    std::vector<std::string> search_by_feature_threshold(const std::string& feature_name,
                                                         ThresholdOp op, double threshold) const;
    std::vector<std::string> search_by_feature_threshold(const std::string& feature_name,
                                                         const std::string& op_token,
                                                         double threshold) const;

    // Facts for the asset whose [start_time, end_time] intersects
    // [start, end]; throws std::invalid_argument on an inverted range.
    std::vector<std::string> query_by_time_range(const std::string& asset_id, Timestamp start,
                                                 Timestamp end) const;

    std::vector<std::string> query_by_asset(const std::string& asset_id,
                                            std::int64_t limit) const;
    std::vector<std::string> query_by_label(const std::string& label, std::int64_t limit) const;
    std::vector<std::string> list_assets() const;
    std::vector<std::string> list_fact_ids() const;

    std::int64_t fact_count() const;
    std::int64_t feature_row_count() const;
    std::int64_t feature_row_count(const std::string& fact_id) const;

    // One row per fact (fact_id ascending); columns: fact_id, label,
    // asset_id, then the sorted union of feature names.
    void export_features_csv(const std::string& path) const;

private:
    void exec(const std::string& sql);

    sqlite3* db_ = nullptr;
};

}  // namespace opsqa
