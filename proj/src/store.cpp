#include "opsqa/store.hpp"

#include <sqlite3.h>

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace opsqa {

namespace {

class Stmt {
public:
    Stmt(sqlite3* db, const char* sql) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
            throw std::runtime_error(std::string("sqlite prepare failed: ") + sqlite3_errmsg(db));
        }
    }
    ~Stmt() { sqlite3_finalize(stmt_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    sqlite3_stmt* get() { return stmt_; }

    void bind(int idx, const std::string& text) {
        sqlite3_bind_text(stmt_, idx, text.c_str(), -1, SQLITE_TRANSIENT);
    }
    void bind(int idx, double v) { sqlite3_bind_double(stmt_, idx, v); }
    void bind(int idx, std::int64_t v) { sqlite3_bind_int64(stmt_, idx, v); }
    void bind_null(int idx) { sqlite3_bind_null(stmt_, idx); }

    bool step() {
        int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw std::runtime_error("sqlite step failed (rc=" + std::to_string(rc) + ")");
    }

    std::string column_text(int idx) {
        const unsigned char* p = sqlite3_column_text(stmt_, idx);
        return p ? reinterpret_cast<const char*>(p) : "";
    }

private:
    sqlite3_stmt* stmt_ = nullptr;
};

std::string now_iso() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

const char* op_sql(ThresholdOp op) {
    switch (op) {
        case ThresholdOp::lt: return "<";
        case ThresholdOp::le: return "<=";
        case ThresholdOp::eq: return "=";
        case ThresholdOp::ge: return ">=";
        case ThresholdOp::gt: return ">";
    }
    return "=";
}

}  // namespace

ThresholdOp threshold_op_from_token(const std::string& token) {
    if (token == "<") return ThresholdOp::lt;
    if (token == "<=") return ThresholdOp::le;
    if (token == "=" || token == "==") return ThresholdOp::eq;
    if (token == ">=") return ThresholdOp::ge;
    if (token == ">") return ThresholdOp::gt;
    throw std::invalid_argument("unknown threshold operator '" + token + "'");
}

EpisodicStore::EpisodicStore(const std::string& path) {
    if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        throw std::runtime_error("cannot open store '" + path + "': " + msg);
    }
    exec("PRAGMA journal_mode=MEMORY");
    exec("PRAGMA synchronous=OFF");
    exec(
        "CREATE TABLE IF NOT EXISTS facts ("
        " fact_id TEXT PRIMARY KEY, dataset TEXT, source_file TEXT, asset_id TEXT,"
        " row_index INTEGER, label TEXT, start_time TEXT, end_time TEXT,"
        " fact_json TEXT NOT NULL, ingest_time TEXT)");
    exec(
        "CREATE TABLE IF NOT EXISTS features ("
        " fact_id TEXT NOT NULL, feature_name TEXT NOT NULL,"
        " feature_value REAL, feature_text TEXT,"
        " PRIMARY KEY (fact_id, feature_name))");
    exec("CREATE INDEX IF NOT EXISTS idx_features_name ON features(feature_name, feature_value)");
    exec("CREATE INDEX IF NOT EXISTS idx_facts_asset ON facts(asset_id)");
    exec("CREATE INDEX IF NOT EXISTS idx_facts_label ON facts(label)");
}

EpisodicStore::~EpisodicStore() { sqlite3_close(db_); }

void EpisodicStore::exec(const std::string& sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown sqlite error";
        sqlite3_free(err);
        throw std::runtime_error("sqlite exec failed: " + msg);
    }
}

std::int64_t EpisodicStore::upsert_fact(const EpisodeFact& fact, bool overwrite) {
    if (!overwrite) {
        Stmt probe(db_, "SELECT 1 FROM facts WHERE fact_id=?1");
        probe.bind(1, fact.fact_id);
        if (probe.step()) return 0;
    }
    {
        Stmt del(db_, "DELETE FROM features WHERE fact_id=?1");
        del.bind(1, fact.fact_id);
        del.step();
    }
    {
        Stmt ins(db_,
                 "INSERT OR REPLACE INTO facts (fact_id, dataset, source_file, asset_id,"
                 " row_index, label, start_time, end_time, fact_json, ingest_time)"
                 " VALUES (?1,?2,?3,?4,?5,?6,?7,?8,?9,?10)");
        ins.bind(1, fact.fact_id);
        ins.bind(2, fact.dataset);
        ins.bind(3, fact.source_file);
        ins.bind(4, fact.asset_id);
        ins.bind(5, fact.row_index);
        ins.bind(6, fact.label);
        ins.bind(7, format_timestamp(fact.start_time));
        ins.bind(8, format_timestamp(fact.end_time));
        ins.bind(9, fact_to_json(fact).dump());
        ins.bind(10, now_iso());
        ins.step();
    }
    for (const auto& f : fact.features) {
        Stmt ins(db_,
                 "INSERT OR REPLACE INTO features (fact_id, feature_name, feature_value,"
                 " feature_text) VALUES (?1,?2,?3,?4)");
        ins.bind(1, fact.fact_id);
        ins.bind(2, f.name);
        if (f.value) {
            ins.bind(3, *f.value);
            ins.bind_null(4);
        } else if (f.text) {
            ins.bind_null(3);
            ins.bind(4, *f.text);
        } else {
            ins.bind_null(3);
            ins.bind_null(4);
        }
        ins.step();
    }
    return 1;
}

IngestReport EpisodicStore::ingest_jsonl(const std::string& path, bool overwrite) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open fact file '" + path + "'");

    IngestReport report;
    exec("BEGIN");
    try {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            EpisodeFact fact;
            try {
                auto j = nlohmann::json::parse(line);
                fact = fact_from_json(j);
                if (fact.fact_id.empty()) throw std::runtime_error("missing fact_id");
            } catch (const std::exception& e) {
                ++report.skipped;
                report.errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
                continue;
            }
            upsert_fact(fact, overwrite);
            ++report.ingested;
        }
        exec("COMMIT");
    } catch (...) {
        exec("ROLLBACK");
        throw;
    }
    return report;
}

std::optional<EpisodeFact> EpisodicStore::get_fact(const std::string& fact_id) const {
    Stmt q(db_, "SELECT fact_json FROM facts WHERE fact_id=?1");
    q.bind(1, fact_id);
    if (!q.step()) return std::nullopt;
    return fact_from_json(nlohmann::json::parse(q.column_text(0)));
}

std::map<std::string, FeatureCell> EpisodicStore::get_features(const std::string& fact_id) const {
    Stmt q(db_,
           "SELECT feature_name, feature_value, feature_text FROM features"
           " WHERE fact_id=?1 ORDER BY feature_name");
    q.bind(1, fact_id);
    std::map<std::string, FeatureCell> out;
    while (q.step()) {
        std::string name = q.column_text(0);
        if (sqlite3_column_type(q.get(), 1) != SQLITE_NULL) {
            out[name] = sqlite3_column_double(q.get(), 1);
        } else if (sqlite3_column_type(q.get(), 2) != SQLITE_NULL) {
            out[name] = q.column_text(2);
        } else {
            out[name] = std::monostate{};
        }
    }
    return out;
}

std::vector<std::string> EpisodicStore::search_by_feature_threshold(
    const std::string& feature_name, ThresholdOp op, double threshold) const {
    std::string sql =
        "SELECT fact_id FROM features WHERE feature_name=?1 AND feature_value IS NOT NULL"
        " AND feature_value " +
        std::string(op_sql(op)) + " ?2 ORDER BY fact_id";
    Stmt q(db_, sql.c_str());
    q.bind(1, feature_name);
    q.bind(2, threshold);
    std::vector<std::string> out;
    while (q.step()) out.push_back(q.column_text(0));
    return out;
}

std::vector<std::string> EpisodicStore::search_by_feature_threshold(
    const std::string& feature_name, const std::string& op_token, double threshold) const {
    return search_by_feature_threshold(feature_name, threshold_op_from_token(op_token), threshold);
}

std::vector<std::string> EpisodicStore::query_by_time_range(const std::string& asset_id,
                                                            Timestamp start, Timestamp end) const {
    if (start > end) throw std::invalid_argument("inverted time range");
    // Fixed-width timestamp strings compare chronologically.
    Stmt q(db_,
           "SELECT fact_id FROM facts WHERE asset_id=?1 AND start_time<=?2 AND end_time>=?3"
           " ORDER BY fact_id");
    q.bind(1, asset_id);
    q.bind(2, format_timestamp(end));
    q.bind(3, format_timestamp(start));
    std::vector<std::string> out;
    while (q.step()) out.push_back(q.column_text(0));
    return out;
}

std::vector<std::string> EpisodicStore::query_by_asset(const std::string& asset_id,
                                                       std::int64_t limit) const {
    if (limit <= 0) throw std::invalid_argument("limit must be positive");
    Stmt q(db_, "SELECT fact_id FROM facts WHERE asset_id=?1 ORDER BY fact_id LIMIT ?2");
    q.bind(1, asset_id);
    q.bind(2, limit);
    std::vector<std::string> out;
    while (q.step()) out.push_back(q.column_text(0));
    return out;
}

std::vector<std::string> EpisodicStore::query_by_label(const std::string& label,
                                                       std::int64_t limit) const {
    if (limit <= 0) throw std::invalid_argument("limit must be positive");
    Stmt q(db_, "SELECT fact_id FROM facts WHERE label=?1 ORDER BY fact_id LIMIT ?2");
    q.bind(1, label);
    q.bind(2, limit);
    std::vector<std::string> out;
    while (q.step()) out.push_back(q.column_text(0));
    return out;
}

std::vector<std::string> EpisodicStore::list_assets() const {
    Stmt q(db_, "SELECT DISTINCT asset_id FROM facts ORDER BY asset_id");
    std::vector<std::string> out;
    while (q.step()) out.push_back(q.column_text(0));
    return out;
}

std::vector<std::string> EpisodicStore::list_fact_ids() const {
    Stmt q(db_, "SELECT fact_id FROM facts ORDER BY fact_id");
    std::vector<std::string> out;
    while (q.step()) out.push_back(q.column_text(0));
    return out;
}

std::int64_t EpisodicStore::fact_count() const {
    Stmt q(db_, "SELECT COUNT(*) FROM facts");
    q.step();
    return sqlite3_column_int64(q.get(), 0);
}

std::int64_t EpisodicStore::feature_row_count() const {
    Stmt q(db_, "SELECT COUNT(*) FROM features");
    q.step();
    return sqlite3_column_int64(q.get(), 0);
}

std::int64_t EpisodicStore::feature_row_count(const std::string& fact_id) const {
    Stmt q(db_, "SELECT COUNT(*) FROM features WHERE fact_id=?1");
    q.bind(1, fact_id);
    q.step();
    return sqlite3_column_int64(q.get(), 0);
}

void EpisodicStore::export_features_csv(const std::string& path) const {
    std::set<std::string> names;
    {
        Stmt q(db_, "SELECT DISTINCT feature_name FROM features");
        while (q.step()) names.insert(q.column_text(0));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");

    out << "fact_id,label,asset_id";
    for (const auto& n : names) out << "," << n;
    out << "\n";

    Stmt q(db_, "SELECT fact_id, label, asset_id FROM facts ORDER BY fact_id");
    while (q.step()) {
        std::string fact_id = q.column_text(0);
        out << fact_id << "," << q.column_text(1) << "," << q.column_text(2);
        auto cells = get_features(fact_id);
        for (const auto& n : names) {
            out << ",";
            auto it = cells.find(n);
            if (it == cells.end()) continue;
            if (std::holds_alternative<double>(it->second)) {
                char buf[40];
                std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(it->second));
                out << buf;
            } else if (std::holds_alternative<std::string>(it->second)) {
                out << std::get<std::string>(it->second);
            }
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace opsqa
