#include "matef/store.hpp"

#include <fcntl.h>
#include <sqlite3.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstring>
#include <limits>
#include <utility>

#include "matef/csv.hpp"
#include "matef/errors.hpp"
#include "matef/util.hpp"

namespace matef {

namespace {

[[noreturn]] void fail(sqlite3* db, const std::string& what) {
    throw StoreError(what + ": " + (db ? sqlite3_errmsg(db) : "no database handle"));
}

/// Minimal RAII prepared-statement wrapper.
class Stmt {
public:
    Stmt(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
            fail(db, std::string("prepare failed for: ") + sql);
    }
    ~Stmt() { sqlite3_finalize(stmt_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    Stmt& bind(int idx, const std::string& v) {
        check(sqlite3_bind_text(stmt_, idx, v.c_str(), static_cast<int>(v.size()),
                                SQLITE_TRANSIENT));
        return *this;
    }
    Stmt& bind(int idx, std::int64_t v) {
        check(sqlite3_bind_int64(stmt_, idx, v));
        return *this;
    }
    Stmt& bind_blob(int idx, std::span<const std::byte> v) {
        check(sqlite3_bind_blob64(stmt_, idx, v.data(), v.size(), SQLITE_TRANSIENT));
        return *this;
    }
    Stmt& bind(int idx, double v) {
        check(sqlite3_bind_double(stmt_, idx, v));
        return *this;
    }

    /// One step; true when a row is available.
    bool row() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        fail(db_, "step failed");
    }
    void exec() {
        if (row()) throw StoreError("statement unexpectedly returned rows");
    }

    std::string text(int col) const {
        const unsigned char* p = sqlite3_column_text(stmt_, col);
        return p ? reinterpret_cast<const char*>(p) : "";
    }
    std::int64_t i64(int col) const { return sqlite3_column_int64(stmt_, col); }
    double f64(int col) const {
        // sqlite stores NaN as NULL; map it back.
        if (sqlite3_column_type(stmt_, col) == SQLITE_NULL)
            return std::numeric_limits<double>::quiet_NaN();
        return sqlite3_column_double(stmt_, col);
    }
    std::vector<std::byte> blob(int col) const {
        const void* p = sqlite3_column_blob(stmt_, col);
        const int n = sqlite3_column_bytes(stmt_, col);
        const auto* b = static_cast<const std::byte*>(p);
        return n > 0 ? std::vector<std::byte>(b, b + n) : std::vector<std::byte>{};
    }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) fail(db_, "bind failed");
    }
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS samples(
  md5 TEXT PRIMARY KEY,
  sha256 TEXT NOT NULL,
  byte_size INTEGER NOT NULL,
  source_tag TEXT NOT NULL,
  ingested_at TEXT NOT NULL,
  content BLOB NOT NULL);
CREATE TABLE IF NOT EXISTS sample_tags(
  md5 TEXT NOT NULL REFERENCES samples(md5),
  tag TEXT NOT NULL,
  PRIMARY KEY(md5, tag));
CREATE INDEX IF NOT EXISTS idx_sample_tags_tag ON sample_tags(tag);
CREATE TABLE IF NOT EXISTS oracle_reports(
  md5 TEXT NOT NULL,
  source_id TEXT NOT NULL,
  received_at TEXT NOT NULL,
  fingerprint TEXT NOT NULL,
  PRIMARY KEY(md5, source_id));
CREATE TABLE IF NOT EXISTS oracle_labels(
  md5 TEXT NOT NULL,
  source_id TEXT NOT NULL,
  type TEXT NOT NULL,
  label TEXT NOT NULL,
  PRIMARY KEY(md5, source_id, type, label));
CREATE TABLE IF NOT EXISTS expected(
  md5 TEXT NOT NULL,
  source_id TEXT NOT NULL,
  type TEXT NOT NULL,
  count INTEGER NOT NULL,
  PRIMARY KEY(md5, source_id, type));
CREATE TABLE IF NOT EXISTS tests(
  test_id INTEGER PRIMARY KEY AUTOINCREMENT,
  tool_id TEXT NOT NULL,
  duration_s INTEGER NOT NULL,
  dataset_lineage TEXT NOT NULL,
  started_at TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS observations(
  test_id INTEGER NOT NULL REFERENCES tests(test_id),
  md5 TEXT NOT NULL,
  executed_ok INTEGER NOT NULL,
  log_ref TEXT NOT NULL,
  file_count INTEGER NOT NULL,
  mutex_count INTEGER NOT NULL,
  registry_count INTEGER NOT NULL,
  port_count INTEGER NOT NULL,
  rport_count INTEGER NOT NULL,
  PRIMARY KEY(test_id, md5));
CREATE TABLE IF NOT EXISTS groups(
  group_id INTEGER PRIMARY KEY AUTOINCREMENT,
  tool_id TEXT NOT NULL,
  duration_s INTEGER NOT NULL,
  guest_count INTEGER NOT NULL,
  stagger_s INTEGER NOT NULL,
  seed TEXT NOT NULL,
  run1 INTEGER NOT NULL REFERENCES tests(test_id),
  run2 INTEGER NOT NULL REFERENCES tests(test_id),
  run3 INTEGER NOT NULL REFERENCES tests(test_id),
  sample_hashes TEXT NOT NULL,
  created_at TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS datasets(
  dataset_id TEXT PRIMARY KEY,
  tool_id TEXT NOT NULL,
  duration_s INTEGER NOT NULL,
  combo TEXT NOT NULL,
  group_id INTEGER NOT NULL REFERENCES groups(group_id));
CREATE TABLE IF NOT EXISTS dataset_rows(
  dataset_id TEXT NOT NULL REFERENCES datasets(dataset_id),
  md5 TEXT NOT NULL,
  expected INTEGER NOT NULL,
  observed INTEGER NOT NULL,
  PRIMARY KEY(dataset_id, md5));
CREATE TABLE IF NOT EXISTS analysis_results(
  result_id INTEGER PRIMARY KEY AUTOINCREMENT,
  label TEXT NOT NULL,
  description TEXT NOT NULL,
  hypothesis TEXT NOT NULL,
  dataset_a TEXT NOT NULL,
  dataset_b TEXT NOT NULL,
  r REAL,
  z REAL,
  se REAL NOT NULL,
  t REAL NOT NULL,
  p REAL NOT NULL,
  n INTEGER NOT NULL,
  n_effective INTEGER NOT NULL,
  decision TEXT NOT NULL,
  alpha REAL NOT NULL,
  outlier_method TEXT NOT NULL,
  created_at TEXT NOT NULL);
)sql";

std::string type_key(ArtefactType t) { return to_lower(to_string(t)); }

}  // namespace

struct ArtefactStore::Impl {
    std::filesystem::path path;
    Mode mode = Mode::read_write;
    sqlite3* db = nullptr;
    int lock_fd = -1;
    int batch_depth = 0;

    void exec_sql(const char* sql) {
        char* err = nullptr;
        if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "unknown sqlite error";
            sqlite3_free(err);
            throw StoreError("sqlite exec failed: " + msg);
        }
    }

    ~Impl() {
        if (db) sqlite3_close(db);
        if (lock_fd >= 0) ::close(lock_fd);
    }
};

ArtefactStore::ArtefactStore(const std::filesystem::path& path, Mode mode)
    : impl_(std::make_unique<Impl>()) {
    impl_->path = path;
    impl_->mode = mode;

    if (mode == Mode::read_write) {
        // Single-writer contract: exclusive advisory lock next to the db file.
        const std::string lock_path = path.string() + ".lock";
        impl_->lock_fd = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
        if (impl_->lock_fd < 0)
            throw StoreError("cannot create writer lock " + lock_path + ": " +
                             std::strerror(errno));
        if (::flock(impl_->lock_fd, LOCK_EX | LOCK_NB) != 0) {
            ::close(impl_->lock_fd);
            impl_->lock_fd = -1;
            throw StoreError("another writer holds " + path.string() +
                             "; concurrent writers are refused");
        }
    }

    const int flags = mode == Mode::read_write
                          ? SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE
                          : SQLITE_OPEN_READONLY;
    if (sqlite3_open_v2(path.string().c_str(), &impl_->db, flags, nullptr) != SQLITE_OK) {
        const std::string msg = impl_->db ? sqlite3_errmsg(impl_->db) : "open failed";
        throw StoreError("cannot open store " + path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(impl_->db, 10000);

    // A garbage file opens lazily; probe now so corruption surfaces here.
    {
        sqlite3_stmt* stmt = nullptr;
        const int rc =
            sqlite3_prepare_v2(impl_->db, "PRAGMA quick_check", -1, &stmt, nullptr);
        if (rc != SQLITE_OK) {
            const std::string msg = sqlite3_errmsg(impl_->db);
            throw StoreError("store integrity check failed for " + path.string() + ": " + msg);
        }
        std::string verdict;
        if (sqlite3_step(stmt) == SQLITE_ROW)
            verdict = reinterpret_cast<const char*>(sqlite3_column_text(stmt, 0));
        sqlite3_finalize(stmt);
        if (verdict != "ok")
            throw StoreError("store integrity check failed for " + path.string() + ": " +
                             verdict);
    }

    impl_->exec_sql("PRAGMA foreign_keys = ON;");
    if (mode == Mode::read_write) impl_->exec_sql(kSchema);
}

ArtefactStore::~ArtefactStore() = default;
ArtefactStore::ArtefactStore(ArtefactStore&&) noexcept = default;
ArtefactStore& ArtefactStore::operator=(ArtefactStore&&) noexcept = default;

const std::filesystem::path& ArtefactStore::path() const { return impl_->path; }

void ArtefactStore::begin_batch() {
    if (impl_->batch_depth++ == 0) impl_->exec_sql("BEGIN IMMEDIATE;");
}

void ArtefactStore::commit_batch() {
    if (impl_->batch_depth <= 0) throw StoreError("commit_batch without begin_batch");
    if (--impl_->batch_depth == 0) impl_->exec_sql("COMMIT;");
}

// --- samples ---------------------------------------------------------------

bool ArtefactStore::insert_sample(const SampleRecord& rec, std::span<const std::byte> content) {
    {
        Stmt check(impl_->db, "SELECT 1 FROM samples WHERE md5 = ?1");
        check.bind(1, rec.md5);
        if (check.row()) return false;
    }
    begin_batch();
    try {
        Stmt ins(impl_->db,
                 "INSERT INTO samples(md5, sha256, byte_size, source_tag, ingested_at, content) "
                 "VALUES(?1, ?2, ?3, ?4, ?5, ?6)");
        ins.bind(1, rec.md5)
            .bind(2, rec.sha256)
            .bind(3, static_cast<std::int64_t>(rec.byte_size))
            .bind(4, rec.source_tag)
            .bind(5, rec.ingested_at);
        ins.bind_blob(6, content);
        ins.exec();
        for (const auto& tag : rec.capability_tags) {
            Stmt t(impl_->db, "INSERT INTO sample_tags(md5, tag) VALUES(?1, ?2)");
            t.bind(1, rec.md5).bind(2, tag);
            t.exec();
        }
    } catch (...) {
        impl_->exec_sql("ROLLBACK;");
        impl_->batch_depth = 0;
        throw;
    }
    commit_batch();
    return true;
}

std::optional<SampleRecord> ArtefactStore::find_sample(const std::string& md5) const {
    Stmt q(impl_->db,
           "SELECT sha256, byte_size, source_tag, ingested_at FROM samples WHERE md5 = ?1");
    q.bind(1, md5);
    if (!q.row()) return std::nullopt;
    SampleRecord rec;
    rec.md5 = md5;
    rec.sha256 = q.text(0);
    rec.byte_size = static_cast<std::uint64_t>(q.i64(1));
    rec.source_tag = q.text(2);
    rec.ingested_at = q.text(3);
    Stmt tq(impl_->db, "SELECT tag FROM sample_tags WHERE md5 = ?1");
    tq.bind(1, md5);
    while (tq.row()) rec.capability_tags.insert(tq.text(0));
    return rec;
}

std::vector<std::byte> ArtefactStore::sample_content(const std::string& md5) const {
    Stmt q(impl_->db, "SELECT content FROM samples WHERE md5 = ?1");
    q.bind(1, md5);
    if (!q.row()) throw StoreError("no sample with md5 " + md5);
    return q.blob(0);
}

std::vector<SampleRecord> ArtefactStore::list_samples() const {
    std::vector<SampleRecord> out;
    Stmt q(impl_->db,
           "SELECT md5, sha256, byte_size, source_tag, ingested_at FROM samples ORDER BY md5");
    while (q.row()) {
        SampleRecord rec;
        rec.md5 = q.text(0);
        rec.sha256 = q.text(1);
        rec.byte_size = static_cast<std::uint64_t>(q.i64(2));
        rec.source_tag = q.text(3);
        rec.ingested_at = q.text(4);
        out.push_back(std::move(rec));
    }
    for (auto& rec : out) {
        Stmt tq(impl_->db, "SELECT tag FROM sample_tags WHERE md5 = ?1");
        tq.bind(1, rec.md5);
        while (tq.row()) rec.capability_tags.insert(tq.text(0));
    }
    return out;
}

std::vector<std::string> ArtefactStore::hashes_with_tag(const std::string& tag) const {
    std::vector<std::string> out;
    Stmt q(impl_->db, "SELECT md5 FROM sample_tags WHERE tag = ?1 ORDER BY md5");
    q.bind(1, tag);
    while (q.row()) out.push_back(q.text(0));
    return out;
}

std::size_t ArtefactStore::sample_count() const {
    Stmt q(impl_->db, "SELECT COUNT(*) FROM samples");
    q.row();
    return static_cast<std::size_t>(q.i64(0));
}

// --- oracle ------------------------------------------------------------------

bool ArtefactStore::upsert_oracle_report(
    const std::string& md5, const std::string& source_id,
    const std::map<ArtefactType, std::set<std::string>>& labels, const std::string& fingerprint,
    const std::string& received_at) {
    {
        Stmt q(impl_->db,
               "SELECT fingerprint FROM oracle_reports WHERE md5 = ?1 AND source_id = ?2");
        q.bind(1, md5).bind(2, source_id);
        if (q.row() && q.text(0) == fingerprint) return false;  // identical document
    }
    begin_batch();
    try {
        {
            Stmt del(impl_->db, "DELETE FROM oracle_labels WHERE md5 = ?1 AND source_id = ?2");
            del.bind(1, md5).bind(2, source_id);
            del.exec();
        }
        {
            Stmt del(impl_->db, "DELETE FROM expected WHERE md5 = ?1 AND source_id = ?2");
            del.bind(1, md5).bind(2, source_id);
            del.exec();
        }
        {
            Stmt rep(impl_->db,
                     "INSERT INTO oracle_reports(md5, source_id, received_at, fingerprint) "
                     "VALUES(?1, ?2, ?3, ?4) "
                     "ON CONFLICT(md5, source_id) DO UPDATE SET received_at = ?3, "
                     "fingerprint = ?4");
            rep.bind(1, md5).bind(2, source_id).bind(3, received_at).bind(4, fingerprint);
            rep.exec();
        }
        for (ArtefactType t : kAllArtefactTypes) {
            const auto it = labels.find(t);
            const std::set<std::string> empty;
            const auto& set = it == labels.end() ? empty : it->second;
            for (const auto& label : set) {
                Stmt ins(impl_->db,
                         "INSERT INTO oracle_labels(md5, source_id, type, label) "
                         "VALUES(?1, ?2, ?3, ?4)");
                ins.bind(1, md5).bind(2, source_id).bind(3, type_key(t)).bind(4, label);
                ins.exec();
            }
            Stmt exp(impl_->db,
                     "INSERT INTO expected(md5, source_id, type, count) VALUES(?1, ?2, ?3, ?4)");
            exp.bind(1, md5)
                .bind(2, source_id)
                .bind(3, type_key(t))
                .bind(4, static_cast<std::int64_t>(set.size()));
            exp.exec();
        }
    } catch (...) {
        impl_->exec_sql("ROLLBACK;");
        impl_->batch_depth = 0;
        throw;
    }
    commit_batch();
    return true;
}

bool ArtefactStore::oracle_has(const std::string& md5, const std::string& source_id) const {
    Stmt q(impl_->db, "SELECT 1 FROM oracle_reports WHERE md5 = ?1 AND source_id = ?2");
    q.bind(1, md5).bind(2, source_id);
    return q.row();
}

std::optional<TypeCounts> ArtefactStore::expected_counts(const std::string& md5,
                                                         const std::string& source_id) const {
    if (!oracle_has(md5, source_id)) return std::nullopt;
    TypeCounts counts;
    Stmt q(impl_->db, "SELECT type, count FROM expected WHERE md5 = ?1 AND source_id = ?2");
    q.bind(1, md5).bind(2, source_id);
    while (q.row()) {
        const auto t = artefact_type_from(q.text(0));
        if (t) counts[*t] = q.i64(1);
    }
    return counts;
}

std::map<ArtefactType, std::set<std::string>> ArtefactStore::oracle_labels(
    const std::string& md5, const std::string& source_id) const {
    std::map<ArtefactType, std::set<std::string>> out;
    Stmt q(impl_->db,
           "SELECT type, label FROM oracle_labels WHERE md5 = ?1 AND source_id = ?2");
    q.bind(1, md5).bind(2, source_id);
    while (q.row()) {
        const auto t = artefact_type_from(q.text(0));
        if (t) out[*t].insert(q.text(1));
    }
    return out;
}

std::vector<std::string> ArtefactStore::oracle_sources() const {
    std::vector<std::string> out;
    Stmt q(impl_->db, "SELECT DISTINCT source_id FROM oracle_reports ORDER BY source_id");
    while (q.row()) out.push_back(q.text(0));
    return out;
}

std::size_t ArtefactStore::oracle_report_count() const {
    Stmt q(impl_->db, "SELECT COUNT(*) FROM oracle_reports");
    q.row();
    return static_cast<std::size_t>(q.i64(0));
}

// --- tests and observations ---------------------------------------------------

std::int64_t ArtefactStore::insert_test(const std::string& tool_id, std::int64_t duration_s,
                                        const std::string& dataset_lineage,
                                        const std::string& started_at) {
    Stmt ins(impl_->db,
             "INSERT INTO tests(tool_id, duration_s, dataset_lineage, started_at) "
             "VALUES(?1, ?2, ?3, ?4)");
    ins.bind(1, tool_id).bind(2, duration_s).bind(3, dataset_lineage).bind(4, started_at);
    ins.exec();
    return sqlite3_last_insert_rowid(impl_->db);
}

std::optional<TestRecord> ArtefactStore::find_test(std::int64_t test_id) const {
    Stmt q(impl_->db,
           "SELECT tool_id, duration_s, dataset_lineage, started_at FROM tests "
           "WHERE test_id = ?1");
    q.bind(1, test_id);
    if (!q.row()) return std::nullopt;
    TestRecord rec;
    rec.test_id = test_id;
    rec.tool_id = q.text(0);
    rec.duration_s = q.i64(1);
    rec.dataset_lineage = q.text(2);
    rec.started_at = q.text(3);
    return rec;
}

std::vector<TestRecord> ArtefactStore::list_tests() const {
    std::vector<TestRecord> out;
    Stmt q(impl_->db,
           "SELECT test_id, tool_id, duration_s, dataset_lineage, started_at FROM tests "
           "ORDER BY test_id");
    while (q.row()) {
        TestRecord rec;
        rec.test_id = q.i64(0);
        rec.tool_id = q.text(1);
        rec.duration_s = q.i64(2);
        rec.dataset_lineage = q.text(3);
        rec.started_at = q.text(4);
        out.push_back(std::move(rec));
    }
    return out;
}

void ArtefactStore::record_observation(const ObservationRecord& rec) {
    if (!find_test(rec.test_id))
        throw StoreError("record_observation: unknown test_id " + std::to_string(rec.test_id));
    if (!rec.executed_ok && rec.counts != TypeCounts{})
        throw StoreError("record_observation: failed execution must carry all-zero counts (" +
                         rec.md5 + ")");
    {
        Stmt q(impl_->db, "SELECT 1 FROM observations WHERE test_id = ?1 AND md5 = ?2");
        q.bind(1, rec.test_id).bind(2, rec.md5);
        if (q.row())
            throw StoreError("duplicate observation for test " + std::to_string(rec.test_id) +
                             ", md5 " + rec.md5);
    }
    Stmt ins(impl_->db,
             "INSERT INTO observations(test_id, md5, executed_ok, log_ref, file_count, "
             "mutex_count, registry_count, port_count, rport_count) "
             "VALUES(?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)");
    ins.bind(1, rec.test_id)
        .bind(2, rec.md5)
        .bind(3, static_cast<std::int64_t>(rec.executed_ok ? 1 : 0))
        .bind(4, rec.log_ref)
        .bind(5, rec.counts[ArtefactType::File])
        .bind(6, rec.counts[ArtefactType::Mutex])
        .bind(7, rec.counts[ArtefactType::Registry])
        .bind(8, rec.counts[ArtefactType::Port])
        .bind(9, rec.counts[ArtefactType::RPort]);
    ins.exec();
}

std::map<std::string, ObservationRecord> ArtefactStore::observations_for(
    std::int64_t test_id) const {
    if (!find_test(test_id))
        throw StoreError("observations_for: unknown test_id " + std::to_string(test_id));
    std::map<std::string, ObservationRecord> out;
    Stmt q(impl_->db,
           "SELECT md5, executed_ok, log_ref, file_count, mutex_count, registry_count, "
           "port_count, rport_count FROM observations WHERE test_id = ?1");
    q.bind(1, test_id);
    while (q.row()) {
        ObservationRecord rec;
        rec.test_id = test_id;
        rec.md5 = q.text(0);
        rec.executed_ok = q.i64(1) != 0;
        rec.log_ref = q.text(2);
        rec.counts[ArtefactType::File] = q.i64(3);
        rec.counts[ArtefactType::Mutex] = q.i64(4);
        rec.counts[ArtefactType::Registry] = q.i64(5);
        rec.counts[ArtefactType::Port] = q.i64(6);
        rec.counts[ArtefactType::RPort] = q.i64(7);
        out.emplace(rec.md5, std::move(rec));
    }
    return out;
}

std::array<std::map<std::string, ObservationRecord>, 3> ArtefactStore::list_group(
    const std::array<std::int64_t, 3>& test_ids) const {
    std::array<std::map<std::string, ObservationRecord>, 3> out;
    for (std::size_t i = 0; i < 3; ++i) out[i] = observations_for(test_ids[i]);
    return out;
}

// --- groups ---------------------------------------------------------------------

std::int64_t ArtefactStore::insert_group(const GroupRecord& rec) {
    std::string joined;
    for (const auto& h : rec.sample) {
        joined += h;
        joined += '\n';
    }
    Stmt ins(impl_->db,
             "INSERT INTO groups(tool_id, duration_s, guest_count, stagger_s, seed, run1, run2, "
             "run3, sample_hashes, created_at) VALUES(?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10)");
    ins.bind(1, rec.tool_id)
        .bind(2, rec.duration_s)
        .bind(3, static_cast<std::int64_t>(rec.guest_count))
        .bind(4, rec.stagger_s)
        .bind(5, std::to_string(rec.seed))
        .bind(6, rec.run_ids[0])
        .bind(7, rec.run_ids[1])
        .bind(8, rec.run_ids[2])
        .bind(9, joined)
        .bind(10, rec.created_at);
    ins.exec();
    return sqlite3_last_insert_rowid(impl_->db);
}

namespace {
GroupRecord group_from_stmt(Stmt& q) {
    GroupRecord rec;
    rec.group_id = q.i64(0);
    rec.tool_id = q.text(1);
    rec.duration_s = q.i64(2);
    rec.guest_count = static_cast<int>(q.i64(3));
    rec.stagger_s = q.i64(4);
    rec.seed = std::stoull(q.text(5));
    rec.run_ids = {q.i64(6), q.i64(7), q.i64(8)};
    for (const auto& h : split(q.text(9), '\n'))
        if (!h.empty()) rec.sample.push_back(h);
    rec.created_at = q.text(10);
    return rec;
}
constexpr const char* kGroupCols =
    "group_id, tool_id, duration_s, guest_count, stagger_s, seed, run1, run2, run3, "
    "sample_hashes, created_at";
}  // namespace

std::optional<GroupRecord> ArtefactStore::find_group(std::int64_t group_id) const {
    const std::string sql =
        std::string("SELECT ") + kGroupCols + " FROM groups WHERE group_id = ?1";
    Stmt q(impl_->db, sql.c_str());
    q.bind(1, group_id);
    if (!q.row()) return std::nullopt;
    return group_from_stmt(q);
}

std::vector<GroupRecord> ArtefactStore::list_groups() const {
    const std::string sql = std::string("SELECT ") + kGroupCols + " FROM groups ORDER BY group_id";
    Stmt q(impl_->db, sql.c_str());
    std::vector<GroupRecord> out;
    while (q.row()) out.push_back(group_from_stmt(q));
    return out;
}

// --- datasets ----------------------------------------------------------------------

void ArtefactStore::insert_dataset(const DatasetMeta& meta, std::span<const DatasetRow> rows) {
    begin_batch();
    try {
        {
            Stmt del(impl_->db, "DELETE FROM dataset_rows WHERE dataset_id = ?1");
            del.bind(1, meta.dataset_id);
            del.exec();
        }
        {
            Stmt del(impl_->db, "DELETE FROM datasets WHERE dataset_id = ?1");
            del.bind(1, meta.dataset_id);
            del.exec();
        }
        Stmt ins(impl_->db,
                 "INSERT INTO datasets(dataset_id, tool_id, duration_s, combo, group_id) "
                 "VALUES(?1, ?2, ?3, ?4, ?5)");
        ins.bind(1, meta.dataset_id)
            .bind(2, meta.tool_id)
            .bind(3, meta.duration_s)
            .bind(4, meta.combo.to_string())
            .bind(5, meta.group_id);
        ins.exec();
        for (const auto& row : rows) {
            Stmt r(impl_->db,
                   "INSERT INTO dataset_rows(dataset_id, md5, expected, observed) "
                   "VALUES(?1, ?2, ?3, ?4)");
            r.bind(1, meta.dataset_id).bind(2, row.md5).bind(3, row.expected).bind(4, row.observed);
            r.exec();
        }
    } catch (...) {
        impl_->exec_sql("ROLLBACK;");
        impl_->batch_depth = 0;
        throw;
    }
    commit_batch();
}

std::optional<DatasetMeta> ArtefactStore::find_dataset_meta(const std::string& dataset_id) const {
    Stmt q(impl_->db,
           "SELECT tool_id, duration_s, combo, group_id FROM datasets WHERE dataset_id = ?1");
    q.bind(1, dataset_id);
    if (!q.row()) return std::nullopt;
    DatasetMeta meta;
    meta.dataset_id = dataset_id;
    meta.tool_id = q.text(0);
    meta.duration_s = q.i64(1);
    const auto combo = TypeCombo::parse(q.text(2));
    if (!combo) throw StoreError("dataset " + dataset_id + " has unparseable combo");
    meta.combo = *combo;
    meta.group_id = q.i64(3);
    return meta;
}

std::vector<DatasetRow> ArtefactStore::dataset_rows(const std::string& dataset_id) const {
    std::vector<DatasetRow> out;
    Stmt q(impl_->db,
           "SELECT md5, expected, observed FROM dataset_rows WHERE dataset_id = ?1 ORDER BY md5");
    q.bind(1, dataset_id);
    while (q.row()) out.push_back({q.text(0), q.i64(1), q.i64(2)});
    return out;
}

std::vector<DatasetMeta> ArtefactStore::list_datasets() const {
    std::vector<DatasetMeta> out;
    Stmt q(impl_->db,
           "SELECT dataset_id, tool_id, duration_s, combo, group_id FROM datasets "
           "ORDER BY dataset_id");
    while (q.row()) {
        DatasetMeta meta;
        meta.dataset_id = q.text(0);
        meta.tool_id = q.text(1);
        meta.duration_s = q.i64(2);
        const auto combo = TypeCombo::parse(q.text(3));
        if (!combo) throw StoreError("dataset " + meta.dataset_id + " has unparseable combo");
        meta.combo = *combo;
        meta.group_id = q.i64(4);
        out.push_back(std::move(meta));
    }
    return out;
}

// --- analysis results -------------------------------------------------------------

void ArtefactStore::insert_analysis_result(const AnalysisResultRow& row) {
    Stmt ins(impl_->db,
             "INSERT INTO analysis_results(label, description, hypothesis, dataset_a, dataset_b, "
             "r, z, se, t, p, n, n_effective, decision, alpha, outlier_method, created_at) "
             "VALUES(?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12, ?13, ?14, ?15, ?16)");
    ins.bind(1, row.label)
        .bind(2, row.description)
        .bind(3, row.hypothesis)
        .bind(4, row.dataset_a)
        .bind(5, row.dataset_b)
        .bind(6, row.r)
        .bind(7, row.z)
        .bind(8, row.se)
        .bind(9, row.t)
        .bind(10, row.p)
        .bind(11, row.n)
        .bind(12, row.n_effective)
        .bind(13, row.decision)
        .bind(14, row.alpha)
        .bind(15, row.outlier_method)
        .bind(16, row.created_at);
    ins.exec();
}

std::vector<AnalysisResultRow> ArtefactStore::list_analysis_results() const {
    std::vector<AnalysisResultRow> out;
    Stmt q(impl_->db,
           "SELECT label, description, hypothesis, dataset_a, dataset_b, r, z, se, t, p, n, "
           "n_effective, decision, alpha, outlier_method, created_at FROM analysis_results "
           "ORDER BY result_id");
    while (q.row()) {
        AnalysisResultRow row;
        row.label = q.text(0);
        row.description = q.text(1);
        row.hypothesis = q.text(2);
        row.dataset_a = q.text(3);
        row.dataset_b = q.text(4);
        row.r = q.f64(5);
        row.z = q.f64(6);
        row.se = q.f64(7);
        row.t = q.f64(8);
        row.p = q.f64(9);
        row.n = q.i64(10);
        row.n_effective = q.i64(11);
        row.decision = q.text(12);
        row.alpha = q.f64(13);
        row.outlier_method = q.text(14);
        row.created_at = q.text(15);
        out.push_back(std::move(row));
    }
    return out;
}

// --- exports --------------------------------------------------------------------------

void ArtefactStore::export_dataset_csv(const std::string& dataset_id, std::ostream& out) const {
    out << "md5,expected,observed\n";
    for (const auto& row : dataset_rows(dataset_id))
        out << row.md5 << ',' << row.expected << ',' << row.observed << '\n';
}

void ArtefactStore::export_observations_csv(std::int64_t test_id, std::ostream& out) const {
    const auto obs = observations_for(test_id);
    out << "test_id,md5,type,count,executed_ok\n";
    for (const auto& [md5, rec] : obs) {
        for (ArtefactType t : kAllArtefactTypes) {
            out << test_id << ',' << md5 << ',' << to_lower(std::string(to_string(t))) << ','
                << rec.counts[t] << ',' << (rec.executed_ok ? "true" : "false") << '\n';
        }
    }
}

void ArtefactStore::export_library_csv(std::ostream& out) const {
    out << "md5,byte_size,source_tag,capability_tags,ingested_at\n";
    for (const auto& rec : list_samples()) {
        std::vector<std::string> tags(rec.capability_tags.begin(), rec.capability_tags.end());
        const std::string tag_field = join(tags, ",");
        const std::string fields[] = {rec.md5, std::to_string(rec.byte_size), rec.source_tag,
                                      tag_field, rec.ingested_at};
        out << csv::join_row(fields) << '\n';
    }
}

}  // namespace matef
