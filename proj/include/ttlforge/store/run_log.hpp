#pragma once

#include "ttlforge/core/types.hpp"
#include "ttlforge/util/clock.hpp"
#include "ttlforge/util/sha256.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <unistd.h>

namespace ttlforge::store {

inline constexpr int kSchemaVersion = 1;
inline const std::string kGenesisHash(64, '0');

inline const std::set<std::string>& record_kinds() {
    static const std::set<std::string> kinds{"run_config", "episode_start",     "step",        "episode_end",
                                             "adapt",      "proposal",          "validation_result",
                                             "pool_update", "selection",        "iteration"};
    return kinds;
}

struct RunLogRecord {
    std::uint64_t sequence = 0;
    std::int64_t timestamp_ms = 0;
    std::string kind;
    Json payload = Json::object();
    std::string prev_hash;
    std::string hash;

    [[nodiscard]] Json to_json() const {
        return Json{{"schema_version", kSchemaVersion}, {"seq", sequence}, {"ts", timestamp_ms}, {"kind", kind},
                    {"payload", payload},               {"prev", prev_hash}, {"hash", hash}};
    }

    static RunLogRecord from_json(const Json& j) {
        RunLogRecord r;
        r.sequence = j.at("seq").get<std::uint64_t>();
        r.timestamp_ms = j.at("ts").get<std::int64_t>();
        r.kind = j.at("kind").get<std::string>();
        r.payload = j.at("payload");
        r.prev_hash = j.at("prev").get<std::string>();
        r.hash = j.at("hash").get<std::string>();
        return r;
    }
};

/// Chains each record to its predecessor; the timestamp is not covered.
inline std::string record_hash(const std::string& prev, std::uint64_t sequence, const std::string& kind,
                               const Json& payload) {
    return sha256_hex(prev + "\n" + std::to_string(sequence) + "\n" + kind + "\n" + payload.dump());
}

enum class ClockMode { wall, logical };

struct LoadedLog {
    std::vector<RunLogRecord> records;
    std::vector<std::uintmax_t> end_offsets;  // byte offset just past each record's newline
    bool torn_tail = false;                   // a partial or unparseable last line was found
    std::string note;
};

/// Reads and verifies a log. A damaged final line is reported as a torn
/// tail; damage anywhere else is a corrupt_log error naming the file.
inline LoadedLog load_log(const std::filesystem::path& path) {
    LoadedLog out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();

    std::size_t pos = 0;
    std::string prev = kGenesisHash;
    auto corrupt = [&](const std::string& why) {
        throw Error(ErrorKind::corrupt_log, path.string() + ": " + why, path.string());
    };
    while (pos < data.size()) {
        auto nl = data.find('\n', pos);
        const bool last = nl == std::string::npos || nl + 1 >= data.size();
        if (nl == std::string::npos) {
            out.torn_tail = true;
            out.note = "partial trailing record (" + std::to_string(data.size() - pos) + " bytes) after record " +
                       std::to_string(out.records.size());
            break;
        }
        RunLogRecord rec;
        try {
            rec = RunLogRecord::from_json(Json::parse(data.substr(pos, nl - pos)));
        } catch (const Json::exception& e) {
            if (last) {
                out.torn_tail = true;
                out.note = "unparseable trailing record after record " + std::to_string(out.records.size());
                break;
            }
            corrupt("unparseable record at line " + std::to_string(out.records.size() + 1));
        }
        const auto expected_seq = out.records.size() + 1;
        if (rec.sequence != expected_seq)
            corrupt("sequence gap: expected " + std::to_string(expected_seq) + ", found " + std::to_string(rec.sequence));
        if (rec.prev_hash != prev) corrupt("hash chain broken at record " + std::to_string(rec.sequence));
        if (record_hash(prev, rec.sequence, rec.kind, rec.payload) != rec.hash)
            corrupt("content hash mismatch at record " + std::to_string(rec.sequence));
        prev = rec.hash;
        out.records.push_back(std::move(rec));
        out.end_offsets.push_back(nl + 1);
        pos = nl + 1;
    }
    return out;
}

/// Append-only, hash-chained JSONL log with a single writer.
class RunLog {
public:
    RunLog(std::filesystem::path path, ClockMode clock, bool sync_each_record = true)
        : path_(std::move(path)), clock_mode_(clock), sync_each_(sync_each_record) {
        if (clock_mode_ == ClockMode::wall) wall_ = std::make_unique<WallClock>();
        if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
        auto loaded = load_log(path_);
        if (loaded.torn_tail) {
            recovery_note_ = loaded.note;
            const std::uintmax_t keep = loaded.end_offsets.empty() ? 0 : loaded.end_offsets.back();
            std::filesystem::resize_file(path_, keep);
        }
        records_ = std::move(loaded.records);
        offsets_ = std::move(loaded.end_offsets);
        open_for_append();
    }

    RunLog(const RunLog&) = delete;
    RunLog& operator=(const RunLog&) = delete;

    ~RunLog() {
        if (file_) {
            std::fflush(file_);
            fsync(fileno(file_));
            std::fclose(file_);
        }
    }

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] const std::vector<RunLogRecord>& records() const noexcept { return records_; }
    [[nodiscard]] std::uint64_t last_sequence() const noexcept { return records_.size(); }
    [[nodiscard]] const std::string& last_hash() const noexcept {
        return records_.empty() ? kGenesisHash : records_.back().hash;
    }
    /// Non-empty when a torn tail was cut off while opening.
    [[nodiscard]] const std::string& recovery_note() const noexcept { return recovery_note_; }

    /// Appends a caller-built record; its sequence must follow the last one.
    const RunLogRecord& append(RunLogRecord record) {
        if (record.sequence != last_sequence() + 1)
            throw Error(ErrorKind::sequence_gap,
                        "expected sequence " + std::to_string(last_sequence() + 1) + ", got " +
                            std::to_string(record.sequence),
                        path_.string());
        if (!record_kinds().count(record.kind))
            throw Error(ErrorKind::invalid_input, "unknown record kind '" + record.kind + "'");
        record.timestamp_ms = clock_mode_ == ClockMode::wall ? wall_->now_ms() : static_cast<std::int64_t>(record.sequence);
        record.prev_hash = last_hash();
        record.hash = record_hash(record.prev_hash, record.sequence, record.kind, record.payload);
        const std::string line = record.to_json().dump() + "\n";
        if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
            throw Error(ErrorKind::io, "write failed", path_.string());
        if (sync_each_ && fsync(fileno(file_)) != 0) throw Error(ErrorKind::io, "fsync failed", path_.string());
        const auto end = (offsets_.empty() ? 0 : offsets_.back()) + line.size();
        offsets_.push_back(end);
        records_.push_back(std::move(record));
        return records_.back();
    }

    const RunLogRecord& append(const std::string& kind, Json payload) {
        RunLogRecord r;
        r.sequence = last_sequence() + 1;
        r.kind = kind;
        r.payload = std::move(payload);
        return append(std::move(r));
    }

    /// Drops every record after `sequence` (used when resuming from an
    /// iteration boundary).
    void truncate_after(std::uint64_t sequence) {
        if (sequence >= last_sequence()) return;
        std::fclose(file_);
        file_ = nullptr;
        const std::uintmax_t keep = sequence == 0 ? 0 : offsets_[sequence - 1];
        std::filesystem::resize_file(path_, keep);
        records_.resize(sequence);
        offsets_.resize(sequence);
        open_for_append();
    }

    void sync() {
        std::fflush(file_);
        fsync(fileno(file_));
    }

private:
    void open_for_append() {
        file_ = std::fopen(path_.c_str(), "ab");
        if (!file_) throw Error(ErrorKind::io, "cannot open log for append", path_.string());
    }

    std::filesystem::path path_;
    ClockMode clock_mode_;
    bool sync_each_;
    std::unique_ptr<Clock> wall_;
    std::FILE* file_ = nullptr;
    std::vector<RunLogRecord> records_;
    std::vector<std::uintmax_t> offsets_;
    std::string recovery_note_;
};

}  // namespace ttlforge::store
