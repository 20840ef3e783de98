#pragma once

#include "ttlforge/error.hpp"

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

namespace ttlforge::store {

namespace fs = std::filesystem;

/// Replaces characters that are unsafe in file names.
inline std::string sanitize_id(std::string_view id) {
    std::string out;
    out.reserve(id.size());
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        out += ok ? c : '_';
    }
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

/// <runs_root>/<run_id>/{run.jsonl, sessions/, pool/, report/}
struct RunPaths {
    fs::path root;

    RunPaths() = default;
    RunPaths(const fs::path& runs_root, const std::string& run_id) : root(runs_root / sanitize_id(run_id)) {}

    [[nodiscard]] fs::path run_log() const { return root / "run.jsonl"; }
    [[nodiscard]] fs::path sessions_dir() const { return root / "sessions"; }
    [[nodiscard]] fs::path session_log(const std::string& session_id) const {
        return sessions_dir() / (sanitize_id(session_id) + ".jsonl");
    }
    [[nodiscard]] fs::path pool_dir() const { return root / "pool"; }
    [[nodiscard]] fs::path pool_snapshot(std::uint64_t n) const { return pool_dir() / (std::to_string(n) + ".json"); }
    [[nodiscard]] fs::path report_dir() const { return root / "report"; }
    [[nodiscard]] fs::path lock_file() const { return root / "LOCK"; }

    void create() const {
        fs::create_directories(sessions_dir());
        fs::create_directories(pool_dir());
        fs::create_directories(report_dir());
    }
};

/// Exclusive writer lock for a run directory. A lock left by a dead
/// process is taken over.
class RunLock {
public:
    explicit RunLock(fs::path path) : path_(std::move(path)) {
        for (int attempt = 0; attempt < 2; ++attempt) {
            int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
            if (fd >= 0) {
                const std::string pid = std::to_string(::getpid()) + "\n";
                [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
                ::close(fd);
                held_ = true;
                return;
            }
            if (errno != EEXIST) throw Error(ErrorKind::io, std::strerror(errno), path_.string());
            if (!stale()) break;
            std::error_code ec;
            fs::remove(path_, ec);
        }
        throw Error(ErrorKind::lock_held, "run directory is locked by another process", path_.string());
    }

    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

    ~RunLock() {
        if (held_) {
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }

private:
    [[nodiscard]] bool stale() const {
        std::ifstream in(path_);
        long pid = 0;
        if (!(in >> pid) || pid <= 0) return true;
        return ::kill(static_cast<pid_t>(pid), 0) != 0 && errno == ESRCH;
    }

    fs::path path_;
    bool held_ = false;
};

inline void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot write", tmp.string());
        out << text;
        if (!out) throw Error(ErrorKind::io, "write failed", tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::not_found, "cannot read file", path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace ttlforge::store
