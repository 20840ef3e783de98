#pragma once

#include <chrono>
#include <cstdint>

namespace ttlforge {

/// Timestamp source for run-log records, in milliseconds since the epoch.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() = 0;
};

class WallClock final : public Clock {
public:
    std::int64_t now_ms() override {
        using namespace std::chrono;
        return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    }
};

/// Returns 0, 1, 2, ... so that logs from scripted runs are byte-reproducible.
class LogicalClock final : public Clock {
public:
    std::int64_t now_ms() override { return next_++; }

private:
    std::int64_t next_ = 0;
};

}  // namespace ttlforge
