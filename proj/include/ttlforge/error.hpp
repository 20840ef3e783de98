#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ttlforge {

enum class ErrorKind {
    invalid_input,
    degenerate_column,
    unknown_environment,
    malformed_config,
    config,
    step_after_done,
    horizon_exceeded,
    protocol_violation,
    adapter_unreachable,
    transport,
    provider,
    truncated,
    parse,
    proposal_failed,
    sequence_gap,
    io,
    corrupt_log,
    not_found,
    lock_held,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::degenerate_column: return "degenerate-column";
    case ErrorKind::unknown_environment: return "unknown-environment";
    case ErrorKind::malformed_config: return "malformed-config";
    case ErrorKind::config: return "config";
    case ErrorKind::step_after_done: return "step-after-done";
    case ErrorKind::horizon_exceeded: return "horizon-exceeded";
    case ErrorKind::protocol_violation: return "protocol-violation";
    case ErrorKind::adapter_unreachable: return "adapter-unreachable";
    case ErrorKind::transport: return "transport";
    case ErrorKind::provider: return "provider";
    case ErrorKind::truncated: return "truncated";
    case ErrorKind::parse: return "parse";
    case ErrorKind::proposal_failed: return "proposal-failed";
    case ErrorKind::sequence_gap: return "sequence-gap";
    case ErrorKind::io: return "io";
    case ErrorKind::corrupt_log: return "corrupt-log";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::lock_held: return "lock-held";
    }
    return "unknown";
}

/// The single exception type thrown by the library.
///
/// `subject` names the offending entity when there is one (a task id for a
/// degenerate column, a file path for a corrupt log). `retryable` is only
/// meaningful for backend errors and drives the retry wrapper.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string subject = {},
          bool retryable = false)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message),
          kind_(kind),
          subject_(std::move(subject)),
          retryable_(retryable) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::string& subject() const noexcept { return subject_; }
    [[nodiscard]] bool retryable() const noexcept { return retryable_; }

private:
    ErrorKind kind_;
    std::string subject_;
    bool retryable_;
};

}  // namespace ttlforge
