#pragma once

#include "ttlforge/error.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <mutex>
#include <optional>
#include <string>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace ttlforge::env {

/// A child process running `/bin/sh -c command` with line-oriented stdio.
/// stderr is inherited.
class LineProcess {
public:
    explicit LineProcess(const std::string& command) {
        static std::once_flag ignore_sigpipe;
        std::call_once(ignore_sigpipe, [] { std::signal(SIGPIPE, SIG_IGN); });

        int to_child[2];
        int from_child[2];
        if (pipe(to_child) != 0) throw Error(ErrorKind::adapter_unreachable, "pipe: " + errno_text());
        if (pipe(from_child) != 0) {
            close(to_child[0]);
            close(to_child[1]);
            throw Error(ErrorKind::adapter_unreachable, "pipe: " + errno_text());
        }
        pid_ = fork();
        if (pid_ < 0) {
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
            throw Error(ErrorKind::adapter_unreachable, "fork: " + errno_text());
        }
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
            execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        in_ = to_child[1];
        out_ = from_child[0];
        fcntl(in_, F_SETFD, FD_CLOEXEC);
        fcntl(out_, F_SETFD, FD_CLOEXEC);
    }

    LineProcess(const LineProcess&) = delete;
    LineProcess& operator=(const LineProcess&) = delete;

    ~LineProcess() { terminate(); }

    void write_line(const std::string& line) {
        std::string data = line + "\n";
        const char* p = data.data();
        std::size_t left = data.size();
        while (left > 0) {
            ssize_t n = ::write(in_, p, left);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw Error(ErrorKind::adapter_unreachable, "write to adapter: " + errno_text());
            }
            p += n;
            left -= static_cast<std::size_t>(n);
        }
    }

    /// Reads one line, or throws adapter_unreachable on EOF or timeout.
    std::string read_line(std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (true) {
            if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) throw Error(ErrorKind::adapter_unreachable, "adapter did not answer in time");
            pollfd pfd{out_, POLLIN, 0};
            int r = poll(&pfd, 1, static_cast<int>(left.count()));
            if (r < 0) {
                if (errno == EINTR) continue;
                throw Error(ErrorKind::adapter_unreachable, "poll: " + errno_text());
            }
            if (r == 0) continue;
            char chunk[4096];
            ssize_t n = ::read(out_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw Error(ErrorKind::adapter_unreachable, "read from adapter: " + errno_text());
            }
            if (n == 0) throw Error(ErrorKind::adapter_unreachable, "adapter closed its output");
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    void terminate() noexcept {
        if (in_ >= 0) close(in_);
        if (out_ >= 0) close(out_);
        in_ = out_ = -1;
        if (pid_ > 0) {
            // Closing stdin asks the adapter to exit; give it a moment.
            for (int i = 0; i < 50; ++i) {
                if (waitpid(pid_, nullptr, WNOHANG) == pid_) {
                    pid_ = -1;
                    return;
                }
                usleep(2000);
            }
            kill(pid_, SIGKILL);
            waitpid(pid_, nullptr, 0);
            pid_ = -1;
        }
    }

private:
    static std::string errno_text() { return std::strerror(errno); }

    pid_t pid_ = -1;
    int in_ = -1;
    int out_ = -1;
    std::string buffer_;
};

}  // namespace ttlforge::env
