#pragma once

// Objective backed by external worker processes.
//
// Protocol: one JSON object per line over the worker's stdin/stdout.
//   request:  {"id": <uint>, "params": {"batch_size": 8, "dropout_rate": 0.1, "neurons": 110}}
//   response: {"id": <uint>, "fitness": <finite number>} | {"id": <uint>, "error": "<message>"}
// A worker handles one request at a time and exits 0 when its stdin closes.
// Up to `pool_size` workers are started lazily; a worker that times out, dies
// or speaks garbage is killed and replaced on the next request.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "objectives.hpp"

extern char** environ;

namespace gravopt {

namespace detail {

class WorkerProcess {
public:
    explicit WorkerProcess(const std::vector<std::string>& argv) {
        if (argv.empty()) throw EvaluationError(FailureKind::process_exit, "empty worker command");
        int fds[2];
        if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0)
            throw EvaluationError(FailureKind::process_exit, std::string("socketpair: ") + std::strerror(errno));
        fd_ = fds[0];

        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);

        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, fds[1], STDIN_FILENO);
        posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
        const int rc = ::posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
        posix_spawn_file_actions_destroy(&actions);
        ::close(fds[1]);
        if (rc != 0) {
            ::close(fd_);
            fd_ = -1;
            pid_ = -1;
            throw EvaluationError(FailureKind::process_exit,
                                  "cannot launch '" + argv[0] + "': " + std::strerror(rc));
        }
    }

    WorkerProcess(const WorkerProcess&) = delete;
    WorkerProcess& operator=(const WorkerProcess&) = delete;

    ~WorkerProcess() { shutdown(std::chrono::milliseconds(2000)); }

    void send_line(const std::string& line) {
        std::string data = line + '\n';
        std::size_t off = 0;
        while (off < data.size()) {
            const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw EvaluationError(FailureKind::process_exit, std::string("worker write failed: ") + std::strerror(errno));
            }
            off += static_cast<std::size_t>(n);
        }
    }

    std::string read_line(std::chrono::steady_clock::time_point deadline) {
        for (;;) {
            if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) throw EvaluationError(FailureKind::timeout, "worker did not answer before the deadline");
            pollfd p{fd_, POLLIN, 0};
            const int rc = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
            if (rc < 0 && errno != EINTR)
                throw EvaluationError(FailureKind::process_exit, std::string("poll: ") + std::strerror(errno));
            if (rc <= 0) continue;
            char chunk[4096];
            const ssize_t n = ::read(fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                throw EvaluationError(FailureKind::process_exit, std::string("worker read failed: ") + std::strerror(errno));
            }
            if (n == 0) throw EvaluationError(FailureKind::process_exit, "worker closed its output (exited?)");
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    void kill() {
        if (pid_ > 0) {
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, nullptr, 0);
            pid_ = -1;
        }
        close_fd();
    }

    // Close the worker's input and give it `grace` to exit by itself.
    // Returns its exit status, or -1 if it had to be killed.
    int shutdown(std::chrono::milliseconds grace) {
        if (pid_ <= 0) {
            close_fd();
            return -1;
        }
        ::shutdown(fd_, SHUT_WR);
        const auto until = std::chrono::steady_clock::now() + grace;
        int status = 0;
        while (std::chrono::steady_clock::now() < until) {
            const pid_t r = ::waitpid(pid_, &status, WNOHANG);
            if (r == pid_) {
                pid_ = -1;
                close_fd();
                return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        kill();
        return -1;
    }

    pid_t pid() const { return pid_; }

private:
    void close_fd() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

    pid_t pid_ = -1;
    int fd_ = -1;
    std::string buffer_;
};

}  // namespace detail

class ExternalObjective final : public Objective {
public:
    ExternalObjective(std::vector<std::string> command, double timeout_seconds, unsigned pool_size = 1,
                      Sense sense = Sense::minimize, std::string name = "external")
        : command_(std::move(command)),
          timeout_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
              std::chrono::duration<double>(timeout_seconds))),
          pool_size_(std::max(1u, pool_size)),
          sense_(sense),
          name_(std::move(name)) {
        if (command_.empty()) throw std::invalid_argument("external objective needs a command");
        if (!(timeout_seconds > 0.0)) throw std::invalid_argument("external objective timeout must be > 0");
    }

    std::string name() const override { return name_; }
    Sense sense() const override { return sense_; }

    static nlohmann::ordered_json request(std::uint64_t id, const ParamVector& params) {
        nlohmann::ordered_json p = nlohmann::ordered_json::object();
        for (const auto& e : params) {
            if (e.is_integer())
                p[e.name] = std::get<std::int64_t>(e.value);
            else
                p[e.name] = std::get<double>(e.value);
        }
        return {{"id", id}, {"params", std::move(p)}};
    }

    /// Parses one response line; throws EvaluationError on anything but a finite fitness.
    static double parse_response(const std::string& line, std::uint64_t expected_id) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::out_of_range&) {
            // a literal such as 1e999 overflows the parser
            throw EvaluationError(FailureKind::non_finite, "worker returned a non-finite fitness");
        } catch (const nlohmann::json::exception&) {
            throw EvaluationError(FailureKind::protocol, "malformed response line: " + line.substr(0, 200));
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_number_unsigned())
            throw EvaluationError(FailureKind::protocol, "response lacks an unsigned integer id");
        if (j["id"].get<std::uint64_t>() != expected_id)
            throw EvaluationError(FailureKind::protocol, "response id " + j["id"].dump() + " does not match request id " +
                                                             std::to_string(expected_id));
        if (j.contains("error"))
            throw EvaluationError(FailureKind::worker_error,
                                  "worker error: " + (j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump()));
        if (!j.contains("fitness") || !j["fitness"].is_number())
            throw EvaluationError(FailureKind::protocol, "response has neither fitness nor error");
        const double f = j["fitness"].get<double>();
        if (!std::isfinite(f)) throw EvaluationError(FailureKind::non_finite, "worker returned a non-finite fitness");
        return f;
    }

    double evaluate(const ParamVector& params) const override {
        auto worker = acquire();
        const std::uint64_t id = next_id_.fetch_add(1);
        bool healthy = false;
        try {
            worker->send_line(request(id, params).dump());
            const std::string line = worker->read_line(std::chrono::steady_clock::now() + timeout_);
            healthy = true;  // the stream is in sync even if the content is bad
            try {
                const double f = parse_response(line, id);
                release(std::move(worker), true);
                return f;
            } catch (const EvaluationError& e) {
                // an error response leaves the worker usable; garbage does not
                healthy = e.kind() == FailureKind::worker_error || e.kind() == FailureKind::non_finite;
                throw;
            }
        } catch (...) {
            release(std::move(worker), healthy);
            throw;
        }
    }

    std::size_t live_workers() const {
        std::lock_guard lock(mutex_);
        return live_;
    }

    std::size_t spawned_workers() const { return spawned_.load(); }

private:
    std::unique_ptr<detail::WorkerProcess> acquire() const {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return !idle_.empty() || live_ < pool_size_; });
        if (!idle_.empty()) {
            auto w = std::move(idle_.back());
            idle_.pop_back();
            return w;
        }
        ++live_;
        lock.unlock();
        try {
            auto w = std::make_unique<detail::WorkerProcess>(command_);
            spawned_.fetch_add(1);
            return w;
        } catch (...) {
            lock.lock();
            --live_;
            cv_.notify_one();
            throw;
        }
    }

    void release(std::unique_ptr<detail::WorkerProcess> worker, bool healthy) const {
        if (!healthy) worker->kill();
        std::lock_guard lock(mutex_);
        if (healthy)
            idle_.push_back(std::move(worker));
        else
            --live_;
        cv_.notify_one();
    }

    std::vector<std::string> command_;
    std::chrono::steady_clock::duration timeout_;
    unsigned pool_size_;
    Sense sense_;
    std::string name_;

    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    mutable std::vector<std::unique_ptr<detail::WorkerProcess>> idle_;
    mutable std::size_t live_ = 0;
    mutable std::atomic<std::uint64_t> next_id_{1};
    mutable std::atomic<std::size_t> spawned_{0};
};

}  // namespace gravopt
