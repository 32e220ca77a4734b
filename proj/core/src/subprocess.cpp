// SPDX-License-Identifier: Apache-2.0
#include "pathbench/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <mutex>

extern char** environ;

namespace pathbench {

const char* to_string(ProcessPhase phase) noexcept {
  switch (phase) {
    case ProcessPhase::Spawn: return "spawn";
    case ProcessPhase::Write: return "write";
    case ProcessPhase::Read: return "read";
    case ProcessPhase::Wait: return "wait";
  }
  return "unknown";
}

namespace {

std::string excerpt(const std::string& s) {
  return s.size() <= kStderrExcerptBytes ? s : s.substr(0, kStderrExcerptBytes);
}

std::string describe(const std::string& what, ProcessPhase phase, int status, const std::string& err) {
  std::string msg = what + " [phase=" + to_string(phase) + ", exit=" + std::to_string(status) + "]";
  if (!err.empty()) msg += ": " + excerpt(err);
  return msg;
}

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }
  int get() const noexcept { return fd_; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

std::pair<Fd, Fd> make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    throw AdapterError(std::string("pipe: ") + std::strerror(errno), ProcessPhase::Spawn, -1, {});
  }
  return {Fd(fds[0]), Fd(fds[1])};
}

class SpawnActions {
 public:
  SpawnActions() { posix_spawn_file_actions_init(&actions_); }
  ~SpawnActions() { posix_spawn_file_actions_destroy(&actions_); }
  SpawnActions(const SpawnActions&) = delete;
  SpawnActions& operator=(const SpawnActions&) = delete;
  posix_spawn_file_actions_t* get() { return &actions_; }

 private:
  posix_spawn_file_actions_t actions_;
};

int decode_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

}  // namespace

AdapterError::AdapterError(const std::string& what, ProcessPhase phase, int exit_status, std::string stderr_excerpt)
    : Error(describe(what, phase, exit_status, stderr_excerpt)),
      phase_(phase),
      exit_status_(exit_status),
      stderr_(excerpt(stderr_excerpt)) {}

ProcessResult run_process(const std::vector<std::string>& argv, std::span<const Byte> input,
                          std::chrono::milliseconds timeout) {
  if (argv.empty()) throw AdapterError("empty command line", ProcessPhase::Spawn, -1, {});
  if (::access(argv[0].c_str(), X_OK) != 0) {
    throw AdapterError("cannot execute '" + argv[0] + "': " + std::strerror(errno), ProcessPhase::Spawn, -1, {});
  }

  auto [in_r, in_w] = make_pipe();
  auto [out_r, out_w] = make_pipe();
  auto [err_r, err_w] = make_pipe();

  SpawnActions actions;
  posix_spawn_file_actions_adddup2(actions.get(), in_r.get(), STDIN_FILENO);
  posix_spawn_file_actions_adddup2(actions.get(), out_w.get(), STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(actions.get(), err_w.get(), STDERR_FILENO);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = -1;
  if (const int rc = ::posix_spawn(&pid, argv[0].c_str(), actions.get(), nullptr, args.data(), environ); rc != 0) {
    throw AdapterError("cannot spawn '" + argv[0] + "': " + std::strerror(rc), ProcessPhase::Spawn, -1, {});
  }
  in_r.reset();
  out_w.reset();
  err_w.reset();

  // SIGPIPE from an adapter that stops reading early must not kill the harness.
  static std::once_flag sigpipe_once;
  std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
  ::fcntl(in_w.get(), F_SETFL, ::fcntl(in_w.get(), F_GETFL) | O_NONBLOCK);

  ProcessResult result;
  std::size_t written = 0;
  if (input.empty()) in_w.reset();
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  bool timed_out = false;
  std::string failure;
  ProcessPhase failure_phase = ProcessPhase::Read;
  std::array<char, 65536> buffer{};

  while (out_r.get() >= 0 || err_r.get() >= 0) {
    std::array<pollfd, 3> fds{};
    nfds_t n = 0;
    const auto add = [&](const Fd& fd, short events) {
      if (fd.get() >= 0) fds[n++] = pollfd{fd.get(), events, 0};
    };
    add(out_r, POLLIN);
    add(err_r, POLLIN);
    add(in_w, POLLOUT);

    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now()).count();
    if (remaining <= 0) {
      timed_out = true;
      break;
    }
    const int ready = ::poll(fds.data(), n, static_cast<int>(std::min<long long>(remaining, 1000)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      failure = std::string("poll: ") + std::strerror(errno);
      break;
    }
    for (nfds_t i = 0; i < n; ++i) {
      if (!fds[i].revents) continue;
      const int fd = fds[i].fd;
      if (fd == in_w.get()) {
        if (fds[i].revents & (POLLERR | POLLHUP)) {
          in_w.reset();  // child closed stdin early; remaining input is discarded
          continue;
        }
        const ssize_t w = ::write(fd, input.data() + written, std::min<std::size_t>(input.size() - written, 65536));
        if (w < 0) {
          if (errno == EAGAIN || errno == EINTR) continue;
          if (errno == EPIPE) {
            in_w.reset();
            continue;
          }
          failure = std::string("write to stdin: ") + std::strerror(errno);
          failure_phase = ProcessPhase::Write;
          break;
        }
        written += static_cast<std::size_t>(w);
        if (written == input.size()) in_w.reset();
      } else {
        const ssize_t r = ::read(fd, buffer.data(), buffer.size());
        if (r < 0) {
          if (errno == EAGAIN || errno == EINTR) continue;
          failure = std::string("read: ") + std::strerror(errno);
          break;
        }
        if (r == 0) {
          (fd == out_r.get() ? out_r : err_r).reset();
          continue;
        }
        if (fd == out_r.get()) {
          result.stdout_data.insert(result.stdout_data.end(), buffer.begin(), buffer.begin() + r);
        } else if (result.stderr_data.size() < 4 * kStderrExcerptBytes) {
          result.stderr_data.append(buffer.data(), static_cast<std::size_t>(r));
        }
      }
    }
    if (!failure.empty()) break;
  }
  in_w.reset();

  if (timed_out || !failure.empty()) {
    ::kill(pid, SIGKILL);
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (timed_out) {
      throw AdapterError("'" + argv[0] + "' timed out after " + std::to_string(timeout.count()) + " ms",
                         ProcessPhase::Wait, -1, result.stderr_data);
    }
    throw AdapterError("'" + argv[0] + "': " + failure, failure_phase, -1, result.stderr_data);
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) {
      throw AdapterError(std::string("waitpid: ") + std::strerror(errno), ProcessPhase::Wait, -1, result.stderr_data);
    }
  }
  result.exit_status = decode_status(status);
  return result;
}

}  // namespace pathbench
