#pragma once

// Minimal POSIX child process with line-oriented stdin/stdout pipes.

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <string>
#include <vector>

#include "sets/error.hpp"

extern char** environ;

namespace sets {

class ChildProcess {
 public:
  explicit ChildProcess(const std::vector<std::string>& argv) {
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
    if (argv.empty()) throw ModelUnavailable(ModelUnavailable::Code::SpawnFailed, "empty command");

    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw ModelUnavailable(ModelUnavailable::Code::SpawnFailed, "pipe failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw ModelUnavailable(ModelUnavailable::Code::SpawnFailed, "pipe failed");
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, to_child[1]);
    posix_spawn_file_actions_addclose(&actions, from_child[0]);

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    const int rc = ::posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      pid_ = -1;
      throw ModelUnavailable(ModelUnavailable::Code::SpawnFailed,
                             "cannot start '" + argv[0] + "': " + std::strerror(rc));
    }
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() {
    if (in_fd_ >= 0) ::close(in_fd_);
    if (out_fd_ >= 0) ::close(out_fd_);
    if (pid_ > 0) {
      int status = 0;
      // give a well-behaved child a moment to exit on EOF
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
        ::usleep(2000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }

  void write_line(const std::string& line) {
    std::string buf = line + '\n';
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
      const auto n = ::write(in_fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ModelUnavailable(ModelUnavailable::Code::Crashed, "model process closed its input");
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      if (const auto nl = pending_.find('\n'); nl != std::string::npos) {
        std::string line = pending_.substr(0, nl);
        pending_.erase(0, nl + 1);
        return line;
      }
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) {
        terminate();
        throw ModelUnavailable(ModelUnavailable::Code::Timeout, "model process timed out");
      }
      pollfd pfd{out_fd_, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (pr < 0 && errno == EINTR) continue;
      if (pr == 0) continue;
      char chunk[4096];
      const auto n = ::read(out_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw ModelUnavailable(ModelUnavailable::Code::Crashed, "model process exited unexpectedly");
      pending_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  void terminate() {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string pending_;
};

}  // namespace sets
