// Copyright 2026 The Probe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "probe/subprocess.h"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include "probe/error.h"

namespace probe {
namespace {

void IgnoreSigpipeOnce() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { Close(); }
  int get() const { return fd_; }
  void Close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  void Reset(int fd) {
    Close();
    fd_ = fd;
  }

 private:
  int fd_;
};

}  // namespace

std::vector<std::string> RunLineFilter(const std::string& command,
                                       const std::vector<std::string>& lines) {
  IgnoreSigpipeOnce();
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::kBackendUnavailable, "pipe: " + std::string(std::strerror(errno)));
  }
  Fd child_in_read(in_pipe[0]), child_in_write(in_pipe[1]);
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::kBackendUnavailable, "pipe: " + std::string(std::strerror(errno)));
  }
  Fd child_out_read(out_pipe[0]), child_out_write(out_pipe[1]);

  const pid_t pid = ::fork();
  if (pid < 0) {
    throw Error(ErrorCode::kBackendUnavailable, "fork: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    ::dup2(child_in_read.get(), STDIN_FILENO);
    ::dup2(child_out_write.get(), STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  child_in_read.Close();
  child_out_write.Close();

  std::string payload;
  for (const auto& line : lines) {
    payload += line;
    payload.push_back('\n');
  }
  // The child may stop reading early; a failed write shows up as a line-count
  // mismatch or non-zero exit.
  std::thread writer([&payload, &child_in_write] {
    const int fd = child_in_write.get();
    std::size_t done = 0;
    while (done < payload.size()) {
      const ssize_t n = ::write(fd, payload.data() + done, payload.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        break;
      }
      done += static_cast<std::size_t>(n);
    }
    child_in_write.Close();
  });

  std::string output;
  char buffer[65536];
  for (;;) {
    const ssize_t n = ::read(child_out_read.get(), buffer, sizeof(buffer));
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (n == 0) break;
    output.append(buffer, static_cast<std::size_t>(n));
  }
  writer.join();

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error(ErrorCode::kBackendUnavailable,
                "command '" + command + "' failed with status " +
                    std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }

  std::vector<std::string> result;
  std::size_t begin = 0;
  while (begin < output.size()) {
    std::size_t nl = output.find('\n', begin);
    if (nl == std::string::npos) nl = output.size();
    std::string line = output.substr(begin, nl - begin);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    result.push_back(std::move(line));
    begin = nl + 1;
  }
  return result;
}

}  // namespace probe
