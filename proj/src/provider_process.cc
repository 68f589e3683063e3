/*
 * Copyright 2026 The Fair SA Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// External embedding provider speaking newline-delimited JSON over the
// child's stdin/stdout.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fairsa/common.h"
#include "fairsa/embed.h"
#include "json.hpp"

namespace fairsa {
namespace {

using nlohmann::json;

constexpr int kProtocolVersion = 1;
constexpr std::size_t kTranscriptLines = 16;

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "fairsa-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) {
      throw Error(std::string("mkdtemp failed: ") + std::strerror(errno));
    }
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

class ProcessProvider final : public Provider {
 public:
  explicit ProcessProvider(const ProviderConfig& config) : command_(config.command) {
    if (command_.empty()) throw Error("process provider needs a command");
    Spawn();
    try {
      Handshake(config);
    } catch (...) {
      Terminate();
      throw;
    }
  }

  ~ProcessProvider() override {
    try {
      Shutdown();
    } catch (const std::exception&) {
      Terminate();
    }
  }

  int dim() const override { return dim_; }
  std::string Identity() const override {
    return "process:" + command_ + ":" + std::to_string(dim_);
  }

  std::vector<float> Embed(const std::string& key, const Image& image) override {
    const auto png = scratch_.path() / ("probe-" + std::to_string(serial_++) + ".png");
    WritePng(image, png);
    last_request_ = key;
    Send(json{{"op", "embed"}, {"id", key}, {"path", std::filesystem::absolute(png).string()}});
    const json reply = Receive();
    std::error_code ec;
    std::filesystem::remove(png, ec);

    const std::string op = reply.value("op", "");
    if (op == "error") {
      Fail("provider error for '" + key + "': " + reply.value("msg", std::string("<no message>")));
    }
    if (op != "embedding") Fail("expected an embedding reply for '" + key + "'");
    if (!reply.contains("id") || reply["id"] != key) Fail("reply id does not match request '" + key + "'");
    if (!reply.contains("vec") || !reply["vec"].is_array()) Fail("embedding reply lacks a vec array");
    const json& vec = reply["vec"];
    if (static_cast<int>(vec.size()) != dim_) {
      Fail("embedding for '" + key + "' has " + std::to_string(vec.size()) + " values, expected " +
           std::to_string(dim_));
    }
    std::vector<float> out;
    out.reserve(vec.size());
    for (const auto& v : vec) {
      if (!v.is_number()) Fail("non-numeric embedding value for '" + key + "'");
      const float f = v.get<float>();
      if (!std::isfinite(f)) Fail("non-finite embedding value for '" + key + "'");
      out.push_back(f);
    }
    return out;
  }

 private:
  void Spawn() {
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0) {
      throw Error(std::string("pipe failed: ") + std::strerror(errno));
    }
    // A dead provider must surface as EPIPE, not kill the harness.
    ::signal(SIGPIPE, SIG_IGN);
    pid_ = ::fork();
    if (pid_ < 0) throw Error(std::string("fork failed: ") + std::strerror(errno));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  void Handshake(const ProviderConfig& config) {
    Send(json{{"op", "hello"}, {"version", kProtocolVersion}});
    const json reply = Receive();
    if (reply.value("op", "") != "hello") Fail("expected hello reply");
    if (!reply.contains("version") || !reply["version"].is_number_integer() ||
        reply["version"].get<int>() != kProtocolVersion) {
      Fail("protocol version mismatch (harness speaks " + std::to_string(kProtocolVersion) + ")");
    }
    if (!reply.contains("dim") || !reply["dim"].is_number_integer() ||
        reply["dim"].get<long long>() <= 0 || reply["dim"].get<long long>() > (1 << 24)) {
      Fail("hello reply carries an invalid dim");
    }
    dim_ = reply["dim"].get<int>();
    if (config.expected_dim && *config.expected_dim != dim_) {
      Fail("provider dim " + std::to_string(dim_) + " does not match expected " +
           std::to_string(*config.expected_dim));
    }
  }

  void Send(const json& message) {
    const std::string line = message.dump() + "\n";
    Record("> " + message.dump());
    std::size_t done = 0;
    while (done < line.size()) {
      const ssize_t n = ::write(write_fd_, line.data() + done, line.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        Fail(std::string("write to provider failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  json Receive() {
    std::string line;
    for (;;) {
      const std::size_t newline = buffer_.find('\n');
      if (newline != std::string::npos) {
        line = buffer_.substr(0, newline);
        buffer_.erase(0, newline + 1);
        break;
      }
      char chunk[65536];
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        Fail(std::string("read from provider failed: ") + std::strerror(errno));
      }
      if (n == 0) Fail("provider closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
    Record("< " + (line.size() > 200 ? line.substr(0, 200) + "..." : line));
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) Fail("provider sent a non-JSON line");
    return parsed;
  }

  void Record(std::string entry) {
    transcript_.push_back(std::move(entry));
    if (transcript_.size() > kTranscriptLines) transcript_.pop_front();
  }

  [[noreturn]] void Fail(const std::string& what) {
    std::string message = "process provider `" + command_ + "`: " + what;
    if (!last_request_.empty()) message += " (last request id '" + last_request_ + "')";
    message += "\nprotocol transcript:";
    for (const auto& entry : transcript_) message += "\n  " + entry;
    throw Error(message);
  }

  void Shutdown() {
    if (pid_ <= 0) return;
    Send(json{{"op", "shutdown"}});
    CloseFds();
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    pid_ = -1;
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      std::fprintf(stderr, "fairsa: provider `%s` did not exit cleanly\n", command_.c_str());
    }
  }

  void Terminate() noexcept {
    CloseFds();
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  void CloseFds() noexcept {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    write_fd_ = read_fd_ = -1;
  }

  std::string command_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  int dim_ = 0;
  std::string buffer_;
  std::deque<std::string> transcript_;
  std::string last_request_;
  std::size_t serial_ = 0;
  TempDir scratch_;
};

}  // namespace

std::unique_ptr<Provider> OpenProcessProvider(const ProviderConfig& config) {
  return std::make_unique<ProcessProvider>(config);
}

}  // namespace fairsa
