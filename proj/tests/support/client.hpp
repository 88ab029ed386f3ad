#pragma once

// Minimal blocking NDJSON client for talking to the hub in tests.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace testclient {

class Client {
 public:
  explicit Client(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    if (fd_ < 0 || ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      throw std::runtime_error("connect failed");
    }
  }
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;
  ~Client() {
    if (fd_ >= 0) ::close(fd_);
  }

  void send(const nlohmann::json& frame) {
    const std::string line = frame.dump() + "\n";
    std::size_t done = 0;
    while (done < line.size()) {
      const auto n = ::send(fd_, line.data() + done, line.size() - done, MSG_NOSIGNAL);
      if (n <= 0) throw std::runtime_error("send failed");
      done += static_cast<std::size_t>(n);
    }
  }

  /// Next frame, or nothing when none arrives within `timeout_ms`.
  std::optional<nlohmann::json> receive(int timeout_ms = 5000) {
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        auto frame = nlohmann::json::parse(buffer_.substr(0, nl));
        buffer_.erase(0, nl + 1);
        return frame;
      }
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, timeout_ms) <= 0) return std::nullopt;
      char chunk[4096];
      const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) return std::nullopt;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  nlohmann::json expect(const std::string& type) {
    auto f = receive();
    if (!f) throw std::runtime_error("timed out waiting for a " + type + " frame");
    if ((*f)["type"] != type) throw std::runtime_error("expected " + type + ", got " + f->dump());
    return *f;
  }

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace testclient
