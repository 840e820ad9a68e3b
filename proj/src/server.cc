#include "dlbac/server.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "dlbac/error.h"

namespace dlbac {
namespace {

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_endpoint(std::string_view endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw ConfigError("endpoint must be HOST:PORT, got '" + std::string(endpoint) + "'");
  }
  const auto port_text = endpoint.substr(colon + 1);
  unsigned port = 0;
  const auto [ptr, ec] =
      std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port > 65535) {
    throw ConfigError("bad port in endpoint '" + std::string(endpoint) + "'");
  }
  return {std::string(endpoint.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

LineServer::LineServer(Handler handler) : handler_(std::move(handler)) {}

LineServer::~LineServer() { stop(); }

std::uint16_t LineServer::bind(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error("cannot resolve '" + host + "': " + ::gai_strerror(rc));
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw Error(std::string("socket: ") + std::strerror(errno));
  }
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 128) != 0) {
    const std::string why = std::strerror(errno);
    ::freeaddrinfo(res);
    ::close(fd);
    throw Error("cannot listen on " + host + ":" + service + ": " + why);
  }
  ::freeaddrinfo(res);
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  listen_fd_ = fd;
  port_ = ntohs(bound.sin_port);
  return port_;
}

void LineServer::run() {
  if (listen_fd_ < 0) throw Error("server is not bound");
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    if (rc <= 0) continue;
    const int client = ::accept(listen_fd_, nullptr, nullptr);
    if (client < 0) continue;
    std::lock_guard lock(mu_);
    if (stopping_) {
      ::close(client);
      break;
    }
    clients_.insert(client);
    std::thread([this, client] { serve_connection(client); }).detach();
  }
}

void LineServer::start() {
  accept_thread_ = std::thread([this] { run(); });
}

void LineServer::stop() {
  stopping_ = true;
  if (accept_thread_.joinable()) accept_thread_.join();
  {
    std::unique_lock lock(mu_);
    for (const int fd : clients_) ::shutdown(fd, SHUT_RDWR);
    drained_.wait(lock, [this] { return clients_.empty(); });
  }
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

void LineServer::serve_connection(int fd) {
  std::string pending;
  bool overflow = false;
  char buf[4096];
  for (;;) {
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    std::string replies;
    for (ssize_t i = 0; i < n; ++i) {
      const char c = buf[i];
      if (c != '\n') {
        if (pending.size() < kMaxLineLength) {
          pending.push_back(c);
        } else {
          overflow = true;
        }
        continue;
      }
      if (overflow) {
        replies += "ERR request too long\n";
      } else {
        try {
          replies += handler_(pending);
        } catch (const std::exception& e) {
          replies += std::string("ERR ") + e.what();
        }
        replies += '\n';
      }
      pending.clear();
      overflow = false;
    }
    if (!replies.empty() && !send_all(fd, replies)) break;
  }
  std::lock_guard lock(mu_);
  clients_.erase(fd);
  ::close(fd);
  drained_.notify_all();
}

}  // namespace dlbac
