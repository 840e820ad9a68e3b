#pragma once

#include <atomic>
#include <cstdint>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <thread>

namespace dlbac {

// Newline-delimited request/reply server over TCP. Every request line gets
// exactly one reply line from `handler`; each connection runs on its own
// thread. `handler` must be safe to call concurrently.
class LineServer {
 public:
  using Handler = std::function<std::string(std::string_view)>;

  explicit LineServer(Handler handler);
  ~LineServer();
  LineServer(const LineServer&) = delete;
  LineServer& operator=(const LineServer&) = delete;

  // Binds and listens; port 0 picks a free port. Returns the bound port.
  // Throws Error when the endpoint cannot be bound.
  std::uint16_t bind(const std::string& host, std::uint16_t port);
  std::uint16_t port() const { return port_; }

  // Accept loop; returns after stop().
  void run();
  // run() on a background thread.
  void start();
  // Closes the listener and every open connection, then joins threads.
  void stop();

  static constexpr std::size_t kMaxLineLength = 4096;

 private:
  void serve_connection(int fd);

  Handler handler_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::condition_variable drained_;
  std::set<int> clients_;  // open connections, each served by a detached thread
};

// "HOST:PORT" -> (host, port). Throws ConfigError.
std::pair<std::string, std::uint16_t> parse_endpoint(std::string_view endpoint);

}  // namespace dlbac
