#include "dlbac/server.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "dlbac/engine.h"
#include "dlbac/error.h"
#include "dlbac/rng.h"

namespace dlbac {
namespace {

class Client {
 public:
  explicit Client(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      throw Error("connect failed");
    }
  }
  ~Client() { ::close(fd_); }

  void send(const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) throw Error("send failed");
      sent += static_cast<std::size_t>(n);
    }
  }

  // Empty optional-like: returns "" on EOF.
  std::string read_line() {
    while (true) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) return "";
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::string request(const std::string& line) {
    send(line + "\n");
    return read_line();
  }

 private:
  int fd_ = -1;
  std::string buffer_;
};

Dataset small_dataset() {
  std::vector<AuthorizationTuple> tuples;
  for (EntityId u = 0; u < 5; ++u) {
    for (EntityId r = 0; r < 4; ++r) {
      tuples.push_back({100 + u, 200 + r,
                        {static_cast<MetaValue>(u), static_cast<MetaValue>(u % 2)},
                        {static_cast<MetaValue>(r)},
                        {static_cast<std::uint8_t>((u + r) % 2), 1}});
    }
  }
  return Dataset(2, 1, 2, std::move(tuples));
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const Dataset data = small_dataset();
    Encoder enc = build_encoder(data, EncodingScheme::kOneHot);
    Network net = init_network({enc.width(), {6}, 2, 5});
    engine = std::make_unique<DecisionEngine>(std::move(net), std::move(enc),
                                              build_store(data));
    server = std::make_unique<LineServer>(
        [this](std::string_view line) { return engine->handle_request(line); });
    port = server->bind("127.0.0.1", 0);
    server->start();
  }
  void TearDown() override { server->stop(); }

  std::unique_ptr<DecisionEngine> engine;
  std::unique_ptr<LineServer> server;
  std::uint16_t port = 0;
};

TEST_F(ServerTest, BindsEphemeralPort) {
  EXPECT_NE(port, 0);
  EXPECT_EQ(server->port(), port);
  Client c(port);
  EXPECT_EQ(c.request("PING"), "PONG");
}

TEST_F(ServerTest, AgreesWithDirectDecisions) {
  Client c(port);
  for (EntityId u = 100; u < 105; ++u) {
    for (EntityId r = 200; r < 204; ++r) {
      for (std::size_t k = 0; k < 2; ++k) {
        const std::string line =
            "DECIDE " + std::to_string(u) + " " + std::to_string(r) + " " + std::to_string(k);
        EXPECT_EQ(c.request(line), format_decision(engine->decide(u, r, k)));
      }
    }
  }
}

TEST_F(ServerTest, EveryLineGetsOneGrammaticalReply) {
  const std::regex decision("^(GRANT|DENY) [01]\\.[0-9]{6}$");
  const std::regex error("^ERR [^\\n]+$");
  SplitMix64 rng(42);
  std::vector<std::string> lines;
  for (int i = 0; i < 1000; ++i) {
    switch (rng.uniform(6)) {
      case 0: lines.push_back("PING"); break;
      case 1:
        lines.push_back("DECIDE " + std::to_string(100 + rng.uniform(5)) + " " +
                        std::to_string(200 + rng.uniform(4)) + " " +
                        std::to_string(rng.uniform(2)));
        break;
      case 2: lines.push_back("DECIDE " + std::to_string(rng.uniform(1000)) + " 200 0"); break;
      case 3: lines.push_back("DECIDE 100 200 " + std::to_string(rng.uniform(10))); break;
      case 4: lines.push_back("HELLO world"); break;
      default: lines.push_back("DECIDE x " + std::string(rng.uniform(5), 'y')); break;
    }
  }
  Client c(port);
  // Pipeline everything at once; replies must come back in order.
  std::string all;
  for (const auto& l : lines) all += l + "\n";
  c.send(all);
  for (const auto& l : lines) {
    const std::string reply = c.read_line();
    EXPECT_EQ(reply, engine->handle_request(l));
    if (l == "PING") {
      EXPECT_EQ(reply, "PONG");
    } else {
      EXPECT_TRUE(std::regex_match(reply, decision) || std::regex_match(reply, error))
          << l << " -> " << reply;
    }
  }
}

TEST_F(ServerTest, ConcurrentClients) {
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      Client c(port);
      for (int i = 0; i < 100; ++i) {
        const EntityId u = 100 + static_cast<EntityId>((t + i) % 5);
        const EntityId r = 200 + static_cast<EntityId>(i % 4);
        const std::string reply = c.request("DECIDE " + std::to_string(u) + " " +
                                            std::to_string(r) + " 1");
        if (reply != format_decision(engine->decide(u, r, 1))) ++mismatches;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(mismatches.load(), 0);
}

TEST_F(ServerTest, OverlongLineIsRejected) {
  Client c(port);
  EXPECT_EQ(c.request(std::string(LineServer::kMaxLineLength + 10, 'A')),
            "ERR request too long");
  EXPECT_EQ(c.request("PING"), "PONG");
}

TEST_F(ServerTest, CarriageReturnsAreTolerated) {
  Client c(port);
  EXPECT_EQ(c.request("PING\r"), "PONG");
}

TEST_F(ServerTest, StopClosesOpenConnections) {
  Client c(port);
  EXPECT_EQ(c.request("PING"), "PONG");
  server->stop();
  EXPECT_EQ(c.read_line(), "");
}

TEST(ParseEndpoint, HostAndPort) {
  EXPECT_EQ(parse_endpoint("127.0.0.1:7070"), std::make_pair(std::string("127.0.0.1"),
                                                             std::uint16_t{7070}));
  EXPECT_EQ(parse_endpoint("localhost:0").second, 0);
  EXPECT_THROW(parse_endpoint("nohost"), ConfigError);
  EXPECT_THROW(parse_endpoint("h:70000"), ConfigError);
  EXPECT_THROW(parse_endpoint("h:abc"), ConfigError);
}

}  // namespace
}  // namespace dlbac
