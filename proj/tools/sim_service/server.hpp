#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "hlip/service/session.hpp"

namespace hlip::service {

struct ServerConfig {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;  ///< 0 picks a free port
  double timescale = 1.0;     ///< simulated seconds per wall second
  double telemetry_hz = 30.0;
  SessionConfig session;
};

/// WebSocket telemetry/command server with a simulation loop on its own thread.
class Server {
 public:
  explicit Server(ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts the I/O and simulation threads; throws on bind failure.
  void start();
  void stop();
  /// Blocks until stop() is called from another thread or a signal.
  void wait();

  std::uint16_t port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hlip::service
