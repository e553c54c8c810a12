#include "server.hpp"

#include <chrono>
#include <deque>
#include <map>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

namespace hlip::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

constexpr std::size_t kMaxQueuedFrames = 64;

class WsSession;

// Client registry and fan-out. Only touched from the I/O thread.
struct Hub {
  std::map<std::uint64_t, std::weak_ptr<WsSession>> clients;
  std::shared_ptr<const std::string> latest_frame;
  std::string health = "{}";
  std::uint64_t next_id = 1;
  std::function<void(std::uint64_t, Command)> submit;

  void broadcast(const std::shared_ptr<const std::string>& frame);
  void send_to(std::uint64_t id, const std::shared_ptr<const std::string>& text);
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, Hub& hub) : ws_(std::move(socket)), hub_(hub), id_(hub.next_id++) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void send(const std::shared_ptr<const std::string>& text) {
    if (closing_) return;
    if (queue_.size() >= kMaxQueuedFrames) return;
    queue_.push_back(text);
    if (queue_.size() == 1) do_write();
  }

  std::uint64_t id() const { return id_; }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    hub_.clients[id_] = weak_from_this();
    spdlog::info("client {} connected", id_);
    if (hub_.latest_frame) send(hub_.latest_frame);
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      hub_.clients.erase(id_);
      spdlog::info("client {} left: {}", id_, ec.message());
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
      hub_.submit(id_, parse_command_text(text));
    } catch (const Error& e) {
      spdlog::warn("client {} protocol violation: {}", id_, e.what());
      close_violation();
      return;
    }
    do_read();
  }

  void close_violation() {
    closing_ = true;
    hub_.clients.erase(id_);
    ws_.async_close(websocket::close_reason(websocket::close_code::policy_error, "protocol violation"),
                    [self = shared_from_this()](beast::error_code) {});
  }

  void do_write() {
    ws_.async_write(net::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_write(ec); });
  }

  void on_write(beast::error_code ec) {
    if (ec) {
      queue_.clear();
      hub_.clients.erase(id_);
      return;
    }
    queue_.pop_front();
    if (!queue_.empty() && !closing_) do_write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  Hub& hub_;
  std::uint64_t id_;
  bool closing_ = false;
};

void Hub::broadcast(const std::shared_ptr<const std::string>& frame) {
  latest_frame = frame;
  std::vector<std::shared_ptr<WsSession>> live;
  for (auto it = clients.begin(); it != clients.end();) {
    if (auto s = it->second.lock()) {
      live.push_back(std::move(s));
      ++it;
    } else {
      it = clients.erase(it);
    }
  }
  for (const auto& s : live) s->send(frame);
}

void Hub::send_to(std::uint64_t id, const std::shared_ptr<const std::string>& text) {
  const auto it = clients.find(id);
  if (it == clients.end()) return;
  if (auto s = it->second.lock()) s->send(text);
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Hub& hub) : stream_(std::move(socket)), hub_(hub) {}

  void run() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (websocket::is_upgrade(req_) && req_.target() == "/ws") {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), hub_)->run(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(req_.keep_alive());
    res->set(http::field::server, "hlip-sim-service");
    if (req_.method() == http::verb::get && req_.target() == "/health") {
      nlohmann::json health = nlohmann::json::parse(hub_.health, nullptr, false);
      if (health.is_discarded()) health = nlohmann::json::object();
      health["clients"] = hub_.clients.size();
      res->result(http::status::ok);
      res->set(http::field::content_type, "application/json");
      res->body() = health.dump();
    } else {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "application/json");
      res->body() = R"({"error":"not found"})";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res->keep_alive()) {
        self->do_read();
      } else {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      }
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  Hub& hub_;
};

}  // namespace

struct Server::Impl {
  explicit Impl(ServerConfig c) : config(std::move(c)), acceptor(ioc), session(config.session) {}

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<HttpSession>(std::move(socket), hub)->run();
      if (acceptor.is_open()) do_accept();
    });
  }

  void post_text(std::uint64_t id, std::string text) {
    auto shared = std::make_shared<const std::string>(std::move(text));
    net::post(ioc, [this, id, shared] { hub.send_to(id, shared); });
  }

  void drain_commands() {
    std::deque<std::pair<std::uint64_t, Command>> batch;
    {
      std::lock_guard<std::mutex> lock(queue_mutex);
      batch.swap(queue);
    }
    for (auto& [id, cmd] : batch) {
      const CommandResult r = session.apply(cmd);
      if (!r.ok) spdlog::info("rejected {}: {}", command_name(cmd), r.message);
      post_text(id, r.to_json(cmd).dump());
    }
  }

  // Single owner of the simulation state.
  void sim_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration<double>(1.0 / config.telemetry_hz);
    auto next = clock::now();
    while (running) {
      next += std::chrono::duration_cast<clock::duration>(period);
      drain_commands();
      const double target = session.time() + period.count() * config.timescale;
      while (running && !session.paused() && !session.fell() && session.time() < target - 1e-12) {
        session.tick();
        drain_commands();
      }
      auto frame = std::make_shared<const std::string>(session.telemetry().dump());
      std::string health = session.health().dump();
      net::post(ioc, [this, frame, health = std::move(health)]() mutable {
        hub.health = std::move(health);
        hub.broadcast(frame);
      });
      const auto now = clock::now();
      if (next < now) next = now;
      std::this_thread::sleep_until(next);
    }
  }

  ServerConfig config;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  Hub hub;
  SimSession session;
  std::atomic<bool> running{false};
  std::mutex queue_mutex;
  std::deque<std::pair<std::uint64_t, Command>> queue;
  std::thread io_thread;
  std::thread sim_thread;
  std::optional<net::executor_work_guard<net::io_context::executor_type>> work;
};

Server::Server(ServerConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
  impl_->hub.submit = [impl = impl_.get()](std::uint64_t id, Command cmd) {
    std::lock_guard<std::mutex> lock(impl->queue_mutex);
    impl->queue.emplace_back(id, std::move(cmd));
  };
  impl_->hub.health = impl_->session.health().dump();
}

Server::~Server() { stop(); }

void Server::start() {
  Impl& s = *impl_;
  if (!(s.config.telemetry_hz > 0.0) || !(s.config.timescale > 0.0))
    throw Error(ErrorCode::InvalidParams, "telemetry rate and timescale must be positive");
  const tcp::endpoint endpoint(net::ip::make_address(s.config.address), s.config.port);
  s.acceptor.open(endpoint.protocol());
  s.acceptor.set_option(net::socket_base::reuse_address(true));
  s.acceptor.bind(endpoint);
  s.acceptor.listen(net::socket_base::max_listen_connections);
  s.running = true;
  s.work.emplace(net::make_work_guard(s.ioc));
  s.do_accept();
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  s.sim_thread = std::thread([&s] { s.sim_loop(); });
  spdlog::info("listening on {}:{}", s.config.address, port());
}

void Server::stop() {
  Impl& s = *impl_;
  s.running = false;
  if (s.sim_thread.joinable()) s.sim_thread.join();
  if (s.io_thread.joinable()) {
    net::post(s.ioc, [&s] {
      beast::error_code ec;
      s.acceptor.close(ec);
    });
    s.work.reset();
    s.ioc.stop();
    s.io_thread.join();
  }
}

void Server::wait() {
  Impl& s = *impl_;
  while (s.running) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

}  // namespace hlip::service
