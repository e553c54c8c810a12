#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "../common/logging.hpp"
#include "hlip/io/json_io.hpp"
#include "server.hpp"

int main(int argc, char** argv) {
  hlip::tools::init_logging();
  CLI::App app{"H-LIP simulation service"};
  hlip::service::ServerConfig config;
  std::string scenario;
  app.add_option("--port", config.port, "listen port (0 picks one)");
  app.add_option("--address", config.address, "bind address");
  app.add_option("--timescale", config.timescale, "simulated seconds per wall second")->check(CLI::PositiveNumber);
  app.add_option("--telemetry-hz", config.telemetry_hz, "telemetry frame rate")->check(CLI::PositiveNumber);
  app.add_option("--scenario", scenario, "scenario JSON")->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  try {
    if (!scenario.empty()) config.session.scenario = hlip::io::load_scenario(scenario);
    // Block termination signals before any thread starts so only sigwait sees them.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    hlip::service::Server server(config);
    server.start();
    std::cout << "listening on " << config.address << ":" << server.port() << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    spdlog::info("signal {}, shutting down", sig);
    server.stop();
  } catch (const hlip::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == hlip::ErrorCode::Parse ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
