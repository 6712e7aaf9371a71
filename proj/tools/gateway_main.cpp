#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "agentnet/error.hpp"
#include "agentnet/gateway.hpp"

namespace {
agentnet::Gateway* g_gateway = nullptr;

void on_signal(int) {
  if (g_gateway != nullptr) g_gateway->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agent network gateway: registry and scheduler over HTTP", "agentnet-gateway"};
  std::optional<std::string> config_file, listen, journal, flow_log;
  app.add_option("-c,--config", config_file, "JSON config file");
  app.add_option("--listen", listen, "host:port (overrides the config)");
  app.add_option("--journal", journal, "Registry journal path");
  app.add_option("--flow-log", flow_log, "Flow log path");
  CLI11_PARSE(app, argc, argv);

  try {
    auto config = agentnet::load_config(config_file);
    if (listen) config.listen_addr = *listen;
    if (journal) config.registry_journal_path = *journal;
    if (flow_log) config.flow_log_path = *flow_log;
    agentnet::validate_config(config);

    agentnet::Gateway gateway(std::move(config));
    g_gateway = &gateway;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    gateway.run();
    g_gateway = nullptr;
  } catch (const agentnet::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
