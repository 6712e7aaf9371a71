#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "agentnet/flowlog.hpp"
#include "agentnet/llm.hpp"
#include "agentnet/registry.hpp"
#include "agentnet/scheduler.hpp"

namespace httplib {
class Server;
}

namespace agentnet {

struct GatewayConfig {
  std::string listen_addr = "127.0.0.1:8080";
  std::optional<std::filesystem::path> registry_journal_path;
  std::optional<std::filesystem::path> flow_log_path;
  SchedulerConfig scheduler;
  LivenessThresholds liveness;
  LlmSettings llm;
};

/// Keys: listen_addr, registry_journal_path, flow_log_path, max_steps,
/// deadline_s, stall_threshold, workers, t_suspect_ms, t_dead_ms, and an
/// "llm" object (base_url, api_key, model, timeout_s, max_concurrency).
/// Unknown keys are rejected. Throws Error(ConfigError).
GatewayConfig config_from_json(const Json& j);

/// MAX_STEPS, DEADLINE_S, STALL_THRESHOLD, T_SUSPECT, T_DEAD (milliseconds)
/// and the LLM_* variables override the corresponding fields.
void apply_env_overrides(GatewayConfig& c);

/// File (if given) then environment; validated.
GatewayConfig load_config(const std::optional<std::filesystem::path>& file);

void validate_config(const GatewayConfig& c);

/// "host:port" with port in [0, 65535]. Throws Error(ConfigError).
std::pair<std::string, int> parse_listen_addr(const std::string& addr);

/// Registry, network, scheduler and flow log behind one HTTP server.
class Gateway {
 public:
  explicit Gateway(GatewayConfig config, std::shared_ptr<ExecutorBackend> backend = nullptr);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  /// Throws Error(BindError).
  int start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();

  int port() const noexcept { return port_; }
  Registry& registry() noexcept { return *registry_; }
  Scheduler& scheduler() noexcept { return *scheduler_; }
  NetworkOwner& network() noexcept { return *network_; }
  const GatewayConfig& config() const noexcept { return config_; }

 private:
  void mount();
  int bind();

  GatewayConfig config_;
  std::shared_ptr<NetworkOwner> network_;
  std::shared_ptr<Registry> registry_;
  std::shared_ptr<FlowLog> flow_log_;
  std::unique_ptr<Scheduler> scheduler_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace agentnet
