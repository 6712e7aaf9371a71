#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "agentnet/executors.hpp"
#include "agentnet/flowlog.hpp"
#include "agentnet/registry.hpp"
#include "agentnet/routing.hpp"
#include "agentnet/task.hpp"

namespace agentnet {

struct SchedulerConfig {
  int max_steps = 32;
  double deadline_s = 600.0;
  double stall_threshold = kDefaultStallThreshold;
  int workers = 4;
};

/// Throws Error(ConfigError) on non-positive limits or a threshold outside (0, 1].
void validate_config(const SchedulerConfig& c);

struct SharePolicy {
  enum class Scope { Off, ReadOnly };
  VertexId vertex_id;
  std::vector<std::string> shared_params;
  Scope scope = Scope::Off;
};

/// Builds the persisted trace of a finished task. Group entries carry
/// exclusive time: their own minus their direct members'.
FlowRecord finalize(const Task& task, const ExecutionGraph& graph, const Json& final_ctx);

class Scheduler {
 public:
  struct Deps {
    std::shared_ptr<NetworkOwner> network;
    std::shared_ptr<ExecutorBackend> backend;
    std::shared_ptr<Registry> registry;  // optional; enables discovery-based EXT
    std::shared_ptr<FlowLog> flow_log;   // optional
  };

  Scheduler(Deps deps, SchedulerConfig config = {});
  ~Scheduler();

  Scheduler(const Scheduler&) = delete;
  Scheduler& operator=(const Scheduler&) = delete;

  /// Throws UnknownVertex, or InvalidPayload when the payload is not an
  /// object, fails the target's input schema, or the deadline is not positive.
  TaskId submit(const VertexId& target, const Json& payload, std::optional<double> deadline_s = std::nullopt);

  Task get_status(const TaskId& id) const;
  ExecutionGraph get_graph(const TaskId& id) const;
  std::optional<FlowRecord> flow_record(const TaskId& id) const;
  std::vector<TaskId> task_ids() const;

  /// Blocks until the task finishes or `timeout` elapses; returns the latest
  /// snapshot either way.
  Task wait(const TaskId& id, std::optional<std::chrono::milliseconds> timeout = std::nullopt) const;

  void set_planner(std::shared_ptr<const Planner> planner);
  /// Throws UnknownVertex, or InvalidVertex if a shared parameter is not an
  /// output of the vertex.
  void set_share_policy(SharePolicy policy);
  /// Latest published values of a read_only-shared vertex; {} when nothing
  /// has been published.
  Json read_shared(const VertexId& vertex_id) const;

  const SchedulerConfig& config() const noexcept { return config_; }
  NetworkOwner& network() noexcept { return *deps_.network; }

 private:
  struct TaskState;
  class Runner;

  std::shared_ptr<TaskState> state(const TaskId& id) const;
  void worker_loop();
  void run_task(TaskState& st);
  void publish(const VertexId& vertex_id, const Json& output);
  std::shared_ptr<const Planner> planner() const;

  Deps deps_;
  SchedulerConfig config_;
  std::string id_prefix_;

  mutable std::mutex tasks_mutex_;
  std::map<TaskId, std::shared_ptr<TaskState>> tasks_;
  std::uint64_t next_id_ = 0;

  mutable std::mutex policy_mutex_;
  std::shared_ptr<const Planner> planner_;
  std::map<VertexId, SharePolicy> policies_;
  std::map<VertexId, Json> shared_;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<std::shared_ptr<TaskState>> queue_;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace agentnet
