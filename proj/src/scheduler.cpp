#include "agentnet/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "agentnet/error.hpp"

namespace agentnet {

namespace {

using SteadyClock = std::chrono::steady_clock;

struct TaskFailure {
  FailureReason reason;
  std::string detail;
};

FailureReason reason_for(Errc code) {
  switch (code) {
    case Errc::ExecutorTimeout: return FailureReason::Timeout;
    case Errc::ContractViolation: return FailureReason::ContractViolation;
    case Errc::UnknownService:
    case Errc::UnknownVertex: return FailureReason::UnknownService;
    default: return FailureReason::ExecutorError;
  }
}

std::string random_prefix() {
  std::random_device rd;
  return fmt::format("{:08x}", rd());
}

}  // namespace

void validate_config(const SchedulerConfig& c) {
  if (c.max_steps < 1) throw Error(Errc::ConfigError, "max_steps must be >= 1");
  if (!(c.deadline_s > 0.0) || !std::isfinite(c.deadline_s)) throw Error(Errc::ConfigError, "deadline_s must be > 0");
  if (!(c.stall_threshold > 0.0 && c.stall_threshold <= 1.0)) {
    throw Error(Errc::ConfigError, "stall_threshold must be in (0, 1]");
  }
  if (c.workers < 1) throw Error(Errc::ConfigError, "workers must be >= 1");
}

// ---------------------------------------------------------------------------

FlowRecord finalize(const Task& task, const ExecutionGraph& graph, const Json& final_ctx) {
  FlowRecord r;
  r.task_id = task.task_id;
  r.status = std::string(to_string(task.status));
  r.target = task.target;
  r.created_at = task.created_at;
  r.ended_at = task.ended_at.value_or(0);
  r.input_digest = canonical_json(task.payload);
  if (task.failure_reason) r.failure_reason = std::string(to_string(*task.failure_reason));

  std::map<std::string, std::int64_t> child_us;
  for (const auto& n : graph.nodes) {
    if (n.parent_inv) child_us[*n.parent_inv] += n.wall_time_us;
  }
  bool produced = false;
  for (const auto& n : graph.nodes) {
    ChainEntry e;
    e.vertex_id = n.vertex_id;
    e.vertex_kind = n.vertex_kind;
    e.status = std::string(to_string(n.status));
    auto it = child_us.find(n.inv_id);
    const std::int64_t own_us = n.wall_time_us - (it == child_us.end() ? 0 : it->second);
    e.wall_time_ms = std::max<std::int64_t>(0, own_us) / 1000;
    e.token_cost = n.token_cost;
    if (n.route_kind_used) e.route_kind_used = std::string(to_string(*n.route_kind_used));
    e.input_digest = canonical_json(n.input_ctx.values());
    r.total_time_ms += e.wall_time_ms;
    r.total_tokens += e.token_cost;
    produced = produced || n.status == InvocationStatus::Success;
    r.chain.push_back(std::move(e));
  }
  if (task.status == TaskStatus::Success || produced) r.output_digest = canonical_json(final_ctx);
  return r;
}

// ---------------------------------------------------------------------------

struct Scheduler::TaskState {
  mutable std::mutex mu;
  mutable std::condition_variable cv;
  Task task;
  ExecutionGraph graph;
  std::optional<FlowRecord> record;
};

class Scheduler::Runner {
 public:
  Runner(Scheduler& s, TaskState& st, std::shared_ptr<const AgentNetwork> net,
         std::shared_ptr<const Planner> planner, double deadline_s)
      : s_(s),
        st_(st),
        net_(std::move(net)),
        planner_(std::move(planner)),
        deadline_(SteadyClock::now() + std::chrono::microseconds(static_cast<std::int64_t>(deadline_s * 1e6))) {
    if (s_.deps_.registry) {
      for (const auto& d : s_.deps_.registry->list()) services_at_start_[d.vertex.id] = d.service_id;
    }
  }

  /// Drives the task to a terminal status; returns the final context values.
  Json run(const VertexId& target, const Json& payload) {
    ContextMap ctx = ContextMap::from_values(payload);
    mark_running();
    try {
      auto vertex = net_->find_shared(target);
      if (!vertex) throw TaskFailure{FailureReason::UnknownService, "target " + target + " left the network"};
      RouteUsed route = RouteUsed::Seed;
      while (true) {
        ContextMap out = invoke(vertex, ctx, route, std::nullopt, std::nullopt);
        for (const auto& [name, entry] : out.entries()) ctx.set(name, entry.value, entry.provenance);
        auto next = resolve_hard(*net_, vertex->id, ctx.values());
        if (!next) break;
        vertex = net_->find_shared(*next);
        if (!vertex) throw TaskFailure{FailureReason::UnknownService, *next};
        route = RouteUsed::Hard;
      }
      const Vertex* t = net_->find(target);
      auto final_check = check_params(ctx, t->output_schema());
      if (!final_check.ok()) {
        throw TaskFailure{FailureReason::ContractViolation, "final context: " + final_check.describe()};
      }
      finish(TaskStatus::Success, std::nullopt, {});
    } catch (const TaskFailure& f) {
      finish(TaskStatus::Fail, f.reason, f.detail);
    } catch (const std::exception& e) {
      finish(TaskStatus::Fail, FailureReason::ExecutorError, e.what());
    }
    return ctx.values();
  }

 private:
  ContextMap invoke(const std::shared_ptr<const Vertex>& vertex, const ContextMap& input, RouteUsed route,
                    const std::optional<std::string>& parent, const std::optional<std::string>& service_id,
                    bool reflection = false) {
    if (static_cast<int>(node_count()) >= s_.config_.max_steps) {
      throw TaskFailure{FailureReason::StepBudgetExhausted,
                        fmt::format("max_steps {} reached before {}", s_.config_.max_steps, vertex->id)};
    }
    const std::size_t idx = open_node(*vertex, input, route, parent, reflection);
    const std::string inv_id = st_.graph.nodes[idx].inv_id;  // immutable after creation
    const auto started = SteadyClock::now();
    std::int64_t tokens = 0;

    ContextMap output;
    try {
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline_ - started);
      if (remaining.count() <= 0) throw TaskFailure{FailureReason::Timeout, "deadline passed before " + vertex->id};

      auto pre = check_params(input, vertex->input_schema());
      if (!pre.ok()) throw TaskFailure{FailureReason::ContractViolation, vertex->id + " input: " + pre.describe()};

      Json produced;
      if (vertex->group() != nullptr) {
        produced = run_group(*vertex, input, inv_id);
      } else {
        std::optional<std::string> sid = service_id;
        if (!sid) {
          auto it = services_at_start_.find(vertex->id);
          if (it != services_at_start_.end()) sid = it->second;
        }
        if (sid && s_.deps_.registry && !s_.deps_.registry->get(*sid)) {
          throw TaskFailure{FailureReason::UnknownService, "service " + *sid + " was deregistered"};
        }
        try {
          ExecutionResult res = s_.deps_.backend->execute(*vertex, input.values(), ExecOptions{remaining});
          tokens = res.token_cost;
          produced = std::move(res.output);
        } catch (const Error& e) {
          throw TaskFailure{reason_for(e.code()), vertex->id + ": " + e.what()};
        } catch (const std::exception& e) {
          throw TaskFailure{FailureReason::ExecutorError, vertex->id + ": " + e.what()};
        }
      }

      auto post = check_params(produced, vertex->output_schema());
      if (!post.ok()) throw TaskFailure{FailureReason::ContractViolation, vertex->id + " output: " + post.describe()};
      output = ContextMap::from_values(produced, inv_id);
    } catch (const TaskFailure& f) {
      close_node(idx, started, tokens, std::nullopt, f.detail);
      throw;
    }
    close_node(idx, started, tokens, output, {});
    s_.publish(vertex->id, output.values());

    if (SteadyClock::now() > deadline_) throw TaskFailure{FailureReason::Timeout, "deadline passed after " + vertex->id};

    auto& hist = history_[vertex->id];
    hist.push_back(output.values());
    const auto decision = detect_stall(hist, reflections_[vertex->id], s_.config_.stall_threshold);
    if (decision.action == StallAction::Abort) {
      throw TaskFailure{FailureReason::StepBudgetExhausted,
                        fmt::format("{} stalled again after reflection (similarity {:.3f})", vertex->id,
                                    decision.similarity)};
    }
    if (decision.action == StallAction::Reflect) {
      ++reflections_[vertex->id];
      spdlog::info("task {}: {} repeated its output (similarity {:.3f}); reflecting", st_.task.task_id, vertex->id,
                   decision.similarity);
      ContextMap retry = input;
      retry.set("reflection_note",
                fmt::format("Your previous output was essentially identical to the one before it "
                            "(similarity {:.2f}). Revise the approach and produce a substantively different result.",
                            decision.similarity),
                inv_id);
      return invoke(vertex, retry, route, parent, service_id, true);
    }
    return output;
  }

  Json run_group(const Vertex& group, const ContextMap& input, const std::string& group_inv) {
    ContextMap gctx = input;
    std::set<VertexId> done;
    std::set<std::string> used_ext;
    const auto& members = group.group()->members;

    while (true) {
      auto plan = planner_->plan(*net_, group, gctx.values(), done);
      if (!plan.empty()) {
        for (const auto& id : plan) {
          auto member = net_->find_shared(id);
          if (!member) throw TaskFailure{FailureReason::UnknownService, "member " + id};
          ContextMap out = invoke(member, gctx, RouteUsed::Soft, group_inv, std::nullopt);
          for (const auto& [name, entry] : out.entries()) gctx.set(name, entry.value, entry.provenance);
          done.insert(id);
        }
        continue;
      }

      const bool all_done = std::all_of(members.begin(), members.end(), [&](const auto& m) { return done.count(m); });
      std::vector<std::string> missing;
      if (all_done) {
        for (const auto& p : group.output_schema().required_names()) {
          if (!gctx.contains(p)) missing.push_back(p);
        }
      } else {
        missing = missing_member_inputs(*net_, group, gctx.values(), done);
      }
      if (missing.empty()) {
        if (all_done) break;
        throw TaskFailure{FailureReason::ContractViolation, group.id + ": SOFT routes leave no runnable member"};
      }

      auto target = resolve_ext(*net_, s_.deps_.registry.get(), group.id, missing, gctx.values(), used_ext);
      const std::string missing_list = fmt::format("{}", fmt::join(missing, ","));
      if (!target) {
        throw TaskFailure{FailureReason::ContractViolation,
                          group.id + ": no member or EXT target can provide " + missing_list};
      }
      used_ext.insert(target->service_id.value_or(target->vertex->id));
      ContextMap out = invoke(target->vertex, gctx, RouteUsed::Ext, group_inv, target->service_id);
      const bool helped = std::any_of(missing.begin(), missing.end(), [&](const auto& p) { return out.contains(p); });
      for (const auto& [name, entry] : out.entries()) gctx.set(name, entry.value, entry.provenance);
      if (!helped) {
        throw TaskFailure{FailureReason::ContractViolation,
                          target->vertex->id + " did not produce any of " + missing_list};
      }
    }

    Json result = Json::object();
    for (const auto& p : group.output_schema().params) {
      if (const auto* e = gctx.find(p.name)) result[p.name] = e->value;
    }
    return result;
  }

  void mark_running() {
    std::lock_guard lock(st_.mu);
    st_.task.status = TaskStatus::Running;
    st_.task.started_at = now_ms();
    st_.task.status_history.push_back(TaskStatus::Running);
    st_.cv.notify_all();
  }

  std::size_t node_count() const {
    std::lock_guard lock(st_.mu);
    return st_.graph.nodes.size();
  }

  std::size_t open_node(const Vertex& v, const ContextMap& input, RouteUsed route,
                        const std::optional<std::string>& parent, bool reflection) {
    Invocation inv;
    inv.inv_id = fmt::format("{}:{}", st_.task.task_id, ++inv_counter_);
    inv.vertex_id = v.id;
    inv.vertex_kind = flow_vertex_kind(v);
    inv.parent_inv = parent;
    inv.input_ctx = input;
    inv.status = InvocationStatus::Running;
    inv.started_at = now_ms();
    inv.start_seq = ++seq_;
    inv.route_kind_used = route;
    inv.reflection = reflection;

    std::lock_guard lock(st_.mu);
    for (const auto& [name, entry] : input.entries()) {
      if (entry.provenance == kPayloadProvenance) continue;
      const Invocation* producer = st_.graph.find(entry.provenance);
      if (producer != nullptr && producer->output_ctx && producer->output_ctx->contains(name)) {
        st_.graph.edges.push_back({entry.provenance, inv.inv_id, name});
      }
    }
    st_.graph.nodes.push_back(std::move(inv));
    st_.cv.notify_all();
    return st_.graph.nodes.size() - 1;
  }

  void close_node(std::size_t idx, SteadyClock::time_point started, std::int64_t tokens,
                  std::optional<ContextMap> output, std::string error) {
    const auto us = std::chrono::duration_cast<std::chrono::microseconds>(SteadyClock::now() - started).count();
    std::lock_guard lock(st_.mu);
    auto& n = st_.graph.nodes[idx];
    n.status = output ? InvocationStatus::Success : InvocationStatus::Fail;
    n.output_ctx = std::move(output);
    n.ended_at = now_ms();
    n.end_seq = ++seq_;
    n.wall_time_us = us;
    n.token_cost = tokens;
    n.error = std::move(error);
  }

  void finish(TaskStatus status, std::optional<FailureReason> reason, std::string detail) {
    status_ = status;
    reason_ = reason;
    detail_ = std::move(detail);
  }

 public:
  TaskStatus status_ = TaskStatus::Fail;
  std::optional<FailureReason> reason_;
  std::string detail_;

 private:
  Scheduler& s_;
  TaskState& st_;
  std::shared_ptr<const AgentNetwork> net_;
  std::shared_ptr<const Planner> planner_;
  SteadyClock::time_point deadline_;
  std::uint64_t seq_ = 0;
  std::uint64_t inv_counter_ = 0;
  std::map<VertexId, std::vector<Json>> history_;
  std::map<VertexId, int> reflections_;
  std::map<VertexId, std::string> services_at_start_;
};

// ---------------------------------------------------------------------------

Scheduler::Scheduler(Deps deps, SchedulerConfig config)
    : deps_(std::move(deps)), config_(config), id_prefix_(random_prefix()) {
  validate_config(config_);
  if (!deps_.network) throw Error(Errc::ConfigError, "scheduler needs a network");
  if (!deps_.backend) deps_.backend = std::make_shared<DefaultExecutorBackend>();
  planner_ = std::make_shared<DefaultPlanner>();
  workers_.reserve(static_cast<std::size_t>(config_.workers));
  for (int i = 0; i < config_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

Scheduler::~Scheduler() {
  {
    std::lock_guard lock(queue_mutex_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  for (auto& t : workers_) t.join();
}

TaskId Scheduler::submit(const VertexId& target, const Json& payload, std::optional<double> deadline_s) {
  auto net = deps_.network->snapshot();
  const Vertex* v = net->find(target);
  if (v == nullptr) throw Error(Errc::UnknownVertex, target);
  if (!payload.is_object()) throw Error(Errc::InvalidPayload, "payload must be a JSON object");
  auto check = check_params(payload, v->input_schema());
  if (!check.ok()) throw Error(Errc::InvalidPayload, check.describe());
  const double deadline = deadline_s.value_or(config_.deadline_s);
  if (!(deadline > 0.0) || !std::isfinite(deadline)) throw Error(Errc::InvalidPayload, "deadline_s must be > 0");

  auto st = std::make_shared<TaskState>();
  {
    std::lock_guard lock(tasks_mutex_);
    st->task.task_id = fmt::format("t{}-{}", id_prefix_, ++next_id_);
    st->task.target = target;
    st->task.payload = payload;
    st->task.created_at = now_ms();
    st->task.deadline_s = deadline;
    st->graph.task_id = st->task.task_id;
    tasks_.emplace(st->task.task_id, st);
  }
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(st);
  }
  queue_cv_.notify_one();
  return st->task.task_id;
}

void Scheduler::worker_loop() {
  while (true) {
    std::shared_ptr<TaskState> st;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      st = std::move(queue_.front());
      queue_.pop_front();
    }
    try {
      run_task(*st);
    } catch (const std::exception& e) {
      spdlog::error("task runner crashed: {}", e.what());
    }
  }
}

void Scheduler::run_task(TaskState& st) {
  Runner runner(*this, st, deps_.network->snapshot(), planner(), st.task.deadline_s);
  const Json final_ctx = runner.run(st.task.target, st.task.payload);

  Task done;
  ExecutionGraph graph;
  {
    std::lock_guard lock(st.mu);
    done = st.task;
    graph = st.graph;
  }
  done.status = runner.status_;
  done.failure_reason = runner.reason_;
  done.failure_detail = runner.detail_;
  done.ended_at = now_ms();
  done.status_history.push_back(done.status);

  FlowRecord record = finalize(done, graph, final_ctx);
  if (deps_.flow_log) {
    try {
      deps_.flow_log->append(record);
    } catch (const Error& e) {
      spdlog::error("flow log append failed for {}: {}", done.task_id, e.what());
    }
  }
  if (done.status == TaskStatus::Fail) {
    spdlog::info("task {} failed: {} {}", done.task_id, to_string(*done.failure_reason), done.failure_detail);
  }

  std::lock_guard lock(st.mu);
  st.task = std::move(done);
  st.record = std::move(record);
  st.cv.notify_all();
}

std::shared_ptr<Scheduler::TaskState> Scheduler::state(const TaskId& id) const {
  std::lock_guard lock(tasks_mutex_);
  auto it = tasks_.find(id);
  if (it == tasks_.end()) throw Error(Errc::UnknownTask, id);
  return it->second;
}

Task Scheduler::get_status(const TaskId& id) const {
  auto st = state(id);
  std::lock_guard lock(st->mu);
  return st->task;
}

ExecutionGraph Scheduler::get_graph(const TaskId& id) const {
  auto st = state(id);
  std::lock_guard lock(st->mu);
  return st->graph;
}

std::optional<FlowRecord> Scheduler::flow_record(const TaskId& id) const {
  auto st = state(id);
  std::lock_guard lock(st->mu);
  return st->record;
}

std::vector<TaskId> Scheduler::task_ids() const {
  std::lock_guard lock(tasks_mutex_);
  std::vector<TaskId> ids;
  ids.reserve(tasks_.size());
  for (const auto& [id, _] : tasks_) ids.push_back(id);
  return ids;
}

Task Scheduler::wait(const TaskId& id, std::optional<std::chrono::milliseconds> timeout) const {
  auto st = state(id);
  std::unique_lock lock(st->mu);
  auto finished = [&] { return st->task.finished(); };
  if (timeout) {
    st->cv.wait_for(lock, *timeout, finished);
  } else {
    st->cv.wait(lock, finished);
  }
  return st->task;
}

void Scheduler::set_planner(std::shared_ptr<const Planner> planner) {
  std::lock_guard lock(policy_mutex_);
  planner_ = planner ? std::move(planner) : std::make_shared<DefaultPlanner>();
}

std::shared_ptr<const Planner> Scheduler::planner() const {
  std::lock_guard lock(policy_mutex_);
  return planner_;
}

void Scheduler::set_share_policy(SharePolicy policy) {
  auto net = deps_.network->snapshot();
  const Vertex* v = net->find(policy.vertex_id);
  if (v == nullptr) throw Error(Errc::UnknownVertex, policy.vertex_id);
  for (const auto& p : policy.shared_params) {
    if (v->output_schema().find(p) == nullptr) {
      throw Error(Errc::InvalidVertex, p + " is not an output of " + policy.vertex_id);
    }
  }
  std::lock_guard lock(policy_mutex_);
  if (policy.scope == SharePolicy::Scope::Off) {
    shared_.erase(policy.vertex_id);
    policies_.erase(policy.vertex_id);
    return;
  }
  policies_[policy.vertex_id] = std::move(policy);
}

Json Scheduler::read_shared(const VertexId& vertex_id) const {
  std::lock_guard lock(policy_mutex_);
  auto it = shared_.find(vertex_id);
  return it == shared_.end() ? Json::object() : it->second;
}

void Scheduler::publish(const VertexId& vertex_id, const Json& output) {
  std::lock_guard lock(policy_mutex_);
  auto it = policies_.find(vertex_id);
  if (it == policies_.end()) return;
  Json& slot = shared_[vertex_id];
  if (!slot.is_object()) slot = Json::object();
  for (const auto& p : it->second.shared_params) {
    if (output.contains(p)) slot[p] = output[p];
  }
}

}  // namespace agentnet
