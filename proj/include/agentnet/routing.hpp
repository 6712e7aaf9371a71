#pragma once

#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "agentnet/network.hpp"
#include "agentnet/registry.hpp"

namespace agentnet {

/// Orders the members of a group for execution.
class Planner {
 public:
  virtual ~Planner() = default;
  /// Members not in `done`, in execution order. May stop early when the
  /// rest cannot run on `ctx`; an empty result means nothing can run.
  virtual std::vector<VertexId> plan(const AgentNetwork& net, const Vertex& group, const Json& ctx,
                                     const std::set<VertexId>& done) const = 0;
};

/// Data-dependency planner. Repeatedly takes the earliest member (in
/// membership order) whose required inputs are available from the context
/// plus outputs of members already planned, and whose SOFT predecessors
/// inside the group have been planned.
class DefaultPlanner final : public Planner {
 public:
  std::vector<VertexId> plan(const AgentNetwork& net, const Vertex& group, const Json& ctx,
                             const std::set<VertexId>& done) const override;
};

/// Full plan for a fresh group execution. Throws ContractViolation if ctx
/// does not satisfy the group's input schema and NoSatisfiableMember if no
/// member can start.
std::vector<VertexId> plan_group(const AgentNetwork& net, std::string_view group_id, const Json& ctx,
                                 const Planner& planner = DefaultPlanner{});

/// Required inputs of the not-yet-run members that `ctx` lacks, sorted.
std::vector<std::string> missing_member_inputs(const AgentNetwork& net, const Vertex& group, const Json& ctx,
                                               const std::set<VertexId>& done);

/// HARD successor of `current`: among routes whose guard holds on ctx, the
/// smallest priority, ties broken by target id. Malformed guards count as
/// false.
std::optional<VertexId> resolve_hard(const AgentNetwork& net, std::string_view current, const Json& ctx);

bool guard_allows(const Route& r, const Json& ctx);

struct ExtTarget {
  std::shared_ptr<const Vertex> vertex;
  /// Set when the target came from registry discovery rather than a route.
  std::optional<std::string> service_id;
};

/// Capability expansion for a group that is missing parameters: explicit
/// EXT routes first (priority order, guard-filtered, covering at least one
/// missing parameter), then the best registry match producing at least one
/// of them. The group itself, everything nested in it, and `exclude` are
/// never returned.
std::optional<ExtTarget> resolve_ext(const AgentNetwork& net, const Registry* registry, std::string_view group_id,
                                     const std::vector<std::string>& missing, const Json& ctx,
                                     const std::set<std::string>& exclude = {});

enum class StallAction { Continue, Reflect, Abort };

struct StallDecision {
  StallAction action = StallAction::Continue;
  double similarity = 0.0;
};

inline constexpr double kDefaultStallThreshold = 0.95;

/// Compares the last two outputs of one vertex within one task. At or above
/// the threshold the first stall asks for reflection, the next one aborts.
StallDecision detect_stall(std::span<const Json> history, int prior_reflections,
                           double threshold = kDefaultStallThreshold);

}  // namespace agentnet
