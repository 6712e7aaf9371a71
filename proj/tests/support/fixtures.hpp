#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "agentnet/executors.hpp"
#include "agentnet/network.hpp"

namespace agentnet::testing {

/// Schema from names; every parameter is required and of kind any unless
/// the name carries a suffix: "x?" optional, "x:number" typed.
ParameterSchema schema(std::initializer_list<std::string> names);
ParameterSchema schema(const std::vector<std::string>& names);

Vertex agent(const std::string& id, std::initializer_list<std::string> in, std::initializer_list<std::string> out,
             LogicBinding logic = BuiltinLogic{"identity"}, const std::string& description = {});
Vertex agent(const std::string& id, const std::vector<std::string>& in, const std::vector<std::string>& out,
             LogicBinding logic = BuiltinLogic{"identity"}, const std::string& description = {});
Vertex group(const std::string& id, std::vector<VertexId> members, std::initializer_list<std::string> in,
             std::initializer_list<std::string> out);
Vertex group(const std::string& id, std::vector<VertexId> members, const std::vector<std::string>& in,
             const std::vector<std::string>& out);

/// Vertex whose declared outputs are produced as "<id>.<param>" strings.
Vertex producer(const std::string& id, const std::vector<std::string>& in, const std::vector<std::string>& out);

/// Backend with per-vertex scripted behaviour. Unscripted vertexes fall back
/// to the default backend (builtins, commands, http).
class MockBackend final : public ExecutorBackend {
 public:
  using Fn = std::function<ExecutionResult(const Vertex&, const Json& ctx)>;

  void on(const VertexId& id, Fn fn);
  /// Emits "<vertex>.<param>" for every declared output, prefixed by any
  /// "sentinel" input as "<sentinel>/".
  void produce_outputs(const VertexId& id, std::int64_t tokens = 0);

  ExecutionResult execute(const Vertex& v, const Json& ctx, const ExecOptions& opts) override;

  int calls(const VertexId& id) const;
  int total_calls() const;

 private:
  mutable std::mutex mutex_;
  std::map<VertexId, Fn> scripts_;
  std::map<VertexId, int> calls_;
  DefaultExecutorBackend fallback_;
};

/// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::string& path() const noexcept { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

}  // namespace agentnet::testing
