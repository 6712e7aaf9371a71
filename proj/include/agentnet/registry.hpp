#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "agentnet/network.hpp"

namespace agentnet {

/// Milliseconds since the Unix epoch.
using TimestampMs = std::int64_t;

TimestampMs now_ms();

enum class Liveness { Alive, Suspect, Dead };

std::string_view to_string(Liveness l) noexcept;

struct LivenessThresholds {
  TimestampMs suspect_after_ms = 30'000;
  TimestampMs dead_after_ms = 120'000;
};

/// alive if age < suspect, suspect if suspect <= age < dead, dead otherwise.
Liveness compute_liveness(TimestampMs now, TimestampMs last_heartbeat,
                          const LivenessThresholds& t) noexcept;

struct ServiceDescriptor {
  std::string service_id;
  Vertex vertex;
  std::optional<std::string> endpoint_url;
  TimestampMs registered_at = 0;
  TimestampMs last_heartbeat = 0;
  std::vector<std::string> tags;
};

Json descriptor_to_json(const ServiceDescriptor& d);
/// Accepts either {"service_id"?, "vertex": {...}, "endpoint_url"?, "tags"?}
/// or a bare vertex descriptor (service_id defaults to the vertex id).
ServiceDescriptor descriptor_from_json(const Json& j);

struct DiscoveryQuery {
  std::optional<std::string> name_substring;
  std::optional<std::vector<std::string>> description_keywords;
  std::optional<ParameterSchema> required_output;
  std::optional<Json> acceptable_input;
  std::size_t top_k = 10;
  bool include_dead = false;

  bool has_scoring_criterion() const noexcept {
    return description_keywords.has_value() || required_output.has_value() ||
           acceptable_input.has_value();
  }
};

struct ScoreWeights {
  double keywords = 0.4;
  double output_coverage = 0.3;
  double input_acceptability = 0.3;
};

/// Relevance of one service to a query, in [0, 1].
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(const DiscoveryQuery& q, const ServiceDescriptor& s) const = 0;
};

/// Weighted sum of keyword overlap (query keywords found in the service
/// name + description), output coverage, and input acceptability.
class WeightedScorer final : public Scorer {
 public:
  explicit WeightedScorer(ScoreWeights w = {}) : weights_(w) {}
  double score(const DiscoveryQuery& q, const ServiceDescriptor& s) const override;

  static double keyword_overlap(const std::vector<std::string>& keywords, const ServiceDescriptor& s);
  static double output_coverage(const ParameterSchema& required, const ServiceDescriptor& s);
  static double input_acceptability(const Json& input, const ServiceDescriptor& s);

 private:
  ScoreWeights weights_;
};

struct DiscoveryHit {
  std::string service_id;
  double score = 0.0;

  bool operator==(const DiscoveryHit&) const = default;
};

class Registry {
 public:
  using Clock = std::function<TimestampMs()>;

  struct Options {
    LivenessThresholds thresholds;
    /// When set, every mutation is appended here and the file is replayed on
    /// construction.
    std::optional<std::filesystem::path> journal_path;
    Clock clock;  // defaults to now_ms
    std::shared_ptr<const Scorer> scorer;  // defaults to WeightedScorer
  };

  Registry() : Registry(Options{}) {}
  explicit Registry(Options options);

  Registry(const Registry&) = delete;
  Registry& operator=(const Registry&) = delete;

  std::string register_service(ServiceDescriptor desc);
  void deregister(const std::string& service_id);
  Liveness heartbeat(const std::string& service_id);

  std::optional<ServiceDescriptor> get(const std::string& service_id) const;
  Liveness liveness(const std::string& service_id) const;
  std::vector<ServiceDescriptor> list() const;
  std::size_t size() const;

  std::vector<DiscoveryHit> discover(const DiscoveryQuery& q) const;

  TimestampMs now() const { return clock_(); }
  const LivenessThresholds& thresholds() const noexcept { return thresholds_; }

  /// Number of journal lines skipped during replay.
  std::size_t replay_skipped() const noexcept { return replay_skipped_; }

 private:
  void replay();
  void journal(const Json& line);

  LivenessThresholds thresholds_;
  std::optional<std::filesystem::path> journal_path_;
  Clock clock_;
  std::shared_ptr<const Scorer> scorer_;

  mutable std::shared_mutex mutex_;
  std::map<std::string, ServiceDescriptor> services_;
  std::size_t replay_skipped_ = 0;
};

}  // namespace agentnet
