#include "agentnet/registry.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <mutex>

#include <spdlog/spdlog.h>

#include "agentnet/error.hpp"
#include "agentnet/jsonl.hpp"

namespace agentnet {

TimestampMs now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string_view to_string(Liveness l) noexcept {
  switch (l) {
    case Liveness::Alive: return "alive";
    case Liveness::Suspect: return "suspect";
    case Liveness::Dead: return "dead";
  }
  return "dead";
}

Liveness compute_liveness(TimestampMs now, TimestampMs last_heartbeat,
                          const LivenessThresholds& t) noexcept {
  const TimestampMs age = now - last_heartbeat;
  if (age < t.suspect_after_ms) return Liveness::Alive;
  if (age < t.dead_after_ms) return Liveness::Suspect;
  return Liveness::Dead;
}

Json descriptor_to_json(const ServiceDescriptor& d) {
  Json j{{"service_id", d.service_id},
         {"vertex", vertex_to_json(d.vertex)},
         {"registered_at", d.registered_at},
         {"last_heartbeat", d.last_heartbeat},
         {"tags", d.tags}};
  if (d.endpoint_url) j["endpoint_url"] = *d.endpoint_url;
  return j;
}

ServiceDescriptor descriptor_from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidDescriptor, "descriptor must be an object");
  ServiceDescriptor d;
  if (auto it = j.find("vertex"); it != j.end()) {
    d.vertex = vertex_from_json(*it);
    d.service_id = j.value("service_id", d.vertex.id);
    if (auto e = j.find("endpoint_url"); e != j.end() && e->is_string()) d.endpoint_url = e->get<std::string>();
    if (auto t = j.find("tags"); t != j.end() && t->is_array()) {
      for (const auto& tag : *t) {
        if (tag.is_string()) d.tags.push_back(tag.get<std::string>());
      }
    }
    d.registered_at = j.value("registered_at", TimestampMs{0});
    d.last_heartbeat = j.value("last_heartbeat", d.registered_at);
  } else {
    d.vertex = vertex_from_json(j);
    d.service_id = d.vertex.id;
    if (const auto* ext = d.vertex.external(); ext != nullptr && !ext->endpoint_url.empty()) {
      d.endpoint_url = ext->endpoint_url;
    }
  }
  if (d.service_id.empty()) throw Error(Errc::InvalidDescriptor, "empty service_id");
  return d;
}

// ---------------------------------------------------------------------------

double WeightedScorer::keyword_overlap(const std::vector<std::string>& keywords,
                                       const ServiceDescriptor& s) {
  std::set<std::string> query;
  for (const auto& k : keywords) {
    auto t = keyword_tokens(k);
    query.insert(t.begin(), t.end());
  }
  if (query.empty()) return 0.0;
  const auto service = keyword_tokens(s.vertex.name() + " " + s.vertex.description());
  std::size_t hits = 0;
  for (const auto& q : query) hits += service.count(q);
  return static_cast<double>(hits) / static_cast<double>(query.size());
}

double WeightedScorer::output_coverage(const ParameterSchema& required, const ServiceDescriptor& s) {
  std::set<std::string> wanted;
  for (const auto& p : required.params) wanted.insert(p.name);
  if (wanted.empty()) return 0.0;
  std::size_t covered = 0;
  for (const auto& name : wanted) {
    if (s.vertex.output_schema().find(name) != nullptr) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(wanted.size());
}

double WeightedScorer::input_acceptability(const Json& input, const ServiceDescriptor& s) {
  return check_params(input, s.vertex.input_schema()).ok() ? 1.0 : 0.0;
}

double WeightedScorer::score(const DiscoveryQuery& q, const ServiceDescriptor& s) const {
  double total = 0.0;
  if (q.description_keywords) total += weights_.keywords * keyword_overlap(*q.description_keywords, s);
  if (q.required_output) total += weights_.output_coverage * output_coverage(*q.required_output, s);
  if (q.acceptable_input) total += weights_.input_acceptability * input_acceptability(*q.acceptable_input, s);
  return std::clamp(total, 0.0, 1.0);
}

// ---------------------------------------------------------------------------

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

Registry::Registry(Options options)
    : thresholds_(options.thresholds),
      journal_path_(std::move(options.journal_path)),
      clock_(options.clock ? std::move(options.clock) : Clock(&now_ms)),
      scorer_(options.scorer ? std::move(options.scorer) : std::make_shared<const WeightedScorer>()) {
  if (thresholds_.suspect_after_ms <= 0 || thresholds_.dead_after_ms < thresholds_.suspect_after_ms) {
    throw Error(Errc::ConfigError, "liveness thresholds must satisfy 0 < suspect <= dead");
  }
  if (journal_path_) replay();
}

void Registry::replay() {
  for (const auto& line : read_lines(*journal_path_)) {
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    try {
      if (j.is_discarded() || !j.is_object()) throw Error(Errc::IoError, "malformed line");
      const std::string event = j.at("event").get<std::string>();
      const std::string id = j.at("service_id").get<std::string>();
      const TimestampMs ts = j.at("ts").get<TimestampMs>();
      if (event == "register") {
        ServiceDescriptor d = descriptor_from_json(j.at("descriptor"));
        d.service_id = id;
        d.registered_at = ts;
        d.last_heartbeat = ts;
        services_[id] = std::move(d);
      } else if (event == "deregister") {
        services_.erase(id);
      } else if (event == "heartbeat") {
        if (auto it = services_.find(id); it != services_.end()) {
          it->second.last_heartbeat = std::max(ts, it->second.registered_at);
        }
      } else {
        throw Error(Errc::IoError, "unknown event " + event);
      }
    } catch (const std::exception& e) {
      ++replay_skipped_;
      spdlog::warn("registry journal: skipping line: {}", e.what());
    }
  }
}

void Registry::journal(const Json& line) {
  if (journal_path_) append_line(*journal_path_, canonical_json(line));
}

std::string Registry::register_service(ServiceDescriptor desc) {
  if (desc.service_id.empty()) throw Error(Errc::InvalidDescriptor, "empty service_id");
  auto report = validate_vertex(desc.vertex);
  if (!report.ok()) throw Error(Errc::InvalidDescriptor, report.violations.front());

  std::unique_lock lock(mutex_);
  const TimestampMs now = clock_();
  if (auto it = services_.find(desc.service_id); it != services_.end()) {
    if (compute_liveness(now, it->second.last_heartbeat, thresholds_) == Liveness::Alive) {
      throw Error(Errc::DuplicateService, desc.service_id);
    }
  }
  desc.registered_at = now;
  desc.last_heartbeat = now;
  journal({{"ts", now}, {"event", "register"}, {"service_id", desc.service_id},
           {"descriptor", descriptor_to_json(desc)}});
  auto id = desc.service_id;
  services_[id] = std::move(desc);
  return id;
}

void Registry::deregister(const std::string& service_id) {
  std::unique_lock lock(mutex_);
  auto it = services_.find(service_id);
  if (it == services_.end()) throw Error(Errc::UnknownService, service_id);
  journal({{"ts", clock_()}, {"event", "deregister"}, {"service_id", service_id}});
  services_.erase(it);
}

Liveness Registry::heartbeat(const std::string& service_id) {
  std::unique_lock lock(mutex_);
  auto it = services_.find(service_id);
  if (it == services_.end()) throw Error(Errc::UnknownService, service_id);
  const TimestampMs now = std::max(clock_(), it->second.registered_at);
  journal({{"ts", now}, {"event", "heartbeat"}, {"service_id", service_id}});
  it->second.last_heartbeat = now;
  return compute_liveness(now, now, thresholds_);
}

std::optional<ServiceDescriptor> Registry::get(const std::string& service_id) const {
  std::shared_lock lock(mutex_);
  auto it = services_.find(service_id);
  if (it == services_.end()) return std::nullopt;
  return it->second;
}

Liveness Registry::liveness(const std::string& service_id) const {
  std::shared_lock lock(mutex_);
  auto it = services_.find(service_id);
  if (it == services_.end()) throw Error(Errc::UnknownService, service_id);
  return compute_liveness(clock_(), it->second.last_heartbeat, thresholds_);
}

std::vector<ServiceDescriptor> Registry::list() const {
  std::shared_lock lock(mutex_);
  std::vector<ServiceDescriptor> out;
  out.reserve(services_.size());
  for (const auto& [_, d] : services_) out.push_back(d);
  return out;
}

std::size_t Registry::size() const {
  std::shared_lock lock(mutex_);
  return services_.size();
}

std::vector<DiscoveryHit> Registry::discover(const DiscoveryQuery& q) const {
  if (!q.name_substring && !q.has_scoring_criterion()) throw Error(Errc::EmptyQuery);
  if (q.top_k < 1) throw Error(Errc::InvalidQuery, "top_k must be >= 1");

  const std::string needle = q.name_substring ? lower(*q.name_substring) : std::string();
  std::vector<DiscoveryHit> hits;
  {
    std::shared_lock lock(mutex_);
    const TimestampMs now = clock_();
    for (const auto& [id, d] : services_) {
      if (!q.include_dead && compute_liveness(now, d.last_heartbeat, thresholds_) == Liveness::Dead) continue;
      if (q.name_substring && lower(d.vertex.name()).find(needle) == std::string::npos &&
          lower(id).find(needle) == std::string::npos) {
        continue;
      }
      // Name-only queries score every match 1.0.
      const double s = q.has_scoring_criterion() ? scorer_->score(q, d) : 1.0;
      if (s > 0.0) hits.push_back({id, std::clamp(s, 0.0, 1.0)});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const DiscoveryHit& a, const DiscoveryHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.service_id < b.service_id;
  });
  if (hits.size() > q.top_k) hits.resize(q.top_k);
  return hits;
}

}  // namespace agentnet
