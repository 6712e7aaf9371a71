#include "agentnet/gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "agentnet/error.hpp"

namespace agentnet {

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

template <class T, class Parse>
void override_from_env(const char* name, T& field, Parse parse) {
  auto v = env(name);
  if (!v) return;
  try {
    std::size_t used = 0;
    T parsed = parse(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    field = parsed;
  } catch (const std::exception&) {
    throw Error(Errc::ConfigError, std::string(name) + " is not a number: " + *v);
  }
}

int http_status(Errc code) {
  switch (code) {
    case Errc::UnknownVertex:
    case Errc::UnknownService:
    case Errc::UnknownTask: return 404;
    case Errc::DuplicateId:
    case Errc::DuplicateService: return 409;
    case Errc::InvalidPayload:
    case Errc::InvalidVertex:
    case Errc::InvalidDescriptor:
    case Errc::EmptyQuery:
    case Errc::InvalidQuery:
    case Errc::SelfLoop:
    case Errc::UnknownEndpoint:
    case Errc::SoftRouteOutsideGroup:
    case Errc::ExtRouteInsideGroup:
    case Errc::WouldEmptyGroup:
    case Errc::CycleDetected:
    case Errc::ParseError: return 400;
    default: return 500;
  }
}

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, {{"error", code}, {"message", message}});
}

Json parse_body(const httplib::Request& req) {
  Json j = Json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::InvalidPayload, "request body is not valid JSON");
  return j;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Wraps a handler so domain errors become {"error","message"} bodies.
httplib::Server::Handler guarded(std::function<void(const httplib::Request&, httplib::Response&)> fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "InternalError", e.what());
    }
  };
}

}  // namespace

// ---------------------------------------------------------------------------

GatewayConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigError, "config must be a JSON object");
  static const std::set<std::string> known{"listen_addr",  "registry_journal_path", "flow_log_path", "max_steps",
                                           "deadline_s",   "stall_threshold",       "workers",       "t_suspect_ms",
                                           "t_dead_ms",    "llm"};
  GatewayConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (known.count(it.key()) == 0) throw Error(Errc::ConfigError, "unknown config key " + it.key());
    }
    c.listen_addr = j.value("listen_addr", c.listen_addr);
    if (j.contains("registry_journal_path")) c.registry_journal_path = j["registry_journal_path"].get<std::string>();
    if (j.contains("flow_log_path")) c.flow_log_path = j["flow_log_path"].get<std::string>();
    c.scheduler.max_steps = j.value("max_steps", c.scheduler.max_steps);
    c.scheduler.deadline_s = j.value("deadline_s", c.scheduler.deadline_s);
    c.scheduler.stall_threshold = j.value("stall_threshold", c.scheduler.stall_threshold);
    c.scheduler.workers = j.value("workers", c.scheduler.workers);
    c.liveness.suspect_after_ms = j.value("t_suspect_ms", c.liveness.suspect_after_ms);
    c.liveness.dead_after_ms = j.value("t_dead_ms", c.liveness.dead_after_ms);
    if (j.contains("llm")) {
      const Json& l = j["llm"];
      if (!l.is_object()) throw Error(Errc::ConfigError, "llm must be an object");
      c.llm.base_url = l.value("base_url", c.llm.base_url);
      c.llm.api_key = l.value("api_key", c.llm.api_key);
      c.llm.model = l.value("model", c.llm.model);
      c.llm.timeout_s = l.value("timeout_s", c.llm.timeout_s);
      c.llm.max_concurrency = l.value("max_concurrency", c.llm.max_concurrency);
      c.llm.temperature = l.value("temperature", c.llm.temperature);
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  return c;
}

void apply_env_overrides(GatewayConfig& c) {
  override_from_env("MAX_STEPS", c.scheduler.max_steps,
                    [](const std::string& s, std::size_t* n) { return std::stoi(s, n); });
  override_from_env("DEADLINE_S", c.scheduler.deadline_s,
                    [](const std::string& s, std::size_t* n) { return std::stod(s, n); });
  override_from_env("STALL_THRESHOLD", c.scheduler.stall_threshold,
                    [](const std::string& s, std::size_t* n) { return std::stod(s, n); });
  override_from_env("T_SUSPECT", c.liveness.suspect_after_ms,
                    [](const std::string& s, std::size_t* n) { return static_cast<TimestampMs>(std::stoll(s, n)); });
  override_from_env("T_DEAD", c.liveness.dead_after_ms,
                    [](const std::string& s, std::size_t* n) { return static_cast<TimestampMs>(std::stoll(s, n)); });
  c.llm = LlmSettings::from_env(c.llm);
}

std::pair<std::string, int> parse_listen_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw Error(Errc::ConfigError, "listen_addr must be host:port, got '" + addr + "'");
  }
  std::string host = addr.substr(0, colon);
  if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  const std::string port_text = addr.substr(colon + 1);
  if (port_text.find_first_not_of("0123456789") != std::string::npos || port_text.size() > 5) {
    throw Error(Errc::ConfigError, "bad port in listen_addr '" + addr + "'");
  }
  const int port = std::stoi(port_text);
  if (port > 65535) throw Error(Errc::ConfigError, "port out of range in '" + addr + "'");
  return {host, port};
}

void validate_config(const GatewayConfig& c) {
  parse_listen_addr(c.listen_addr);
  validate_config(c.scheduler);
  if (!(c.liveness.suspect_after_ms > 0 && c.liveness.suspect_after_ms <= c.liveness.dead_after_ms)) {
    throw Error(Errc::ConfigError, "liveness thresholds must satisfy 0 < T_SUSPECT <= T_DEAD");
  }
  if (c.llm.timeout_s <= 0 || c.llm.max_concurrency < 1) throw Error(Errc::ConfigError, "bad LLM limits");
}

GatewayConfig load_config(const std::optional<std::filesystem::path>& file) {
  GatewayConfig c;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw Error(Errc::ConfigError, "cannot read config " + file->string());
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::ConfigError, "config is not valid JSON: " + file->string());
    c = config_from_json(j);
  }
  apply_env_overrides(c);
  validate_config(c);
  return c;
}

// ---------------------------------------------------------------------------

Gateway::Gateway(GatewayConfig config, std::shared_ptr<ExecutorBackend> backend)
    : config_(std::move(config)), network_(std::make_shared<NetworkOwner>()) {
  validate_config(config_);

  Registry::Options ro;
  ro.thresholds = config_.liveness;
  ro.journal_path = config_.registry_journal_path;
  registry_ = std::make_shared<Registry>(std::move(ro));
  // Services that survive in the journal come back as vertexes; groups are
  // retried until their members exist.
  std::vector<Vertex> pending;
  for (const auto& d : registry_->list()) pending.push_back(d.vertex);
  for (bool progress = true; progress && !pending.empty();) {
    progress = false;
    for (auto it = pending.begin(); it != pending.end();) {
      try {
        if (!network_->snapshot()->contains(it->id)) network_->add_vertex(*it);
        it = pending.erase(it);
        progress = true;
      } catch (const Error&) {
        ++it;
      }
    }
  }
  for (const auto& v : pending) spdlog::warn("journaled service {} could not be added to the network", v.id);

  if (config_.flow_log_path) flow_log_ = std::make_shared<FlowLog>(*config_.flow_log_path);
  if (!backend) {
    std::shared_ptr<LlmExecutor> llm;
    if (!config_.llm.base_url.empty()) {
      llm = std::make_shared<LlmExecutor>(
          config_.llm, std::make_shared<HttpChatTransport>(config_.llm.base_url, config_.llm.api_key));
    }
    backend = std::make_shared<DefaultExecutorBackend>(std::move(llm));
  }
  scheduler_ = std::make_unique<Scheduler>(Scheduler::Deps{network_, std::move(backend), registry_, flow_log_},
                                           config_.scheduler);
  server_ = std::make_unique<httplib::Server>();
  mount();
}

Gateway::~Gateway() { stop(); }

int Gateway::bind() {
  auto [host, port] = parse_listen_addr(config_.listen_addr);
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    if (port_ < 0) throw Error(Errc::BindError, "cannot bind " + config_.listen_addr);
  } else {
    if (!server_->bind_to_port(host, port)) throw Error(Errc::BindError, "cannot bind " + config_.listen_addr);
    port_ = port;
  }
  return port_;
}

int Gateway::start() {
  bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  spdlog::info("gateway listening on port {}", port_);
  return port_;
}

void Gateway::run() {
  bind();
  spdlog::info("gateway listening on port {}", port_);
  server_->listen_after_bind();
}

void Gateway::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void Gateway::mount() {
  auto& srv = *server_;

  srv.Get("/v1/health", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"status", "ok"}, {"network_version", network_->snapshot()->version()}});
          }));

  srv.Post("/v1/services", guarded([this](const httplib::Request& req, httplib::Response& res) {
             ServiceDescriptor d = descriptor_from_json(parse_body(req));
             const bool added = !network_->snapshot()->contains(d.vertex.id);
             if (added) network_->add_vertex(d.vertex);
             try {
               const std::string id = registry_->register_service(d);
               send_json(res, 201, {{"service_id", id}});
             } catch (const Error&) {
               if (added) network_->remove_vertex(d.vertex.id);
               throw;
             }
           }));

  srv.Get("/v1/services", guarded([this](const httplib::Request& req, httplib::Response& res) {
            DiscoveryQuery q;
            if (req.has_param("name")) q.name_substring = req.get_param_value("name");
            if (req.has_param("keywords")) q.description_keywords = split_list(req.get_param_value("keywords"));
            if (req.has_param("outputs")) {
              ParameterSchema s;
              for (auto& p : split_list(req.get_param_value("outputs"))) s.params.push_back({p, ParamKind::Any, {}, true});
              q.required_output = std::move(s);
            }
            if (req.has_param("top_k")) {
              try {
                q.top_k = static_cast<std::size_t>(std::stoul(req.get_param_value("top_k")));
              } catch (const std::exception&) {
                throw Error(Errc::InvalidQuery, "top_k must be a positive integer");
              }
            }
            q.include_dead = req.get_param_value("include_dead") == "true";
            Json hits = Json::array();
            for (const auto& h : registry_->discover(q)) {
              Json item{{"service_id", h.service_id},
                        {"score", h.score},
                        {"liveness", std::string(to_string(registry_->liveness(h.service_id)))}};
              if (auto d = registry_->get(h.service_id)) item["descriptor"] = descriptor_to_json(*d);
              hits.push_back(std::move(item));
            }
            send_json(res, 200, {{"results", std::move(hits)}});
          }));

  srv.Get(R"(/v1/services/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            auto d = registry_->get(id);
            if (!d) throw Error(Errc::UnknownService, id);
            Json j = descriptor_to_json(*d);
            j["liveness"] = std::string(to_string(registry_->liveness(id)));
            send_json(res, 200, j);
          }));

  srv.Delete(R"(/v1/services/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1];
               auto d = registry_->get(id);
               registry_->deregister(id);
               if (d) {
                 try {
                   network_->remove_vertex(d->vertex.id);
                 } catch (const Error& e) {
                   spdlog::warn("vertex {} kept in the network: {}", d->vertex.id, e.what());
                 }
               }
               res.status = 204;
             }));

  srv.Post(R"(/v1/services/([^/]+)/heartbeat)",
           guarded([this](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             const Liveness l = registry_->heartbeat(id);
             send_json(res, 200, {{"service_id", id}, {"liveness", std::string(to_string(l))}});
           }));

  srv.Get("/v1/routes", guarded([this](const httplib::Request&, httplib::Response& res) {
            Json routes = Json::array();
            for (const auto& r : network_->snapshot()->routes()) routes.push_back(route_to_json(r));
            send_json(res, 200, {{"routes", std::move(routes)}});
          }));

  srv.Post("/v1/routes", guarded([this](const httplib::Request& req, httplib::Response& res) {
             Route r;
             try {
               r = route_from_json(parse_body(req));
             } catch (const Json::exception& e) {
               throw Error(Errc::InvalidPayload, e.what());
             }
             auto snap = network_->add_route(r);
             send_json(res, 201, {{"route", route_to_json(r)}, {"network_version", snap->version()}});
           }));

  srv.Post("/v1/tasks", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const Json body = parse_body(req);
             if (!body.is_object() || !body.contains("target") || !body["target"].is_string()) {
               throw Error(Errc::InvalidPayload, "body must be {\"target\": str, \"payload\": {...}}");
             }
             std::optional<double> deadline;
             if (body.contains("deadline_s") && !body["deadline_s"].is_null()) {
               if (!body["deadline_s"].is_number()) throw Error(Errc::InvalidPayload, "deadline_s must be a number");
               deadline = body["deadline_s"].get<double>();
             }
             const TaskId id =
                 scheduler_->submit(body["target"].get<std::string>(), body.value("payload", Json::object()), deadline);
             send_json(res, 202, {{"task_id", id}});
           }));

  srv.Get(R"(/v1/tasks/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            Json j = to_json(scheduler_->get_status(id));
            if (auto rec = scheduler_->flow_record(id)) {
              j["chain_length"] = rec->chain.size();
              j["total_time_ms"] = rec->total_time_ms;
              j["total_tokens"] = rec->total_tokens;
            }
            send_json(res, 200, j);
          }));

  srv.Get(R"(/v1/tasks/([^/]+)/graph)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const ExecutionGraph g = scheduler_->get_graph(req.matches[1]);
            const std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
            if (format == "dot") {
              res.status = 200;
              res.set_content(to_dot(g), "text/vnd.graphviz");
            } else if (format == "json") {
              send_json(res, 200, to_json(g));
            } else {
              throw Error(Errc::InvalidQuery, "format must be json or dot");
            }
          }));

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, "NotFound", "no such endpoint");
  });
}

}  // namespace agentnet
