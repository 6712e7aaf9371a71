#include "cli.hpp"

#include <cstdlib>
#include <fstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "agentnet/analytics.hpp"
#include "agentnet/error.hpp"
#include "agentnet/executors.hpp"
#include "agentnet/flowlog.hpp"
#include "agentnet/registry.hpp"

namespace agentnet::cli {

namespace {

struct DomainError {
  std::string message;
};

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError{"IoError: cannot read " + path};
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DomainError{"InvalidDescriptor: " + path + " is not valid JSON"};
  return j;
}

std::vector<Json> descriptors_in(const Json& j) {
  if (j.is_array()) return {j.begin(), j.end()};
  return {j};
}

class Api {
 public:
  explicit Api(const std::string& server) {
    auto parts = split_url(server);
    if (!parts) throw DomainError{"ConfigError: server must be an absolute http URL: " + server};
    client_ = std::make_unique<httplib::Client>(parts->first);
    client_->set_connection_timeout(5);
    client_->set_read_timeout(30);
    prefix_ = parts->second == "/" ? "" : parts->second;
  }

  httplib::Result get(const std::string& path) { return check(client_->Get(prefix_ + path)); }
  httplib::Result del(const std::string& path) { return check(client_->Delete(prefix_ + path)); }
  httplib::Result post(const std::string& path, const Json& body) {
    return check(client_->Post(prefix_ + path, body.dump(), "application/json"));
  }

 private:
  static httplib::Result check(httplib::Result res) {
    if (!res) throw DomainError{"cannot reach server: " + httplib::to_string(res.error())};
    if (res->status >= 400) {
      Json body = Json::parse(res->body, nullptr, false);
      if (!body.is_discarded() && body.is_object() && body.contains("message")) {
        throw DomainError{body["message"].get<std::string>()};
      }
      throw DomainError{"HTTP " + std::to_string(res->status) + ": " + res->body};
    }
    return res;
  }

  std::unique_ptr<httplib::Client> client_;
  std::string prefix_;
};

FlowLogScan scan_log(const std::string& path) {
  if (!std::filesystem::exists(path)) throw DomainError{"IoError: no such log " + path};
  return read_flow_log(path);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Operate an agent network gateway and analyze flow logs", "agentnet"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string server = "http://127.0.0.1:8080";
  if (const char* env = std::getenv("AGENTNET_SERVER"); env != nullptr && *env != '\0') server = env;
  app.add_option("--server", server, "Gateway base URL (env AGENTNET_SERVER)");

  std::string file;
  auto* reg = app.add_subcommand("register", "Register service descriptor(s) from a JSON file");
  reg->add_option("-f,--file", file, "Descriptor file (object or array)")->required();

  std::string id;
  auto* dereg = app.add_subcommand("deregister", "Remove a service");
  dereg->add_option("id", id, "Service id")->required();

  std::string vertex, input = "{}";
  std::optional<double> deadline;
  auto* submit = app.add_subcommand("submit", "Submit a task and print its id");
  submit->add_option("--vertex", vertex, "Entry vertex")->required();
  submit->add_option("--input", input, "Payload as a JSON object");
  submit->add_option("--deadline", deadline, "Deadline in seconds");

  auto* status = app.add_subcommand("status", "Show a task");
  status->add_option("id", id, "Task id")->required();

  std::string format;
  auto* graph = app.add_subcommand("graph", "Show a task's execution graph");
  graph->add_option("id", id, "Task id")->required();
  graph->add_option("--format", format, "dot or json")->check(CLI::IsMember({"dot", "json"}));

  std::string log;
  auto* stats = app.add_subcommand("stats", "Aggregate a flow log");
  stats->add_option("--log", log, "Flow log (JSONL)")->required();
  stats->add_option("--format", format, "table or json")->check(CLI::IsMember({"table", "json"}));
  bool vertexes = false;
  stats->add_flag("--vertexes", vertexes, "Also print per-vertex rows and the frequency histogram");

  auto* contrib = app.add_subcommand("contribution", "Per-vertex contribution scores");
  contrib->add_option("--log", log, "Flow log (JSONL)")->required();

  double min_support = 0.0, min_lift = 1.0;
  bool apply = false;
  auto* mine = app.add_subcommand("mine", "Propose HARD routes from recurring successful chains");
  mine->add_option("--log", log, "Flow log (JSONL)")->required();
  mine->add_option("--min-support", min_support, "Minimum support in (0, 1]")->required();
  mine->add_option("--min-lift", min_lift, "Minimum success lift");
  mine->add_flag("--apply", apply, "Add the proposed routes through the gateway");

  auto* validate = app.add_subcommand("validate", "Check descriptor(s) offline");
  validate->add_option("-f,--file", file, "Descriptor file (object or array)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 2;
  }

  try {
    if (*reg) {
      Api api(server);
      for (const auto& d : descriptors_in(read_json_file(file))) {
        auto res = api.post("/v1/services", d);
        out << Json::parse(res->body)["service_id"].get<std::string>() << "\n";
      }
    } else if (*dereg) {
      Api(server).del("/v1/services/" + id);
    } else if (*submit) {
      Json payload = Json::parse(input, nullptr, false);
      if (payload.is_discarded() || !payload.is_object()) {
        err << "--input must be a JSON object\n";
        return 2;
      }
      Json body{{"target", vertex}, {"payload", payload}};
      if (deadline) body["deadline_s"] = *deadline;
      auto res = Api(server).post("/v1/tasks", body);
      out << Json::parse(res->body)["task_id"].get<std::string>() << "\n";
    } else if (*status) {
      out << Json::parse(Api(server).get("/v1/tasks/" + id)->body).dump(2) << "\n";
    } else if (*graph) {
      auto res = Api(server).get("/v1/tasks/" + id + "/graph?format=" + (format.empty() ? "json" : format));
      if (format == "dot") {
        out << res->body;
      } else {
        out << Json::parse(res->body).dump(2) << "\n";
      }
    } else if (*stats) {
      auto scan = scan_log(log);
      auto report = compute_stats(scan.records, scan.skipped);
      if (format == "json") {
        Json j = to_json(report);
        if (vertexes) j["vertex_stats"] = to_json(compute_vertex_stats(scan.records));
        out << j.dump(2) << "\n";
      } else {
        out << render_tables(report);
        if (vertexes) {
          out << "\nVertexes (most invoked first)\n";
          for (const auto& [vid, n] : compute_vertex_stats(scan.records).histogram) out << vid << "  " << n << "\n";
        }
      }
    } else if (*contrib) {
      auto scan = scan_log(log);
      Json j = Json::object();
      for (const auto& [vid, score] : contribution(scan.records)) j[vid] = score;
      out << j.dump(2) << "\n";
    } else if (*mine) {
      if (!(min_support > 0.0 && min_support <= 1.0)) {
        err << "--min-support must be in (0, 1]\n";
        return 2;
      }
      auto scan = scan_log(log);
      std::vector<Route> existing;
      std::unique_ptr<Api> api;
      if (apply) {
        api = std::make_unique<Api>(server);
        for (const auto& r : Json::parse(api->get("/v1/routes")->body)["routes"]) existing.push_back(route_from_json(r));
      }
      Json proposed = Json::array();
      for (const auto& m : mine_hard_routes(scan.records, min_support, min_lift, existing)) {
        proposed.push_back(to_json(m));
        if (api) api->post("/v1/routes", route_to_json(m.route));
      }
      out << proposed.dump(2) << "\n";
    } else if (*validate) {
      bool ok = true;
      for (const auto& d : descriptors_in(read_json_file(file))) {
        try {
          ServiceDescriptor desc = descriptor_from_json(d);
          auto report = validate_vertex(desc.vertex);
          for (const auto& v : report.violations) err << desc.service_id << ": " << v << "\n";
          if (report.ok()) {
            out << desc.service_id << ": ok\n";
          } else {
            ok = false;
          }
        } catch (const Error& e) {
          err << e.what() << "\n";
          ok = false;
        }
      }
      return ok ? 0 : 1;
    }
  } catch (const DomainError& e) {
    err << e.message << "\n";
    return 1;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace agentnet::cli
