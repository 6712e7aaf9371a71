#include "agentnet/analytics.hpp"

#include <algorithm>
#include <array>
#include <set>

#include <fmt/format.h>

#include "agentnet/error.hpp"

namespace agentnet {

namespace {

constexpr std::array<const char*, 4> kStatuses{"New", "Running", "Success", "Fail"};
constexpr std::array<const char*, 4> kKinds{"agent", "rpa", "group", "external"};

std::string kind_label(std::string_view kind) {
  if (kind == "agent") return "Agent";
  if (kind == "rpa") return "RPA";
  if (kind == "group") return "Group";
  if (kind == "external") return "External";
  return std::string(kind);
}

double mean(std::int64_t sum, std::size_t n) {
  return n == 0 ? 0.0 : static_cast<double>(sum) / static_cast<double>(n);
}

double mean_seconds(std::int64_t sum_ms, std::size_t n) {
  return n == 0 ? 0.0 : static_cast<double>(sum_ms) / (1000.0 * static_cast<double>(n));
}

double percent(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

bool executed(const ChainEntry& e) { return e.status == "success" || e.status == "fail"; }

}  // namespace

StatsReport compute_stats(std::span<const FlowRecord> records, std::size_t skipped) {
  StatsReport rep;
  rep.records = records.size();
  rep.skipped = skipped;

  struct StatusAcc {
    std::size_t count = 0;
    std::int64_t chain = 0, time = 0, tokens = 0;
  };
  struct KindAcc {
    std::size_t by_status[4] = {0, 0, 0, 0};
    std::size_t executed = 0, ok = 0;
    std::int64_t time = 0, tokens = 0;
  };
  std::map<std::string, StatusAcc> st;
  std::map<std::string, KindAcc> kinds;

  for (const auto& r : records) {
    auto& a = st[r.status];
    ++a.count;
    a.chain += static_cast<std::int64_t>(r.chain.size());
    a.time += r.total_time_ms;
    a.tokens += r.total_tokens;
    for (const auto& e : r.chain) {
      auto& k = kinds[e.vertex_kind];
      if (e.status == "pending") ++k.by_status[0];
      if (e.status == "running") ++k.by_status[1];
      if (e.status == "success") ++k.by_status[2];
      if (e.status == "fail") ++k.by_status[3];
      if (executed(e)) {
        ++k.executed;
        if (e.status == "success") ++k.ok;
        k.time += e.wall_time_ms;
        k.tokens += e.token_cost;
      }
    }
  }

  for (const char* s : kStatuses) {
    const auto& a = st[s];
    rep.statuses.push_back({s, a.count, percent(a.count, records.size()), mean(a.chain, a.count),
                            mean_seconds(a.time, a.count), mean(a.tokens, a.count)});
  }
  for (const char* kind : kKinds) {
    const auto& k = kinds[kind];
    SubtaskRow row{kind, 0, k.by_status[0], k.by_status[1], k.by_status[2], k.by_status[3]};
    row.total = row.new_count + row.running + row.success + row.fail;
    rep.subtasks.push_back(row);

    ProtocolRow p{kind, k.executed, mean_seconds(k.time, k.executed), std::nullopt, percent(k.ok, k.executed)};
    if (std::string_view(kind) != "rpa") p.avg_tokens = mean(k.tokens, k.executed);
    rep.protocols.push_back(p);
  }
  return rep;
}

VertexStats compute_vertex_stats(std::span<const FlowRecord> records) {
  struct Acc {
    std::string kind;
    std::size_t n = 0, ok = 0;
    std::int64_t time = 0, tokens = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : records) {
    for (const auto& e : r.chain) {
      if (!executed(e)) continue;
      auto& a = acc[e.vertex_id];
      if (a.kind.empty()) a.kind = e.vertex_kind;
      ++a.n;
      if (e.status == "success") ++a.ok;
      a.time += e.wall_time_ms;
      a.tokens += e.token_cost;
    }
  }
  VertexStats out;
  for (const auto& [id, a] : acc) {
    VertexRow row{id, a.kind, a.n, a.ok, mean_seconds(a.time, a.n), std::nullopt, percent(a.ok, a.n)};
    if (a.kind != "rpa") row.avg_tokens = mean(a.tokens, a.n);
    out.rows.push_back(row);
    out.histogram.emplace_back(id, a.n);
  }
  std::stable_sort(out.histogram.begin(), out.histogram.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  return out;
}

double text_jaccard(std::string_view a, std::string_view b) { return jaccard(token_set(a), token_set(b)); }

std::map<std::string, double> contribution(std::span<const FlowRecord> records, const Similarity& similarity) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (r.status != "Success") continue;
    for (const auto& e : r.chain) {
      auto& [sum, n] = acc[e.vertex_id];
      sum += similarity(e.input_digest, r.output_digest);
      ++n;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [id, a] : acc) out[id] = a.first / static_cast<double>(a.second);
  return out;
}

std::vector<MinedRoute> mine_hard_routes(std::span<const FlowRecord> records, double min_support, double min_lift,
                                         const std::vector<Route>& existing) {
  if (!(min_support > 0.0 && min_support <= 1.0)) throw Error(Errc::InvalidQuery, "min_support must be in (0, 1]");

  using Pair = std::pair<std::string, std::string>;
  std::map<Pair, std::pair<std::size_t, std::size_t>> counts;  // (records containing, successful ones)
  std::size_t successes = 0;
  for (const auto& r : records) {
    const bool ok = r.status == "Success";
    if (ok) ++successes;
    std::set<Pair> seen;
    for (std::size_t i = 1; i < r.chain.size(); ++i) {
      if (r.chain[i - 1].vertex_id != r.chain[i].vertex_id) seen.emplace(r.chain[i - 1].vertex_id, r.chain[i].vertex_id);
    }
    for (const auto& p : seen) {
      auto& c = counts[p];
      ++c.first;
      if (ok) ++c.second;
    }
  }
  if (successes == 0) return {};

  std::set<Pair> present;
  for (const auto& r : existing) {
    if (r.kind == RouteKind::Hard) present.emplace(r.from, r.to);
  }

  const double p_success = static_cast<double>(successes) / static_cast<double>(records.size());
  std::vector<MinedRoute> out;
  for (const auto& [pair, c] : counts) {
    if (present.count(pair) != 0 || c.second == 0) continue;
    const double support = static_cast<double>(c.second) / static_cast<double>(successes);
    const double lift = (static_cast<double>(c.second) / static_cast<double>(c.first)) / p_success;
    if (support < min_support || lift < min_lift) continue;
    MinedRoute m;
    m.route = Route{pair.first, pair.second, RouteKind::Hard, 0, std::nullopt};
    m.support = support;
    m.lift = lift;
    m.success_count = c.second;
    out.push_back(std::move(m));
  }
  // Stable sort over (from, to)-ordered counts; ties stay lexicographic.
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.support > b.support; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].route.priority = static_cast<int>(i);
  return out;
}

Json to_json(const StatsReport& r) {
  Json statuses = Json::array();
  for (const auto& s : r.statuses) {
    statuses.push_back({{"status", s.status},
                        {"count", s.count},
                        {"pct", s.pct},
                        {"avg_chain_len", s.avg_chain_len},
                        {"avg_time_s", s.avg_time_s},
                        {"avg_tokens", s.avg_tokens}});
  }
  Json subtasks = Json::array();
  for (const auto& s : r.subtasks) {
    subtasks.push_back({{"kind", s.kind},
                        {"total", s.total},
                        {"New", s.new_count},
                        {"Running", s.running},
                        {"Success", s.success},
                        {"Fail", s.fail}});
  }
  Json protocols = Json::array();
  for (const auto& p : r.protocols) {
    protocols.push_back({{"kind", p.kind},
                         {"invocations", p.invocations},
                         {"avg_time_s", p.avg_time_s},
                         {"avg_tokens", p.avg_tokens ? Json(*p.avg_tokens) : Json()},
                         {"success_rate", p.success_rate}});
  }
  return {{"records", r.records},
          {"skipped", r.skipped},
          {"statuses", std::move(statuses)},
          {"subtasks", std::move(subtasks)},
          {"protocols", std::move(protocols)}};
}

Json to_json(const VertexStats& v) {
  Json rows = Json::array();
  for (const auto& r : v.rows) {
    rows.push_back({{"vertex_id", r.vertex_id},
                    {"vertex_kind", r.vertex_kind},
                    {"invocations", r.invocations},
                    {"avg_time_s", r.avg_time_s},
                    {"avg_tokens", r.avg_tokens ? Json(*r.avg_tokens) : Json()},
                    {"success_rate", r.success_rate}});
  }
  Json hist = Json::array();
  for (const auto& [id, n] : v.histogram) hist.push_back({{"vertex_id", id}, {"count", n}});
  return {{"vertexes", std::move(rows)}, {"histogram", std::move(hist)}};
}

Json to_json(const MinedRoute& m) {
  Json j = route_to_json(m.route);
  j["support"] = m.support;
  j["lift"] = m.lift;
  j["success_count"] = m.success_count;
  return j;
}

namespace {

std::string render_table(const std::string& title, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out = title + "\n";
  std::size_t line_len = 0;
  for (auto w : width) line_len += w + 2;
  const std::string rule(line_len > 2 ? line_len - 2 : 0, '-');
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (i > 0) line += "  ";
      line += i == 0 ? fmt::format("{:<{}}", rows[r][i], width[i]) : fmt::format("{:>{}}", rows[r][i], width[i]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (r == 0) out += rule + "\n";
  }
  return out;
}

std::string count_pct(std::size_t n, std::size_t total) { return fmt::format("{} ({:.1f}%)", n, percent(n, total)); }

}  // namespace

std::string render_tables(const StatsReport& r) {
  std::vector<std::vector<std::string>> t3{
      {"Task Status", "Number", "Average Length of Chain Flows", "Average Time", "Average Token Cost"}};
  for (const auto& s : r.statuses) {
    t3.push_back({s.status, fmt::format("{} ({:.1f}%)", s.count, s.pct), fmt::format("{:.1f}", s.avg_chain_len),
                  fmt::format("{:.1f}", s.avg_time_s), fmt::format("{:.1f}", s.avg_tokens)});
  }
  std::vector<std::vector<std::string>> t4{{"Subtask", "Total", "New", "Running", "Success", "Fail"}};
  for (const auto& s : r.subtasks) {
    t4.push_back({kind_label(s.kind), std::to_string(s.total), count_pct(s.new_count, s.total),
                  count_pct(s.running, s.total), count_pct(s.success, s.total), count_pct(s.fail, s.total)});
  }
  std::vector<std::vector<std::string>> t5{{"Vertex", "Number", "Average Time", "Average Token Cost", "Success Rate"}};
  for (const auto& p : r.protocols) {
    t5.push_back({kind_label(p.kind), std::to_string(p.invocations), fmt::format("{:.1f}", p.avg_time_s),
                  p.avg_tokens ? fmt::format("{:.1f}", *p.avg_tokens) : "-", fmt::format("{:.1f}%", p.success_rate)});
  }
  std::string out = render_table("Overview of Tasks", t3);
  out += "\n" + render_table("Scale of Subtasks", t4);
  out += "\n" + render_table("Protocol of Vertexes", t5);
  if (r.skipped > 0) out += fmt::format("\n({} malformed line(s) skipped)\n", r.skipped);
  return out;
}

}  // namespace agentnet
