#pragma once

#include <random>
#include <vector>

#include "agentnet/flowlog.hpp"
#include "agentnet/schema.hpp"

namespace agentnet::testing {

using Rng = std::mt19937;

/// A record whose totals equal its chain sums. New records have an empty
/// chain; Running ones may end with a running entry.
FlowRecord random_flow_record(Rng& rng, int index, int vertex_pool = 12);
std::vector<FlowRecord> random_flow_log(Rng& rng, int count, int vertex_pool = 12);

Json random_value(Rng& rng, int depth = 0);
ParameterSchema random_schema(Rng& rng, int max_params = 6);
/// Values that sometimes satisfy `schema` and sometimes break it (missing
/// required params, wrong kinds, extra keys).
Json random_values_for(Rng& rng, const ParameterSchema& schema);

}  // namespace agentnet::testing
