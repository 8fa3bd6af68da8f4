#include "mabo/comm_graph.hpp"

#include <algorithm>
#include <string>

#include "mabo/error.hpp"

namespace mabo {

CommGraph::CommGraph(std::size_t num_agents) : neighbors_(num_agents) {
  if (num_agents == 0) throw ConfigError("communication graph needs at least one agent");
}

CommGraph::CommGraph(std::size_t num_agents, const std::vector<std::pair<AgentId, AgentId>>& edges)
    : CommGraph(num_agents) {
  for (const auto& [a, b] : edges) add_edge(a, b);
}

CommGraph CommGraph::path(std::size_t num_agents) {
  CommGraph g(num_agents);
  for (AgentId i = 1; i < num_agents; ++i) g.add_edge(i, i + 1);
  return g;
}

CommGraph CommGraph::complete(std::size_t num_agents) {
  CommGraph g(num_agents);
  for (AgentId i = 1; i <= num_agents; ++i) {
    for (AgentId j = i + 1; j <= num_agents; ++j) g.add_edge(i, j);
  }
  return g;
}

void CommGraph::check(AgentId i) const {
  if (i < 1 || i > neighbors_.size()) {
    throw InputError("agent id " + std::to_string(i) + " outside 1.." + std::to_string(neighbors_.size()));
  }
}

void CommGraph::add_edge(AgentId a, AgentId b) {
  check(a);
  check(b);
  if (a == b) throw ConfigError("communication graph may not contain self-loops");
  auto insert = [](std::vector<AgentId>& list, AgentId v) {
    auto it = std::lower_bound(list.begin(), list.end(), v);
    if (it == list.end() || *it != v) list.insert(it, v);
  };
  insert(neighbors_[a - 1], b);
  insert(neighbors_[b - 1], a);
}

bool CommGraph::connected(AgentId a, AgentId b) const {
  check(a);
  check(b);
  const auto& list = neighbors_[a - 1];
  return std::binary_search(list.begin(), list.end(), b);
}

const std::vector<AgentId>& CommGraph::neighbors(AgentId i) const {
  check(i);
  return neighbors_[i - 1];
}

std::vector<AgentId> CommGraph::closed_neighborhood(AgentId i) const {
  std::vector<AgentId> out = neighbors(i);
  out.insert(std::lower_bound(out.begin(), out.end(), i), i);
  return out;
}

std::size_t CommGraph::num_edges() const {
  std::size_t total = 0;
  for (const auto& list : neighbors_) total += list.size();
  return total / 2;
}

}  // namespace mabo
