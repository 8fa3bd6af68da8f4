#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace mabo {

/// Agent identifier, 1-based to match the iteration/expert numbering.
using AgentId = std::size_t;

/// Undirected communication graph over agents 1..N without self-loops.
class CommGraph {
 public:
  explicit CommGraph(std::size_t num_agents);
  CommGraph(std::size_t num_agents, const std::vector<std::pair<AgentId, AgentId>>& edges);

  static CommGraph path(std::size_t num_agents);
  static CommGraph complete(std::size_t num_agents);
  static CommGraph empty(std::size_t num_agents) { return CommGraph(num_agents); }

  void add_edge(AgentId a, AgentId b);

  std::size_t num_agents() const { return neighbors_.size(); }
  bool connected(AgentId a, AgentId b) const;
  /// N^i, ascending.
  const std::vector<AgentId>& neighbors(AgentId i) const;
  /// N^i plus i itself, ascending.
  std::vector<AgentId> closed_neighborhood(AgentId i) const;
  std::size_t num_edges() const;

 private:
  void check(AgentId i) const;

  std::vector<std::vector<AgentId>> neighbors_;
};

}  // namespace mabo
