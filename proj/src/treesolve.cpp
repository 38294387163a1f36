#include "pomap/treesolve.hpp"

namespace pomap {

ForestLayout layout_forest(const Graph& graph)
{
   graph.validate();
   const std::size_t n = graph.num_nodes;
   ForestLayout layout;
   layout.parent.assign(n, -1);
   layout.parent_edge.assign(n, 0);
   layout.children.assign(n, {});
   std::vector<std::vector<std::pair<int, std::size_t>>> adjacency(n);
   for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      adjacency[graph.edges[e].i].push_back({graph.edges[e].j, e});
      adjacency[graph.edges[e].j].push_back({graph.edges[e].i, e});
   }
   std::vector<char> visited(n, 0);
   std::size_t tree_edges = 0;
   for (std::size_t root = 0; root < n; ++root) {
      if (visited[root]) continue;
      layout.roots.push_back(static_cast<int>(root));
      std::queue<int> frontier;
      frontier.push(static_cast<int>(root));
      visited[root] = 1;
      while (!frontier.empty()) {
         const int v = frontier.front();
         frontier.pop();
         layout.order.push_back(v);
         for (const auto& [w, e] : adjacency[v]) {
            if (layout.parent[v] == w && layout.parent_edge[v] == e) continue;
            if (visited[w]) throw Error(ErrorCode::cyclic_graph, "edge set contains a cycle through node " + std::to_string(w));
            visited[w] = 1;
            layout.parent[w] = v;
            layout.parent_edge[w] = e;
            layout.children[v].push_back({w, e});
            ++tree_edges;
            frontier.push(w);
         }
      }
   }
   if (tree_edges != graph.edges.size()) throw Error(ErrorCode::cyclic_graph, "edge set is not a forest");
   return layout;
}

} // namespace pomap
