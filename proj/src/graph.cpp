#include "situ/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

namespace situ {
namespace {

std::string formatNumber(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void SegmentGraph::requireNode(const NodeId& node) const {
  if (!hasNode(node)) throw GraphError("unknown node: " + node);
}

void SegmentGraph::addNode(const NodeId& node) {
  if (node.empty()) throw GraphError("empty node id");
  nodes_.insert(node);
  adjacency_[node];
}

void SegmentGraph::addEdge(const Edge& e) {
  if (!hasNode(e.from) || !hasNode(e.to)) {
    throw GraphError("edge " + std::to_string(e.id) + " references a missing node");
  }
  if (edges_.count(e.id)) throw GraphError("duplicate edge id " + std::to_string(e.id));
  if (!(e.lengthMeters > 0.0) || !std::isfinite(e.lengthMeters)) {
    throw GraphError("edge " + std::to_string(e.id) + " must have positive length");
  }
  if (e.from == e.to) throw GraphError("self-loop edge " + std::to_string(e.id));
  edges_.emplace(e.id, e);

  auto link = [this](const NodeId& a, const NodeId& b, EdgeId id) {
    auto& adj = adjacency_[a];
    auto it = std::find_if(adj.begin(), adj.end(), [&](const Adjacent& x) { return x.node == b; });
    if (it == adj.end()) {
      adj.push_back({b, id});
      std::sort(adj.begin(), adj.end(),
                [](const Adjacent& x, const Adjacent& y) { return x.node < y.node; });
      return;
    }
    const Edge& cur = edges_.at(it->edge);
    const Edge& cand = edges_.at(id);
    if (cand.lengthMeters < cur.lengthMeters ||
        (cand.lengthMeters == cur.lengthMeters && cand.id < cur.id)) {
      it->edge = id;
    }
  };
  link(e.from, e.to, e.id);
  if (!directed_) link(e.to, e.from, e.id);
}

const Edge& SegmentGraph::edge(EdgeId id) const {
  auto it = edges_.find(id);
  if (it == edges_.end()) throw GraphError("unknown edge " + std::to_string(id));
  return it->second;
}

const std::vector<SegmentGraph::Adjacent>& SegmentGraph::adjacent(const NodeId& node) const {
  auto it = adjacency_.find(node);
  if (it == adjacency_.end()) throw GraphError("unknown node: " + node);
  return it->second;
}

std::optional<EdgeId> SegmentGraph::edgeBetween(const NodeId& a, const NodeId& b) const {
  auto it = adjacency_.find(a);
  if (it == adjacency_.end()) return std::nullopt;
  for (const auto& adj : it->second) {
    if (adj.node == b) return adj.edge;
  }
  return std::nullopt;
}

double SegmentGraph::meanEdgeLength() const {
  if (edges_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [id, e] : edges_) sum += e.lengthMeters;
  return sum / static_cast<double>(edges_.size());
}

bool isSimplePath(const SegmentGraph& graph, const GraphPath& path) {
  if (path.nodes.empty()) return false;
  std::set<NodeId> seen;
  for (std::size_t i = 0; i < path.nodes.size(); ++i) {
    if (!graph.hasNode(path.nodes[i])) return false;
    if (!seen.insert(path.nodes[i]).second) return false;
    if (i > 0 && !graph.edgeBetween(path.nodes[i - 1], path.nodes[i])) return false;
  }
  return true;
}

std::vector<EdgeId> pathEdges(const SegmentGraph& graph, const GraphPath& path) {
  std::vector<EdgeId> out;
  for (std::size_t i = 1; i < path.nodes.size(); ++i) {
    auto e = graph.edgeBetween(path.nodes[i - 1], path.nodes[i]);
    if (!e) {
      throw GraphError("nodes " + path.nodes[i - 1] + " and " + path.nodes[i] + " are not adjacent");
    }
    out.push_back(*e);
  }
  return out;
}

double pathLength(const SegmentGraph& graph, const GraphPath& path) {
  double total = 0.0;
  for (EdgeId e : pathEdges(graph, path)) total += graph.edge(e).lengthMeters;
  return total;
}

std::vector<GraphPath> pathsWithin(const SegmentGraph& graph, const NodeId& from,
                                   const NodeId& to, double maxDistMeters) {
  if (!graph.hasNode(from)) throw GraphError("unknown node: " + from);
  if (!graph.hasNode(to)) throw GraphError("unknown node: " + to);

  std::vector<std::pair<double, GraphPath>> found;
  std::vector<NodeId> stack{from};
  std::set<NodeId> onPath{from};

  // Depth-first over simple paths; lengths are positive so the partial
  // length bound prunes safely.
  auto dfs = [&](auto&& self, const NodeId& at, double length) -> void {
    if (at == to) {
      found.emplace_back(length, GraphPath{stack});
      return;
    }
    for (const auto& adj : graph.adjacent(at)) {
      if (onPath.count(adj.node)) continue;
      double next = length + graph.edge(adj.edge).lengthMeters;
      if (next > maxDistMeters + kLengthSlack) continue;
      stack.push_back(adj.node);
      onPath.insert(adj.node);
      self(self, adj.node, next);
      onPath.erase(adj.node);
      stack.pop_back();
    }
  };
  dfs(dfs, from, 0.0);

  std::sort(found.begin(), found.end());
  std::vector<GraphPath> out;
  out.reserve(found.size());
  for (auto& [len, p] : found) out.push_back(std::move(p));
  return out;
}

GraphPath shortestPath(const std::vector<GraphPath>& paths, const SegmentGraph& graph) {
  if (paths.empty()) throw GraphError("no candidate paths");
  const GraphPath* best = &paths.front();
  double bestLen = pathLength(graph, *best);
  for (std::size_t i = 1; i < paths.size(); ++i) {
    double len = pathLength(graph, paths[i]);
    if (len < bestLen || (len == bestLen && paths[i] < *best)) {
      best = &paths[i];
      bestLen = len;
    }
  }
  return *best;
}

namespace {

struct DijkstraResult {
  std::map<NodeId, double> dist;
  std::map<NodeId, NodeId> prev;
};

DijkstraResult dijkstra(const SegmentGraph& graph, const NodeId& from) {
  DijkstraResult r;
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  r.dist[from] = 0.0;
  pq.emplace(0.0, from);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > r.dist[u]) continue;
    for (const auto& adj : graph.adjacent(u)) {
      double nd = d + graph.edge(adj.edge).lengthMeters;
      auto it = r.dist.find(adj.node);
      if (it == r.dist.end() || nd < it->second ||
          (nd == it->second && u < r.prev[adj.node])) {
        bool improved = it == r.dist.end() || nd < it->second;
        r.dist[adj.node] = nd;
        r.prev[adj.node] = u;
        if (improved) pq.emplace(nd, adj.node);
      }
    }
  }
  return r;
}

}  // namespace

double distanceMeters(const SegmentGraph& graph, const NodeId& from, const NodeId& to) {
  if (!graph.hasNode(from)) throw GraphError("unknown node: " + from);
  if (!graph.hasNode(to)) throw GraphError("unknown node: " + to);
  if (from == to) return 0.0;
  auto r = dijkstra(graph, from);
  auto it = r.dist.find(to);
  return it == r.dist.end() ? std::numeric_limits<double>::infinity() : it->second;
}

std::optional<GraphPath> shortestRoute(const SegmentGraph& graph, const NodeId& from,
                                       const NodeId& to) {
  if (!graph.hasNode(from)) throw GraphError("unknown node: " + from);
  if (!graph.hasNode(to)) throw GraphError("unknown node: " + to);
  if (from == to) return GraphPath{{from}};
  auto r = dijkstra(graph, from);
  if (!r.dist.count(to)) return std::nullopt;
  GraphPath path;
  for (NodeId at = to;; at = r.prev.at(at)) {
    path.nodes.push_back(at);
    if (at == from) break;
  }
  std::reverse(path.nodes.begin(), path.nodes.end());
  return path;
}

SegmentGraph parseGraph(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::optional<SegmentGraph> graph;
  std::vector<Edge> edges;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    auto fail = [&](const std::string& why) {
      throw GraphError("graph line " + std::to_string(lineNo) + ": " + why);
    };
    if (word == "graph") {
      std::string kind;
      ls >> kind;
      if (graph) fail("duplicate header");
      if (kind == "directed") graph.emplace(true);
      else if (kind == "undirected") graph.emplace(false);
      else fail("expected directed|undirected");
    } else if (!graph) {
      fail("missing 'graph' header");
    } else if (word == "node") {
      std::string id;
      if (!(ls >> id)) fail("node without id");
      graph->addNode(id);
    } else if (word == "edge") {
      Edge e;
      if (!(ls >> e.id >> e.from >> e.to >> e.lengthMeters)) fail("malformed edge");
      edges.push_back(e);
    } else {
      fail("unknown record '" + word + "'");
    }
  }
  if (!graph) throw GraphError("empty graph file");
  for (const auto& e : edges) graph->addEdge(e);
  return *graph;
}

std::string serializeGraph(const SegmentGraph& graph) {
  std::string out = graph.directed() ? "graph directed\n" : "graph undirected\n";
  for (const auto& n : graph.nodes()) out += "node " + n + "\n";
  for (const auto& [id, e] : graph.edges()) {
    out += "edge " + std::to_string(id) + " " + e.from + " " + e.to + " " +
           formatNumber(e.lengthMeters) + "\n";
  }
  return out;
}

SegmentGraph loadGraphFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open graph file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parseGraph(ss.str());
}

const char* toString(ProjectionStatus status) {
  return status == ProjectionStatus::locked ? "locked" : "requested";
}

std::set<EdgeId> PathProjection::segments() const {
  std::set<EdgeId> out(projection.begin(), projection.end());
  out.insert(hull.segments.begin(), hull.segments.end());
  return out;
}

void validateProjection(const SegmentGraph& graph, const PathProjection& p) {
  if (p.priority < 0 || p.priority > 5) throw GraphError("projection priority out of range");
  for (EdgeId e : p.hull.segments) {
    if (!graph.hasEdge(e)) throw GraphError("hull references unknown edge " + std::to_string(e));
  }
  if (p.projection.empty() && p.hull.segments.empty()) throw GraphError("empty projection");
  for (std::size_t i = 0; i < p.projection.size(); ++i) {
    const Edge& cur = graph.edge(p.projection[i]);
    if (i == 0) continue;
    const Edge& prev = graph.edge(p.projection[i - 1]);
    bool touches = cur.from == prev.from || cur.from == prev.to || cur.to == prev.from ||
                   cur.to == prev.to;
    if (!touches) throw GraphError("projection is not a connected walk");
  }
}

void OperatingSpace::grant() {
  for (EdgeId e : requested) {
    if (std::find(locked.begin(), locked.end(), e) == locked.end()) locked.push_back(e);
  }
  requested.clear();
}

void OperatingSpace::release(const std::set<EdgeId>& segments) {
  auto drop = [&](std::vector<EdgeId>& v) {
    v.erase(std::remove_if(v.begin(), v.end(), [&](EdgeId e) { return segments.count(e) != 0; }),
            v.end());
  };
  drop(requested);
  drop(locked);
}

bool OperatingSpace::holds(EdgeId edge) const {
  return std::find(locked.begin(), locked.end(), edge) != locked.end();
}

}  // namespace situ
