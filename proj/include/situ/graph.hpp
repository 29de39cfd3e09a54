#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "situ/kernel.hpp"

namespace situ {

using EdgeId = std::int64_t;

/// Tolerance on length bounds, absorbing floating-point summation error.
inline constexpr double kLengthSlack = 1e-9;

struct Edge {
  EdgeId id = 0;
  NodeId from;
  NodeId to;
  double lengthMeters = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

/// Segment (warehouse) or road graph. Undirected unless constructed
/// directed. Immutable once handed to a scenario.
class SegmentGraph {
 public:
  struct Adjacent {
    NodeId node;
    EdgeId edge;
  };

  explicit SegmentGraph(bool directed = false) : directed_(directed) {}

  void addNode(const NodeId& node);
  void addEdge(const Edge& edge);

  bool directed() const { return directed_; }
  bool hasNode(const NodeId& node) const { return nodes_.count(node) != 0; }
  bool hasEdge(EdgeId id) const { return edges_.count(id) != 0; }
  const std::set<NodeId>& nodes() const { return nodes_; }
  const std::map<EdgeId, Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId id) const;

  /// Distinct neighbours reachable in one hop, sorted by node id. Parallel
  /// edges collapse to the shortest one (ties: smallest id).
  const std::vector<Adjacent>& adjacent(const NodeId& node) const;

  std::optional<EdgeId> edgeBetween(const NodeId& a, const NodeId& b) const;

  double meanEdgeLength() const;

  friend bool operator==(const SegmentGraph& a, const SegmentGraph& b) {
    return a.directed_ == b.directed_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  void requireNode(const NodeId& node) const;

  bool directed_;
  std::set<NodeId> nodes_;
  std::map<EdgeId, Edge> edges_;
  std::map<NodeId, std::vector<Adjacent>> adjacency_;
};

struct GraphPath {
  std::vector<NodeId> nodes;

  bool empty() const { return nodes.empty(); }
  friend bool operator==(const GraphPath&, const GraphPath&) = default;
  friend auto operator<=>(const GraphPath&, const GraphPath&) = default;
};

/// True when consecutive nodes are adjacent and no node repeats.
bool isSimplePath(const SegmentGraph& graph, const GraphPath& path);
double pathLength(const SegmentGraph& graph, const GraphPath& path);
std::vector<EdgeId> pathEdges(const SegmentGraph& graph, const GraphPath& path);

/// All simple paths from -> to with total length <= maxDistMeters, ordered by
/// (length, node sequence).
std::vector<GraphPath> pathsWithin(const SegmentGraph& graph, const NodeId& from,
                                   const NodeId& to, double maxDistMeters);

/// Minimal-length member of `paths`; ties go to the lexicographically
/// smallest node sequence. Throws on an empty set.
GraphPath shortestPath(const std::vector<GraphPath>& paths, const SegmentGraph& graph);

/// Shortest-path distance; +infinity when unreachable.
double distanceMeters(const SegmentGraph& graph, const NodeId& from, const NodeId& to);

/// Dijkstra route (ties by node id); nullopt when unreachable.
std::optional<GraphPath> shortestRoute(const SegmentGraph& graph, const NodeId& from,
                                       const NodeId& to);

SegmentGraph parseGraph(std::string_view text);
std::string serializeGraph(const SegmentGraph& graph);
SegmentGraph loadGraphFile(const std::string& path);

struct Hull {
  std::set<EdgeId> segments;
  double marginMeters = 0.0;

  friend bool operator==(const Hull&, const Hull&) = default;
};

enum class ProjectionStatus { requested, locked };

const char* toString(ProjectionStatus status);

/// A claim of segments (projection plus hull) placed in the environment.
/// Status only moves requested -> locked.
struct PathProjection {
  std::int64_t id = 0;
  int priority = 0;
  Hull hull;
  std::vector<EdgeId> projection;
  ProjectionStatus status = ProjectionStatus::requested;

  void markLocked() { status = ProjectionStatus::locked; }
  std::set<EdgeId> segments() const;
};

/// Validates a projection against the graph: edges exist and form a
/// connected walk, hull segments exist.
void validateProjection(const SegmentGraph& graph, const PathProjection& projection);

/// Agent-side bookkeeping of what it has requested and what it holds.
struct OperatingSpace {
  std::vector<EdgeId> requested;
  std::vector<EdgeId> locked;

  /// Requested segments move to the locked list.
  void grant();
  /// Drops `segments` from both lists.
  void release(const std::set<EdgeId>& segments);
  bool holds(EdgeId edge) const;
};

}  // namespace situ
