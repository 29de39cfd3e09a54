#pragma once

// Reference implementations used as test oracles. They work on raw edge
// lists and recursion rather than the library's data structures.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "situ/freeflow.hpp"
#include "situ/graph.hpp"

namespace oracle {

using situ::Edge;
using situ::EdgeId;
using situ::NodeId;
using situ::SegmentGraph;
using situ::SplitMix64;

/// Connected undirected graph without parallel edges; lengths 10..100 m in
/// steps of 10 so sums are exact.
inline SegmentGraph randomGraph(std::uint64_t seed, int nodes, int extraEdges) {
  SplitMix64 rng = SplitMix64::stream(seed, "graph");
  SegmentGraph g;
  for (int i = 0; i < nodes; ++i) g.addNode("v" + std::to_string(i));
  std::set<std::pair<int, int>> used;
  EdgeId next = 1;
  auto add = [&](int a, int b) {
    if (a == b) return;
    auto key = std::minmax(a, b);
    if (!used.insert({key.first, key.second}).second) return;
    double len = 10.0 * static_cast<double>(1 + rng.below(10));
    g.addEdge(Edge{next++, "v" + std::to_string(a), "v" + std::to_string(b), len});
  };
  for (int i = 1; i < nodes; ++i) add(i, static_cast<int>(rng.below(static_cast<std::uint64_t>(i))));
  for (int i = 0; i < extraEdges; ++i) {
    add(static_cast<int>(rng.below(static_cast<std::uint64_t>(nodes))),
        static_cast<int>(rng.below(static_cast<std::uint64_t>(nodes))));
  }
  return g;
}

/// Minimal edge length between two nodes straight from the edge list.
inline std::map<std::pair<NodeId, NodeId>, double> hopLengths(const SegmentGraph& g) {
  std::map<std::pair<NodeId, NodeId>, double> out;
  for (const auto& [id, e] : g.edges()) {
    auto put = [&](const NodeId& a, const NodeId& b) {
      auto it = out.find({a, b});
      if (it == out.end() || e.lengthMeters < it->second) out[{a, b}] = e.lengthMeters;
    };
    put(e.from, e.to);
    if (!g.directed()) put(e.to, e.from);
  }
  return out;
}

/// Every simple path from -> to no longer than maxDist, by exhaustive DFS.
inline std::set<std::vector<NodeId>> allSimplePaths(const SegmentGraph& g, const NodeId& from,
                                                    const NodeId& to, double maxDist) {
  auto hops = hopLengths(g);
  std::set<std::vector<NodeId>> out;
  std::vector<NodeId> trail{from};
  std::function<void(double)> dfs = [&](double length) {
    if (trail.back() == to) {
      out.insert(trail);
      return;
    }
    for (const auto& n : g.nodes()) {
      auto it = hops.find({trail.back(), n});
      if (it == hops.end()) continue;
      if (std::find(trail.begin(), trail.end(), n) != trail.end()) continue;
      if (length + it->second > maxDist + 1e-9) continue;
      trail.push_back(n);
      dfs(length + it->second);
      trail.pop_back();
    }
  };
  dfs(0.0);
  return out;
}

/// All-pairs shortest distances.
inline std::map<std::pair<NodeId, NodeId>, double> floydWarshall(const SegmentGraph& g) {
  const double inf = std::numeric_limits<double>::infinity();
  std::map<std::pair<NodeId, NodeId>, double> d;
  for (const auto& a : g.nodes()) {
    for (const auto& b : g.nodes()) d[{a, b}] = a == b ? 0.0 : inf;
  }
  for (const auto& [k, v] : hopLengths(g)) d[k] = std::min(d[k], v);
  for (const auto& k : g.nodes()) {
    for (const auto& i : g.nodes()) {
      for (const auto& j : g.nodes()) {
        double via = d[{i, k}] + d[{k, j}];
        if (via < d[{i, j}]) d[{i, j}] = via;
      }
    }
  }
  return d;
}

/// Activity of `node` computed by pulling from its parents recursively.
inline double freeFlowActivity(const std::vector<situ::FreeFlowTree>& roles,
                               const std::vector<situ::SituatedCommitment>& commitments,
                               const std::map<std::string, bool>& active, double root,
                               const std::map<std::pair<std::string, int>, double>& stimuli, int node) {
  const situ::FreeFlowTree* role = nullptr;
  for (const auto& r : roles) {
    for (const auto& n : r.nodes) {
      if (n.id == node) role = &r;
    }
  }
  auto stim = [&](const situ::FreeFlowTree& r, int target) {
    double s = 0.0;
    for (const auto& st : r.stimuli) {
      if (st.target != target) continue;
      auto it = stimuli.find({st.name, st.target});
      if (it != stimuli.end()) s += it->second;
    }
    return s;
  };
  auto roleTop = [&](const situ::FreeFlowTree& r) { return root * r.rootWeight + stim(r, r.top); };
  if (node == role->top) {
    double a = roleTop(*role);
    for (const auto& c : commitments) {
      if (c.targetRole != role->roleName || !active.count(c.name) || !active.at(c.name)) continue;
      for (const auto& r : roles) {
        if (c.sourceRoles.count(r.roleName)) a += roleTop(r);
      }
    }
    return a;
  }
  double a = stim(*role, node);
  for (const auto& e : role->edges) {
    if (e.child == node) a += e.weight * freeFlowActivity(roles, commitments, active, root, stimuli, e.parent);
  }
  return a;
}

/// Random role: a tree over `size` nodes with a few extra parent links that
/// keep it acyclic, random weights and stimuli. Node ids start at `base`.
inline situ::FreeFlowTree randomRole(SplitMix64& rng, const std::string& name, int base, int size) {
  situ::FreeFlowTree t;
  t.roleName = name;
  t.top = base;
  t.rootWeight = static_cast<double>(rng.below(5)) * 0.5;
  std::vector<int> parentOf(static_cast<std::size_t>(size), -1);
  for (int i = 1; i < size; ++i) parentOf[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
  std::vector<bool> hasChild(static_cast<std::size_t>(size), false);
  for (int i = 1; i < size; ++i) hasChild[static_cast<std::size_t>(parentOf[static_cast<std::size_t>(i)])] = true;
  for (int i = 0; i < size; ++i) {
    bool leaf = !hasChild[static_cast<std::size_t>(i)];
    t.nodes.push_back(situ::TreeNode{base + i, leaf, leaf ? "a" + std::to_string(base + i) : ""});
  }
  std::set<std::pair<int, int>> edges;
  auto weight = [&] { return static_cast<double>(rng.below(9)) * 0.25; };
  for (int i = 1; i < size; ++i) {
    int p = parentOf[static_cast<std::size_t>(i)];
    edges.insert({p, i});
    t.edges.push_back(situ::TreeEdge{base + p, base + i, weight()});
  }
  for (int k = 0; k < size / 3; ++k) {
    int child = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, size - 1))));
    if (child >= size) continue;
    int parent = static_cast<int>(rng.below(static_cast<std::uint64_t>(child)));
    if (!hasChild[static_cast<std::size_t>(parent)] || edges.count({parent, child})) continue;
    edges.insert({parent, child});
    t.edges.push_back(situ::TreeEdge{base + parent, base + child, weight()});
  }
  for (int i = 0; i < size; ++i) {
    if (rng.below(2) == 0) continue;
    double v = static_cast<double>(rng.below(40));
    t.stimuli.push_back(situ::Stimulus{"s" + std::to_string(base + i), base + i, [v](const situ::Items&) { return v; }});
  }
  return t;
}

}  // namespace oracle
