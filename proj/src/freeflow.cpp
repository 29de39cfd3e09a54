#include "situ/freeflow.hpp"

#include <algorithm>

namespace situ {

const TreeNode& FreeFlowTree::node(TreeNodeId id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return n;
  }
  throw Error("role " + roleName + " has no node " + std::to_string(id));
}

void FreeFlowTree::validate() const {
  std::map<TreeNodeId, const TreeNode*> byId;
  for (const auto& n : nodes) {
    if (!byId.emplace(n.id, &n).second) throw Error("role " + roleName + ": duplicate node id");
  }
  if (!byId.count(top)) throw Error("role " + roleName + ": missing top node");
  if (rootWeight < 0.0) throw Error("role " + roleName + ": negative root weight");
  std::map<TreeNodeId, std::vector<TreeNodeId>> children;
  std::map<TreeNodeId, int> indegree;
  for (const auto& e : edges) {
    if (!byId.count(e.parent) || !byId.count(e.child)) throw Error("role " + roleName + ": dangling edge");
    if (e.weight < 0.0) throw Error("role " + roleName + ": negative edge weight");
    if (byId.at(e.parent)->isAction) throw Error("role " + roleName + ": action node with children");
    children[e.parent].push_back(e.child);
    ++indegree[e.child];
  }
  for (const auto& n : nodes) {
    if (n.id == top) {
      if (indegree[n.id] != 0) throw Error("role " + roleName + ": top node has a parent");
    } else if (indegree[n.id] == 0) {
      throw Error("role " + roleName + ": node " + std::to_string(n.id) + " unreachable (second root)");
    }
    if (!n.isAction && children[n.id].empty()) {
      throw Error("role " + roleName + ": internal node " + std::to_string(n.id) + " has no children");
    }
  }
  // Kahn's algorithm from the top detects cycles and unreachable nodes.
  std::vector<TreeNodeId> frontier{top};
  std::size_t visited = 0;
  while (!frontier.empty()) {
    TreeNodeId n = frontier.back();
    frontier.pop_back();
    ++visited;
    for (auto c : children[n]) {
      if (--indegree[c] == 0) frontier.push_back(c);
    }
  }
  if (visited != nodes.size()) throw Error("role " + roleName + ": cycle or unreachable nodes");
  for (const auto& s : stimuli) {
    if (!byId.count(s.target)) throw Error("role " + roleName + ": stimulus on unknown node");
  }
}

double ActivityAssignment::at(TreeNodeId id) const {
  auto it = perNode.find(id);
  if (it == perNode.end()) throw Error("no activity for node " + std::to_string(id));
  return it->second;
}

SelectionInputs evaluateInputs(const std::vector<FreeFlowTree>& roles,
                               const std::vector<SituatedCommitment>& commitments,
                               const Items& knowledge) {
  SelectionInputs in;
  for (const auto& r : roles) {
    for (const auto& s : r.stimuli) {
      double v = s.value ? s.value(knowledge) : 0.0;
      if (v < 0.0) throw Error("stimulus " + s.name + " produced a negative value");
      in.stimuli[{s.name, s.target}] = v;
    }
  }
  for (const auto& c : commitments) in.commitments[c.name] = c.condition ? c.condition(knowledge) : false;
  return in;
}

namespace {

double stimulusSum(const FreeFlowTree& role, TreeNodeId target, const SelectionInputs& in) {
  double sum = 0.0;
  for (const auto& s : role.stimuli) {
    if (s.target != target) continue;
    auto it = in.stimuli.find({s.name, s.target});
    if (it != in.stimuli.end()) sum += it->second;
  }
  return sum;
}

}  // namespace

ActivityAssignment propagate(const std::vector<FreeFlowTree>& roles,
                             const std::vector<SituatedCommitment>& commitments,
                             double rootActivity, const SelectionInputs& inputs) {
  if (rootActivity < 0.0) throw Error("negative root activity");
  ActivityAssignment out;
  std::map<std::string, double> topActivity;
  for (const auto& r : roles) {
    topActivity[r.roleName] = rootActivity * r.rootWeight + stimulusSum(r, r.top, inputs);
  }
  std::map<std::string, double> transferred;
  for (const auto& c : commitments) {
    auto active = inputs.commitments.find(c.name);
    if (active == inputs.commitments.end() || !active->second) continue;
    if (!topActivity.count(c.targetRole)) throw Error("commitment " + c.name + " targets unknown role");
    for (const auto& src : c.sourceRoles) {
      auto it = topActivity.find(src);
      if (it == topActivity.end()) throw Error("commitment " + c.name + " has unknown source role");
      transferred[c.targetRole] += it->second;
    }
  }
  for (const auto& r : roles) {
    std::map<TreeNodeId, std::vector<const TreeEdge*>> parents;
    std::map<TreeNodeId, std::vector<TreeNodeId>> children;
    std::map<TreeNodeId, int> pendingParents;
    for (const auto& e : r.edges) {
      parents[e.child].push_back(&e);
      children[e.parent].push_back(e.child);
      ++pendingParents[e.child];
    }
    out.perNode[r.top] = topActivity[r.roleName] + transferred[r.roleName];
    std::vector<TreeNodeId> ready{r.top};
    while (!ready.empty()) {
      TreeNodeId n = ready.back();
      ready.pop_back();
      for (auto c : children[n]) {
        if (--pendingParents[c] != 0) continue;
        double a = stimulusSum(r, c, inputs);
        for (const TreeEdge* e : parents[c]) a += out.perNode.at(e->parent) * e->weight;
        out.perNode[c] = a;
        ready.push_back(c);
      }
    }
  }
  return out;
}

ActivityAssignment propagate(const std::vector<FreeFlowTree>& roles,
                             const std::vector<SituatedCommitment>& commitments,
                             double rootActivity, const Items& knowledge) {
  return propagate(roles, commitments, rootActivity, evaluateInputs(roles, commitments, knowledge));
}

Selection selectAction(const std::vector<FreeFlowTree>& roles, const ActivityAssignment& assignment,
                       const std::set<std::string>& externalActions) {
  const TreeNode* best = nullptr;
  double bestValue = 0.0;
  for (const auto& r : roles) {
    for (const auto& n : r.nodes) {
      if (!n.isAction) continue;
      double v = assignment.at(n.id);
      if (!best || v > bestValue || (v == bestValue && n.id < best->id)) {
        best = &n;
        bestValue = v;
      }
    }
  }
  if (!best) throw Error("no action leaves to select from");
  return Selection{best->id, best->name, externalActions.count(best->name) != 0};
}

ActionSelector::ActionSelector(std::vector<FreeFlowTree> roles, std::vector<SituatedCommitment> commitments,
                               std::set<std::string> externalActions, double rootActivity)
    : roles_(std::move(roles)),
      commitments_(std::move(commitments)),
      externalActions_(std::move(externalActions)),
      rootActivity_(rootActivity) {
  std::set<TreeNodeId> ids;
  bool anyAction = false;
  for (const auto& r : roles_) {
    r.validate();
    for (const auto& n : r.nodes) {
      if (!ids.insert(n.id).second) throw Error("node id " + std::to_string(n.id) + " used by two roles");
      anyAction = anyAction || n.isAction;
    }
  }
  if (!anyAction) throw Error("no action leaves");
  for (const auto& c : commitments_) {
    if (c.sourceRoles.count(c.targetRole)) throw Error("commitment " + c.name + " targets one of its sources");
  }
  inputs_ = evaluateInputs(roles_, commitments_, {});
}

void ActionSelector::updateRoles(const Items& knowledge) {
  inputs_.stimuli = evaluateInputs(roles_, {}, knowledge).stimuli;
}

void ActionSelector::updateCommitments(const Items& knowledge) {
  inputs_.commitments = evaluateInputs({}, commitments_, knowledge).commitments;
}

ActivityAssignment ActionSelector::assignment() const {
  return propagate(roles_, commitments_, rootActivity_, inputs_);
}

Selection ActionSelector::select() const { return selectAction(roles_, assignment(), externalActions_); }

// -- refinement --------------------------------------------------------------

namespace {

std::optional<std::string> textItem(const Items& k, const char* name) {
  auto it = k.find(name);
  if (it == k.end() || !it->second.is_string()) return std::nullopt;
  return it->second.get<std::string>();
}

}  // namespace

Refinement refineMove(const std::string& agentId, const Items& k, const SegmentGraph& graph,
                      const NodeId& target) {
  auto position = textItem(k, "position");
  if (!position) return {std::nullopt, "position unknown"};
  if (auto moving = k.find("moving"); moving != k.end() && moving->second == true) {
    return {std::nullopt, "in transit"};
  }
  if (*position == target) return {std::nullopt, "at target"};
  auto route = shortestRoute(graph, *position, target);
  if (!route) return {std::nullopt, "target unreachable"};
  auto firstEdge = graph.edgeBetween(route->nodes[0], route->nodes[1]);

  auto proj = k.find("projection");
  if (proj == k.end() || proj->second.is_null()) {
    auto id = k.find("nextProjectionId");
    if (id == k.end()) return {std::nullopt, "no projection id"};
    std::size_t lookahead = 3;
    if (auto la = k.find("lookahead"); la != k.end()) lookahead = la->second.get<std::size_t>();
    lookahead = std::max<std::size_t>(lookahead, 1);
    std::size_t count = std::min(route->nodes.size(), lookahead + 1);
    Value path = Value::array();
    for (std::size_t i = 0; i < count; ++i) path.push_back(route->nodes[i]);
    int priority = 0;
    if (auto p = k.find("priority"); p != k.end()) priority = p->second.get<int>();
    return {Action{agentId, "project", {{"id", id->second}, {"path", path}, {"priority", priority}}},
            "project route"};
  }
  const Value& p = proj->second;
  const Value& edges = p.at("projection");
  bool fits = !edges.empty() && firstEdge && edges.front().get<EdgeId>() == *firstEdge;
  if (p.at("status") == toString(ProjectionStatus::locked)) {
    if (!fits) return {Action{agentId, "clear", {{"all", true}}}, "withdraw stale projection"};
    return {Action{agentId, "move", {{"edge", *firstEdge}, {"to", route->nodes[1]}}}, "next segment locked"};
  }
  return {std::nullopt, "waiting for lock"};
}

Refinement refineAction(const std::string& highLevel, const std::string& agentId, const Items& k,
                        const SegmentGraph& graph) {
  auto task = k.find("task");
  auto taskTarget = [&]() -> std::optional<std::string> {
    if (task == k.end() || !task->second.is_object()) return std::nullopt;
    const Value& t = task->second;
    return t.at("phase") == "toDrop" ? t.at("dropoff").get<std::string>() : t.at("pickup").get<std::string>();
  };
  if (highLevel == "move") {
    auto target = taskTarget();
    if (!target) return {std::nullopt, "no task"};
    return refineMove(agentId, k, graph, *target);
  }
  if (highLevel == "pick" || highLevel == "drop") {
    auto target = taskTarget();
    if (!target) return {std::nullopt, "no task"};
    if (textItem(k, "position") != target) return {std::nullopt, "not at task node"};
    return {Action{agentId, highLevel, {{"node", *target}}}, "bound to task node"};
  }
  if (highLevel == "park") {
    auto target = textItem(k, "parkLocation");
    if (!target) return {std::nullopt, "no park location"};
    return refineMove(agentId, k, graph, *target);
  }
  if (highLevel == "followField") {
    auto target = textItem(k, "fieldStep");
    if (!target) return {std::nullopt, "no gradient"};
    return refineMove(agentId, k, graph, *target);
  }
  if (highLevel == "charge") {
    auto target = textItem(k, "charger");
    if (!target) return {std::nullopt, "no charger"};
    if (textItem(k, "position") != target) return refineMove(agentId, k, graph, *target);
    return {Action{agentId, "charge", Value::object()}, "at charger"};
  }
  if (highLevel == "instructDriver") {
    auto it = k.find("currentIntention");
    if (it == k.end()) return {std::nullopt, "no intention"};
    return {Action{agentId, "instructDriver", {{"path", it->second}}}, "follow intention"};
  }
  return {std::nullopt, "unknown action " + highLevel};
}

}  // namespace situ
