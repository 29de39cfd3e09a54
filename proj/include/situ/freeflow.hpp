#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "situ/agent.hpp"

namespace situ {

using TreeNodeId = int;

struct TreeNode {
  TreeNodeId id = 0;
  bool isAction = false;
  std::string name;  // action name for leaves
};

struct TreeEdge {
  TreeNodeId parent = 0;
  TreeNodeId child = 0;
  double weight = 1.0;
};

struct Stimulus {
  std::string name;
  TreeNodeId target = 0;
  std::function<double(const Items&)> value;
};

/// One role as a free-flow tree. `top` is the role's top node; `rootWeight`
/// scales the activity injected into it.
struct FreeFlowTree {
  std::string roleName;
  TreeNodeId top = 0;
  double rootWeight = 1.0;
  std::vector<TreeNode> nodes;
  std::vector<TreeEdge> edges;
  std::vector<Stimulus> stimuli;

  /// Single root, acyclic, leaves are exactly the action nodes, weights
  /// non-negative. Throws Error otherwise.
  void validate() const;
  const TreeNode& node(TreeNodeId id) const;
};

struct SituatedCommitment {
  std::string name;
  std::set<std::string> sourceRoles;
  std::string targetRole;
  std::function<bool(const Items&)> condition;
  std::string contextTag;
};

struct ActivityAssignment {
  std::map<TreeNodeId, double> perNode;

  double at(TreeNodeId id) const;
};

/// Evaluated stimulus values (by stimulus name and target) and commitment
/// outcomes (by name).
struct SelectionInputs {
  std::map<std::pair<std::string, TreeNodeId>, double> stimuli;
  std::map<std::string, bool> commitments;
};

SelectionInputs evaluateInputs(const std::vector<FreeFlowTree>& roles,
                               const std::vector<SituatedCommitment>& commitments,
                               const Items& knowledge);

ActivityAssignment propagate(const std::vector<FreeFlowTree>& roles,
                             const std::vector<SituatedCommitment>& commitments,
                             double rootActivity, const SelectionInputs& inputs);

ActivityAssignment propagate(const std::vector<FreeFlowTree>& roles,
                             const std::vector<SituatedCommitment>& commitments,
                             double rootActivity, const Items& knowledge);

struct Selection {
  TreeNodeId node = 0;
  std::string action;
  bool external = false;
};

/// Action leaf with the highest activity; ties go to the smallest node id.
Selection selectAction(const std::vector<FreeFlowTree>& roles, const ActivityAssignment& assignment,
                       const std::set<std::string>& externalActions);

/// Roles and commitments with their latest evaluated inputs.
class ActionSelector {
 public:
  ActionSelector(std::vector<FreeFlowTree> roles, std::vector<SituatedCommitment> commitments,
                 std::set<std::string> externalActions, double rootActivity = 1.0);

  void updateRoles(const Items& knowledge);
  void updateCommitments(const Items& knowledge);
  ActivityAssignment assignment() const;
  Selection select() const;

  const std::vector<FreeFlowTree>& roles() const { return roles_; }
  const std::vector<SituatedCommitment>& commitments() const { return commitments_; }
  const SelectionInputs& inputs() const { return inputs_; }

 private:
  std::vector<FreeFlowTree> roles_;
  std::vector<SituatedCommitment> commitments_;
  std::set<std::string> externalActions_;
  double rootActivity_;
  SelectionInputs inputs_;
};

struct Refinement {
  std::optional<Action> action;
  std::string reason;
};

/// Second selection step for movement: project the next stretch of the
/// route if nothing is projected, drive the next segment once it is locked,
/// withdraw a locked projection that no longer fits, and otherwise wait.
///
/// Knowledge used: position, moving, projection, nextProjectionId, priority,
/// lookahead.
Refinement refineMove(const std::string& agentId, const Items& knowledge, const SegmentGraph& graph,
                      const NodeId& target);

/// Binds a selected high-level action to a concrete one. Targets come from
/// knowledge: task (pickup/dropoff/phase), parkLocation, fieldStep, charger,
/// currentIntention.
Refinement refineAction(const std::string& highLevel, const std::string& agentId,
                        const Items& knowledge, const SegmentGraph& graph);

}  // namespace situ
