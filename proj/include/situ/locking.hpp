#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "situ/environment.hpp"

namespace situ {

struct Claim {
  std::int64_t projectionId = 0;
  int priority = 0;
  std::set<EdgeId> segments;
  NodeId requester;
  Tick claimTick = 0;
  std::string owner;  // agent holding the projection

  friend bool operator==(const Claim&, const Claim&) = default;
};

/// Total order used for precedence: priority desc, projectionId asc,
/// claimTick asc.
bool precedes(const Claim& a, const Claim& b);
bool conflicts(const Claim& a, const Claim& b);

struct ClaimTable {
  std::map<std::int64_t, Claim> outstanding;
  std::map<std::int64_t, Claim> granted;
};

/// Grants, in precedence order, every outstanding claim that conflicts with
/// no granted claim (including those granted earlier in the same pass).
/// Returns the newly granted ids.
std::set<std::int64_t> resolve(ClaimTable& table);

/// Ids `resolve` would grant, leaving the table untouched.
std::set<std::int64_t> grantable(const ClaimTable& table);

Value claimToValue(const Claim& claim);
Claim claimFromValue(const Value& value);

std::string projectionKey(const std::string& agent);

/// Per-node mutual exclusion over segment claims. Requests are answered
/// immediately unless this node holds a conflicting granted claim or a
/// conflicting waiting claim that precedes the request; answering a
/// request that outranks one of our own waiting claims re-requests that
/// claim from the requester. A claim is granted once every alive node has
/// answered its latest request and the local table allows it.
class LockService {
 public:
  using GrantCallback = std::function<void(const Claim&)>;

  explicit LockService(VirtualEnvironment& ve);

  void submit(const Claim& claim);
  /// Releases `segments` of a granted claim; an empty remainder drops it.
  void clear(std::int64_t projectionId, const std::set<EdgeId>& segments);

  bool isGranted(std::int64_t projectionId) const;
  bool owns(std::int64_t projectionId) const { return own_.count(projectionId) != 0; }
  const ClaimTable& table() const { return table_; }
  void onGrant(GrantCallback cb) { grantCallbacks_.push_back(std::move(cb)); }

  void handleUpdate(const SynchronizationUpdate& update);
  void handleMembership(const NodeId& node, bool alive);

 private:
  struct Own {
    Claim claim;
    std::map<NodeId, std::uint64_t> pending;  // node -> round awaited
    std::uint64_t round = 0;
    bool granted = false;
  };
  struct Deferred {
    Claim claim;
    std::uint64_t round = 0;
  };

  void sendRequest(Own& own, const NodeId& to);
  void consider(const Claim& remote, std::uint64_t round);
  bool mustDefer(const Claim& remote) const;
  void reply(const Claim& remote, std::uint64_t round);
  void reconsiderDeferred();
  void tryGrant();
  void send(SyncKind kind, Items payload, const std::vector<NodeId>& targets);

  VirtualEnvironment& ve_;
  ClaimTable table_;
  std::map<std::int64_t, Own> own_;
  std::map<std::int64_t, Deferred> deferred_;
  std::vector<GrantCallback> grantCallbacks_;
};

/// Installs a lock service on a node together with the "project" and
/// "clear" virtual actions and the "projection" focus. Projection state is
/// kept under projectionKey(agent).
std::shared_ptr<LockService> installLocking(VirtualEnvironment& ve);

/// Projections with status locked across the given environments that share
/// a segment. Empty means the exclusion invariant holds.
std::vector<std::pair<std::int64_t, std::int64_t>> lockedOverlaps(
    const std::vector<const VirtualEnvironment*>& environments);

}  // namespace situ
