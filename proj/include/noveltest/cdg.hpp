#pragma once

#include <map>
#include <set>
#include <vector>

#include "noveltest/spec.hpp"

namespace noveltest {

// Virtual game root; controls every script entry.
constexpr int kCdgRoot = -1;

struct CdgNode {
  int id = kCdgRoot;
  int parent = kCdgRoot;       // controlling node
  bool branch_label = true;    // required predicate outcome when parent is an if
  int depth = 0;               // distance from the script entry (entry = 0)
  bool is_entry = false;
  bool game_start = false;     // entry of a game-start script
  bool always_armed = false;   // trigger the agent can always fire (start/key/click)
  bool is_if = false;
};

// For the block-structured statement language a statement's controlling
// node is its nearest enclosing if/repeat/forever; top-level statements
// depend on their script entry, entries on the virtual root.
struct ControlDependenceGraph {
  std::map<int, CdgNode> nodes;
  std::map<int, std::vector<int>> children;  // parent -> children, ascending

  const CdgNode& node(int id) const { return nodes.at(id); }

  // Chain of controlling nodes from `id` up to (excluding) the root.
  std::vector<int> ancestors(int id) const {
    std::vector<int> out;
    int cur = nodes.at(id).parent;
    while (cur != kCdgRoot) {
      out.push_back(cur);
      cur = nodes.at(cur).parent;
    }
    return out;
  }
};

namespace detail {
inline void build_cdg_body(const std::vector<Statement>& body, int parent, bool label, int depth,
                           ControlDependenceGraph& g) {
  for (const auto& s : body) {
    CdgNode n;
    n.id = s.id;
    n.parent = parent;
    n.branch_label = label;
    n.depth = depth;
    n.is_if = s.kind == Statement::Kind::If;
    g.nodes[s.id] = n;
    g.children[parent].push_back(s.id);
    if (s.kind == Statement::Kind::If) {
      build_cdg_body(s.body, s.id, true, depth + 1, g);
      build_cdg_body(s.else_body, s.id, false, depth + 1, g);
    } else if (s.kind == Statement::Kind::Repeat || s.kind == Statement::Kind::Forever) {
      build_cdg_body(s.body, s.id, true, depth + 1, g);
    }
  }
}
}  // namespace detail

inline ControlDependenceGraph build_cdg(const GameSpec& spec) {
  ControlDependenceGraph g;
  for (const auto& sc : spec.scripts) {
    CdgNode entry;
    entry.id = sc.entry_id;
    entry.parent = kCdgRoot;
    entry.depth = 0;
    entry.is_entry = true;
    entry.game_start = sc.trigger.kind == Trigger::Kind::GameStart;
    entry.always_armed = sc.trigger.kind != Trigger::Kind::BroadcastReceived;
    g.nodes[sc.entry_id] = entry;
    g.children[kCdgRoot].push_back(sc.entry_id);
    detail::build_cdg_body(sc.body, sc.entry_id, true, 1, g);
  }
  for (auto& [p, kids] : g.children) std::sort(kids.begin(), kids.end());
  return g;
}

// A node counts as covered for target selection when it is in the
// covered set, it is the root, or it is an entry whose trigger the
// agent can fire from the start (game-start, key, click). Broadcast
// entries stay blocked until they have fired in a robust solution.
inline bool node_covered(const ControlDependenceGraph& g, const std::set<int>& covered, int id) {
  if (id == kCdgRoot) return true;
  if (covered.count(id)) return true;
  const CdgNode& n = g.node(id);
  return n.is_entry && n.always_armed;
}

// Uncovered statements whose controlling node is covered. Script entries
// are not targets themselves; they count as covered once their trigger
// has fired in a robust solution. Ascending id order (std::set).
inline std::set<int> next_targets(const ControlDependenceGraph& g, const std::set<int>& covered) {
  std::set<int> out;
  for (const auto& [id, n] : g.nodes) {
    if (n.is_entry) continue;
    if (covered.count(id)) continue;
    if (node_covered(g, covered, n.parent)) out.insert(id);
  }
  return out;
}

}  // namespace noveltest
