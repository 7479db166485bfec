#pragma once

// Shared fixtures: the Figure 1 progeny and a naive SFS oracle that stores
// the full mutation set of every living cell.

#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "rescue_sfs/simulator.hpp"

namespace rescue_sfs::testing {

using sim::CellType;
using sim::GenealogyNode;
using sim::NodeStatus;

class ForestBuilder {
 public:
  std::uint32_t root(CellType type = CellType::sensitive) {
    GenealogyNode n;
    n.type = type;
    n.root_index = roots_++;
    return push(n);
  }

  /// Adds a child of `parent`; the parent is marked as divided.
  std::uint32_t child(std::uint32_t parent, CellType type, std::uint64_t mutations,
                      NodeStatus status = NodeStatus::alive) {
    auto& mother = out_.nodes[parent];
    mother.status = NodeStatus::divided;
    GenealogyNode n;
    n.parent = parent;
    n.type = type;
    n.origin = mother.type;
    n.edge_mutations = mutations;
    n.generation = mother.generation + 1;
    n.root_index = mother.root_index;
    n.status = status;
    const auto id = push(n);
    if (mother.type == CellType::sensitive && type == CellType::resistant)
      out_.ancestral.push_back({0.0, n.generation, n.root_index});
    return id;
  }

  void kill(std::uint32_t id) { out_.nodes[id].status = NodeStatus::dead; }

  sim::SimOutcome finish(double t_obs = 1.0) {
    out_.t_obs = t_obs;
    out_.n_roots = roots_;
    out_.z0 = out_.z1 = 0;
    for (const auto& n : out_.nodes)
      if (n.status == NodeStatus::alive) (n.type == CellType::sensitive ? out_.z0 : out_.z1) += 1;
    return out_;
  }

 private:
  std::uint32_t push(const GenealogyNode& n) {
    out_.nodes.push_back(n);
    return static_cast<std::uint32_t>(out_.nodes.size() - 1);
  }
  sim::SimOutcome out_;
  std::uint32_t roots_ = 0;
};

/// The Figure 1 progeny: ten mutations, one
/// resistance event, seven living resistant cells.
inline sim::SimOutcome figure1_outcome() {
  using C = CellType;
  ForestBuilder b;
  const auto r = b.root(C::sensitive);
  const auto a = b.child(r, C::sensitive, 2);                    // mutations 1, 2
  b.child(r, C::sensitive, 1, NodeStatus::dead);                 // mutation 3
  const auto res = b.child(a, C::resistant, 0);                  // the resistance event
  const auto d = b.child(a, C::sensitive, 1);                    // mutation 5
  b.child(d, C::sensitive, 1, NodeStatus::dead);                 // mutation 6
  b.child(d, C::sensitive, 1);                                   // mutation 10, sensitive and alive
  const auto ra = b.child(res, C::resistant, 1);                 // mutation 4
  const auto rb = b.child(res, C::resistant, 0);
  b.child(ra, C::resistant, 1);                                  // mutation 7
  const auto ra2 = b.child(ra, C::resistant, 0);
  b.child(ra2, C::resistant, 1);                                 // mutation 8
  b.child(ra2, C::resistant, 0);
  b.child(rb, C::resistant, 1);                                  // mutation 9
  const auto rb2 = b.child(rb, C::resistant, 0);
  b.child(rb2, C::resistant, 0);
  const auto rb22 = b.child(rb2, C::resistant, 0);
  b.child(rb22, C::resistant, 0);
  b.child(rb22, C::resistant, 0);
  return b.finish();
}

/// Naive oracle: materialize the mutation set of every living resistant
/// cell, then count carriers per mutation.
inline sim::SfsRecord naive_sfs(const sim::SimOutcome& outcome) {
  const auto& nodes = outcome.nodes;
  // mutation id = (node, k)
  std::map<std::pair<std::uint32_t, std::uint64_t>, std::uint64_t> carriers;
  std::uint64_t resistant = 0;
  for (std::uint32_t v = 0; v < nodes.size(); ++v) {
    const auto& n = nodes[v];
    if (n.pruned || n.status != NodeStatus::alive || n.type != CellType::resistant) continue;
    ++resistant;
    std::set<std::pair<std::uint32_t, std::uint64_t>> muts;
    for (std::uint32_t u = v; u != sim::kNoParent; u = nodes[u].parent)
      for (std::uint64_t k = 0; k < nodes[u].edge_mutations; ++k) muts.insert({u, k});
    for (const auto& m : muts) ++carriers[m];
  }
  sim::SfsRecord rec;
  rec.t_obs = outcome.t_obs;
  rec.resistant_size = resistant;
  for (const auto& [m, c] : carriers) {
    rec.total[c] += 1;
    (nodes[m.first].origin == CellType::resistant ? rec.bar : rec.under)[c] += 1;
  }
  return rec;
}

}  // namespace rescue_sfs::testing
