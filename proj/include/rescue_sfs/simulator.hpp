#pragma once

// Exact event-driven simulation of the sensitive/resistant branching process
// with a pruned genealogy carrying per-edge neutral-mutation counts.

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rescue_sfs/params.hpp"
#include "rescue_sfs/random.hpp"
#include "rescue_sfs/window.hpp"

namespace rescue_sfs::sim {

enum class CellType : std::uint8_t { sensitive = 0, resistant = 1 };
enum class NodeStatus : std::uint8_t { alive, dead, divided };

inline constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();

struct GenealogyNode {
  std::uint32_t parent = kNoParent;
  CellType type = CellType::sensitive;
  std::optional<CellType> origin;  // type of the dividing mother; none for roots
  std::uint64_t edge_mutations = 0;
  double birth_time = 0.0;
  std::uint32_t generation = 0;  // divisions since the root
  std::uint32_t root_index = 0;
  NodeStatus status = NodeStatus::alive;

  // bookkeeping
  std::uint8_t live_children = 0;  // children whose subtree still holds a living cell
  bool pruned = false;
  std::uint32_t slot = 0;  // position in the alive list of its type

  bool is_root() const { return parent == kNoParent; }
};

/// Transition classes, one per row of the aggregate rate table:
///   sensitive_gain   (z0+1, z1)    (1-g)^2 b0 z0
///   sensitive_loss   (z0-1, z1)    d0 z0
///   resistant_gain   (z0, z1+1)    2 g (1-g) b0 z0 + b1 z1
///   double_switch    (z0-1, z1+2)  g^2 b0 z0
///   resistant_loss   (z0, z1-1)    d1 z1
enum class EventClass : std::uint8_t { sensitive_gain, sensitive_loss, resistant_gain, double_switch, resistant_loss };
inline constexpr std::size_t kEventClasses = 5;

inline const char* to_string(EventClass c) {
  switch (c) {
    case EventClass::sensitive_gain: return "sensitive_gain";
    case EventClass::sensitive_loss: return "sensitive_loss";
    case EventClass::resistant_gain: return "resistant_gain";
    case EventClass::double_switch: return "double_switch";
    case EventClass::resistant_loss: return "resistant_loss";
  }
  return "?";
}

/// Maps a population delta to its table row; nullopt if it matches none.
inline std::optional<EventClass> classify_delta(int dz0, int dz1) {
  if (dz0 == 1 && dz1 == 0) return EventClass::sensitive_gain;
  if (dz0 == -1 && dz1 == 0) return EventClass::sensitive_loss;
  if (dz0 == 0 && dz1 == 1) return EventClass::resistant_gain;
  if (dz0 == -1 && dz1 == 2) return EventClass::double_switch;
  if (dz0 == 0 && dz1 == -1) return EventClass::resistant_loss;
  return std::nullopt;
}

/// Table rates at state (z0, z1).
inline std::array<double, kEventClasses> table_rates(const ModelParams& p, double g, double z0, double z1) {
  return {(1.0 - g) * (1.0 - g) * p.b0 * z0, p.d0 * z0, 2.0 * g * (1.0 - g) * p.b0 * z0 + p.b1 * z1,
          g * g * p.b0 * z0, p.d1 * z1};
}

struct AncestralRecord {
  double time = 0.0;
  std::uint32_t generation = 0;
  std::uint32_t root_index = 0;
};

struct SimOutcome {
  std::vector<GenealogyNode> nodes;  // parents precede children
  double t_obs = 0.0;                // time the run was observed (stop time)
  std::uint64_t z0 = 0, z1 = 0;
  std::uint32_t n_roots = 0;
  std::array<std::uint64_t, kEventClasses> event_counts{};
  /// Sum over events of rate_c / total_rate: the expected class counts given
  /// the visited states.
  std::array<double, kEventClasses> expected_event_mass{};
  std::uint64_t events = 0;
  std::vector<AncestralRecord> ancestral;
  bool stopped_early = false;  // hit SimOptions::stop_at_population
};

class PopulationCapExceeded : public std::runtime_error {
 public:
  PopulationCapExceeded(double t, std::uint64_t z0, std::uint64_t z1, std::uint64_t events)
      : std::runtime_error(message(t, z0, z1, events)), time(t), z0(z0), z1(z1), events(events) {}
  double time;
  std::uint64_t z0, z1, events;

 private:
  static std::string message(double t, std::uint64_t z0, std::uint64_t z1, std::uint64_t events) {
    std::ostringstream os;
    os << "population cap exceeded at t=" << t << " (z0=" << z0 << ", z1=" << z1 << ", events=" << events << ")";
    return os.str();
  }
};

struct SimOptions {
  std::optional<std::pair<std::uint64_t, std::uint64_t>> initial;  // (z0, z1); default (N, 0)
  std::uint64_t max_population = 50'000'000;                        // safety cap, throws
  std::optional<std::uint64_t> stop_at_population;                  // stop quietly once reached
  bool prune = true;
};

namespace detail {

class Engine {
 public:
  Engine(const ModelParams& p, CounterRng& rng, const SimOptions& opt)
      : p_(p), rng_(rng), opt_(opt), g_(p.gamma_n()), half_omega_(0.5 * p.omega) {}

  SimOutcome run(double t_obs) {
    const auto [z0_init, z1_init] = opt_.initial.value_or(std::pair<std::uint64_t, std::uint64_t>{
        static_cast<std::uint64_t>(p_.n_init), 0});
    out_.n_roots = static_cast<std::uint32_t>(z0_init + z1_init);
    out_.nodes.reserve(2 * out_.n_roots + 16);
    for (std::uint64_t k = 0; k < z0_init + z1_init; ++k) {
      GenealogyNode root;
      root.type = k < z0_init ? CellType::sensitive : CellType::resistant;
      root.root_index = static_cast<std::uint32_t>(k);
      add_alive(push(root));
    }

    double t = 0.0;
    for (;;) {
      const double z0 = static_cast<double>(alive_[0].size());
      const double z1 = static_cast<double>(alive_[1].size());
      const double s_rate = (p_.b0 + p_.d0) * z0;
      const double total = s_rate + (p_.b1 + p_.d1) * z1;
      if (total <= 0.0) break;
      const double dt = rng_.exponential(total);
      if (t + dt > t_obs) break;
      t += dt;

      const auto rates = table_rates(p_, g_, z0, z1);
      for (std::size_t c = 0; c < kEventClasses; ++c) out_.expected_event_mass[c] += rates[c] / total;

      const std::uint64_t before0 = alive_[0].size(), before1 = alive_[1].size();
      const double u = rng_.uniform() * total;
      if (u < p_.b0 * z0) {
        divide(pick(CellType::sensitive), t);
      } else if (u < s_rate) {
        die(pick(CellType::sensitive));
      } else if (u < s_rate + p_.b1 * z1) {
        divide(pick(CellType::resistant), t);
      } else {
        die(pick(CellType::resistant));
      }
      const auto cls = classify_delta(static_cast<int>(alive_[0].size()) - static_cast<int>(before0),
                                      static_cast<int>(alive_[1].size()) - static_cast<int>(before1));
      assert(cls && "population delta matches no row of the rate table");
      ++out_.event_counts[static_cast<std::size_t>(*cls)];
      ++out_.events;

      const std::uint64_t pop = alive_[0].size() + alive_[1].size();
      if (pop > opt_.max_population) throw PopulationCapExceeded(t, alive_[0].size(), alive_[1].size(), out_.events);
      if (opt_.stop_at_population && pop >= *opt_.stop_at_population) {
        out_.stopped_early = true;
        t_obs = t;
        break;
      }
      if (opt_.prune && pruned_ > 4096 && pruned_ * 2 > out_.nodes.size()) compact();
    }

    if (opt_.prune) compact();
    out_.t_obs = t_obs;
    out_.z0 = alive_[0].size();
    out_.z1 = alive_[1].size();
    return std::move(out_);
  }

 private:
  std::uint32_t push(const GenealogyNode& n) {
    if (out_.nodes.size() >= kNoParent) throw std::length_error("genealogy exceeds 2^32 nodes");
    out_.nodes.push_back(n);
    return static_cast<std::uint32_t>(out_.nodes.size() - 1);
  }

  void add_alive(std::uint32_t id) {
    auto& list = alive_[static_cast<int>(out_.nodes[id].type)];
    out_.nodes[id].slot = static_cast<std::uint32_t>(list.size());
    list.push_back(id);
  }

  void remove_alive(std::uint32_t id) {
    auto& list = alive_[static_cast<int>(out_.nodes[id].type)];
    const std::uint32_t slot = out_.nodes[id].slot;
    list[slot] = list.back();
    out_.nodes[list[slot]].slot = slot;
    list.pop_back();
  }

  std::uint32_t pick(CellType type) {
    const auto& list = alive_[static_cast<int>(type)];
    return list[rng_.below(list.size())];
  }

  std::uint64_t draw_mutations() {
    if (half_omega_ <= 0.0) return 0;
    if (p_.mutation_law == MutationLaw::bernoulli) return rng_.bernoulli(half_omega_) ? 1 : 0;
    return rng_.poisson(half_omega_);
  }

  void divide(std::uint32_t mother, double t) {
    remove_alive(mother);
    const CellType mtype = out_.nodes[mother].type;
    out_.nodes[mother].status = NodeStatus::divided;
    out_.nodes[mother].live_children = 2;
    for (int k = 0; k < 2; ++k) {
      GenealogyNode child;
      child.parent = mother;
      child.origin = mtype;
      child.type = mtype;
      if (mtype == CellType::sensitive && rng_.bernoulli(g_)) child.type = CellType::resistant;
      child.edge_mutations = draw_mutations();
      child.birth_time = t;
      child.generation = out_.nodes[mother].generation + 1;
      child.root_index = out_.nodes[mother].root_index;
      const auto id = push(child);
      add_alive(id);
      if (mtype == CellType::sensitive && child.type == CellType::resistant) {
        out_.ancestral.push_back({t, child.generation, child.root_index});
      }
    }
  }

  void die(std::uint32_t cell) {
    remove_alive(cell);
    out_.nodes[cell].status = NodeStatus::dead;
    if (!opt_.prune) return;
    // walk up while the subtree has become empty
    std::uint32_t v = cell;
    for (;;) {
      out_.nodes[v].pruned = true;
      ++pruned_;
      const auto parent = out_.nodes[v].parent;
      if (parent == kNoParent) break;
      if (--out_.nodes[parent].live_children > 0) break;
      v = parent;
    }
  }

  // Drops pruned nodes; order (hence parent < child) is preserved.
  void compact() {
    auto& nodes = out_.nodes;
    std::vector<std::uint32_t> remap(nodes.size(), kNoParent);
    std::size_t w = 0;
    for (std::size_t r = 0; r < nodes.size(); ++r) {
      if (nodes[r].pruned) continue;
      remap[r] = static_cast<std::uint32_t>(w);
      GenealogyNode n = nodes[r];
      if (n.parent != kNoParent) n.parent = remap[n.parent];
      nodes[w++] = n;
    }
    nodes.resize(w);
    for (auto& list : alive_)
      for (auto& id : list) id = remap[id];
    pruned_ = 0;
  }

  const ModelParams& p_;
  CounterRng& rng_;
  const SimOptions& opt_;
  double g_;
  double half_omega_;
  SimOutcome out_;
  std::array<std::vector<std::uint32_t>, 2> alive_;
  std::size_t pruned_ = 0;
};

}  // namespace detail

/// Simulates the process from (N, 0) (or opt.initial) up to t_obs.
inline SimOutcome run(const ModelParams& params, double t_obs, CounterRng& rng, const SimOptions& opt = {}) {
  validate(params);
  if (!(t_obs >= 0.0)) throw std::invalid_argument("run: t_obs >= 0 required");
  detail::Engine engine(params, rng, opt);
  return engine.run(t_obs);
}

/// Sparse site frequency spectrum with the origin split S = S_bar + S_under.
struct SfsRecord {
  std::map<std::uint64_t, std::uint64_t> total;  // S_i
  std::map<std::uint64_t, std::uint64_t> bar;    // mutations born at resistant divisions
  std::map<std::uint64_t, std::uint64_t> under;  // mutations born at sensitive divisions
  double t_obs = 0.0;
  std::uint64_t resistant_size = 0;

  std::uint64_t at(std::uint64_t i) const { return lookup(total, i); }
  std::uint64_t bar_at(std::uint64_t i) const { return lookup(bar, i); }
  std::uint64_t under_at(std::uint64_t i) const { return lookup(under, i); }

 private:
  static std::uint64_t lookup(const std::map<std::uint64_t, std::uint64_t>& m, std::uint64_t i) {
    auto it = m.find(i);
    return it == m.end() ? 0 : it->second;
  }
};

/// One bottom-up pass: c_v = number of living resistant cells below v
/// (inclusive); the m_v mutations of v's edge land in S_{c_v}.
inline SfsRecord extract_sfs(const SimOutcome& outcome) {
  const auto& nodes = outcome.nodes;
  SfsRecord rec;
  rec.t_obs = outcome.t_obs;
  std::vector<std::uint64_t> count(nodes.size(), 0);
  for (std::size_t k = nodes.size(); k-- > 0;) {
    const auto& v = nodes[k];
    if (v.pruned) continue;
    if (v.status == NodeStatus::alive && v.type == CellType::resistant) {
      ++count[k];
      ++rec.resistant_size;
    }
    const auto c = count[k];
    if (c > 0 && v.edge_mutations > 0) {
      rec.total[c] += v.edge_mutations;
      auto& split = v.origin == CellType::resistant ? rec.bar : rec.under;
      split[c] += v.edge_mutations;
    }
    if (v.parent != kNoParent) {
      if (v.parent >= k) throw std::logic_error("extract_sfs: parent must precede child");
      count[v.parent] += c;
    }
  }
  return rec;
}

struct WindowCount {
  std::uint64_t total = 0, bar = 0, under = 0;
};

/// Sums S_i over the open window x1 e^{l1 t} < i < x2 e^{l1 t}.
inline WindowCount window_counts(const SfsRecord& sfs, double x1, double x2, double t_obs, double lambda1) {
  const auto win = open_window(x1, x2, std::exp(lambda1 * t_obs));
  WindowCount out;
  auto sum = [&](const std::map<std::uint64_t, std::uint64_t>& m) {
    std::uint64_t s = 0;
    for (auto it = m.lower_bound(win.first); it != m.end() && win.contains(it->first); ++it) s += it->second;
    return s;
  };
  out.total = sum(sfs.total);
  out.bar = sum(sfs.bar);
  out.under = sum(sfs.under);
  return out;
}

/// One record per resistant cell born to a sensitive mother.
inline const std::vector<AncestralRecord>& ancestral_records(const SimOutcome& outcome) { return outcome.ancestral; }

/// Living cells per type counted from the genealogy.
inline std::pair<std::uint64_t, std::uint64_t> alive_counts(const SimOutcome& outcome) {
  std::uint64_t z0 = 0, z1 = 0;
  for (const auto& n : outcome.nodes) {
    if (n.pruned || n.status != NodeStatus::alive) continue;
    (n.type == CellType::sensitive ? z0 : z1) += 1;
  }
  return {z0, z1};
}

}  // namespace rescue_sfs::sim
