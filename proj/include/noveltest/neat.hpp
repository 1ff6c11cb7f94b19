#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "noveltest/rng.hpp"

namespace noveltest {

enum class NodeRole { Input, Bias, Hidden, Output };
enum class ActivationFn { Tanh, Sigmoid };

struct NodeGene {
  int id;
  NodeRole role;
  ActivationFn activation = ActivationFn::Tanh;
};

struct ConnectionGene {
  int innovation;
  int source;
  int target;
  double weight;
  bool enabled = true;
};

struct Genome {
  int id = -1;
  std::vector<NodeGene> nodes;             // sorted by id
  std::vector<ConnectionGene> connections; // sorted by innovation
  double fitness = 0.0;                    // maximization form
  double novelty = 0.0;
  double adjusted_fitness = 0.0;

  const NodeGene* find_node(int id_) const {
    for (const auto& n : nodes)
      if (n.id == id_) return &n;
    return nullptr;
  }
  bool has_connection(int source, int target) const {
    for (const auto& c : connections)
      if (c.source == source && c.target == target) return true;
    return false;
  }
};

// Identical structural changes within one run receive identical
// innovation numbers and node ids.
struct InnovationLedger {
  std::map<std::pair<int, int>, int> connection_innovations;
  struct Split {
    int node_id;
    int in_innovation;
    int out_innovation;
  };
  std::map<int, Split> splits;  // split connection innovation -> replacement
  int next_innovation = 0;
  int next_node_id = 0;

  int connection(int source, int target) {
    auto key = std::make_pair(source, target);
    auto it = connection_innovations.find(key);
    if (it != connection_innovations.end()) return it->second;
    int inn = next_innovation++;
    connection_innovations[key] = inn;
    return inn;
  }

  Split split(int connection_innovation, int source, int target) {
    auto it = splits.find(connection_innovation);
    if (it != splits.end()) return it->second;
    Split s;
    s.node_id = next_node_id++;
    s.in_innovation = connection(source, s.node_id);
    s.out_innovation = connection(s.node_id, target);
    splits[connection_innovation] = s;
    return s;
  }
};

struct NeatParams {
  int population_size = 150;
  double c1 = 1.0;  // excess
  double c2 = 1.0;  // disjoint
  double c3 = 0.4;  // mean weight difference
  double compatibility_threshold = 3.0;
  double weight_mutation_rate = 0.8;
  double weight_mutation_power = 0.5;
  double weight_reset_rate = 0.1;  // given a weight mutation, chance of a full reset
  double add_connection_rate = 0.1;
  double add_node_rate = 0.05;
  double crossover_rate = 0.75;
  double reenable_rate = 0.25;
  int elitism = 1;  // per species
  int stagnation_limit = 15;
  int tournament_size = 3;
};

struct Species {
  Genome representative;
  std::vector<int> members;  // indices into the population
  double best_fitness = -std::numeric_limits<double>::infinity();
  int staleness = 0;
};

struct Population {
  std::vector<Genome> genomes;
  std::vector<Species> species;
  int next_genome_id = 0;

  int fresh_id() { return next_genome_id++; }
};

// ---------------------------------------------------------------------------
// Phenotype

// Feed-forward evaluation in topological order; connections that close a
// cycle read the previous activation of their source. The previous
// activations are the only hidden state and reset with the network.
class Network {
 public:
  Network(const Genome& g, std::size_t input_count, std::size_t output_count)
      : input_count_(input_count), output_count_(output_count) {
    for (std::size_t i = 0; i < g.nodes.size(); ++i) index_[g.nodes[i].id] = i;
    nodes_ = g.nodes;
    prev_.assign(nodes_.size(), 0.0);
    cur_.assign(nodes_.size(), 0.0);

    struct Edge {
      std::size_t src, dst;
      double w;
      bool recurrent = false;
    };
    std::vector<Edge> edges;
    for (const auto& c : g.connections) {
      if (!c.enabled) continue;
      edges.push_back({index_.at(c.source), index_.at(c.target), c.weight, false});
    }

    // Kahn with a deterministic tie-break; edges into a node forced out of
    // a cycle become recurrent.
    std::vector<int> pending(nodes_.size(), 0);
    std::vector<std::vector<std::size_t>> incoming(nodes_.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      ++pending[edges[e].dst];
      incoming[edges[e].dst].push_back(e);
    }
    std::vector<bool> placed(nodes_.size(), false);
    std::size_t placed_count = 0;
    while (placed_count < nodes_.size()) {
      std::size_t pick = nodes_.size();
      for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (!placed[i] && pending[i] == 0) {
          pick = i;
          break;
        }
      if (pick == nodes_.size()) {
        // cycle: force the lowest-id unplaced node, marking its
        // unsatisfied in-edges recurrent
        for (std::size_t i = 0; i < nodes_.size(); ++i)
          if (!placed[i]) {
            pick = i;
            break;
          }
        for (std::size_t e : incoming[pick])
          if (!placed[edges[e].src] || edges[e].src == pick) edges[e].recurrent = true;
        pending[pick] = 0;
      }
      placed[pick] = true;
      ++placed_count;
      order_.push_back(pick);
      for (std::size_t e = 0; e < edges.size(); ++e)
        if (edges[e].src == pick && !edges[e].recurrent && pending[edges[e].dst] > 0)
          --pending[edges[e].dst];
    }

    in_edges_.assign(nodes_.size(), {});
    for (const auto& e : edges) in_edges_[e.dst].push_back({e.src, e.w, e.recurrent});
  }

  std::vector<double> activate(const std::vector<double>& inputs) {
    if (inputs.size() != input_count_)
      throw std::invalid_argument("network input dimension mismatch");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].role == NodeRole::Input) cur_[i] = inputs[node_input_index(i)];
      if (nodes_[i].role == NodeRole::Bias) cur_[i] = 1.0;
    }
    for (std::size_t i : order_) {
      if (nodes_[i].role == NodeRole::Input || nodes_[i].role == NodeRole::Bias) continue;
      double sum = 0.0;
      for (const auto& e : in_edges_[i]) sum += (e.recurrent ? prev_[e.src] : cur_[e.src]) * e.w;
      cur_[i] = apply(nodes_[i].activation, sum);
    }
    prev_ = cur_;
    std::vector<double> out;
    out.reserve(output_count_);
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].role == NodeRole::Output) out.push_back(cur_[i]);
    return out;
  }

  void reset() {
    std::fill(prev_.begin(), prev_.end(), 0.0);
    std::fill(cur_.begin(), cur_.end(), 0.0);
  }

 private:
  struct InEdge {
    std::size_t src;
    double w;
    bool recurrent;
  };

  static double apply(ActivationFn fn, double x) {
    switch (fn) {
      case ActivationFn::Tanh: return std::tanh(x);
      case ActivationFn::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
  }

  // Input node ids are assigned 0..n-1 at genome construction; nodes_ is
  // sorted by id, so node i's input slot is its id.
  std::size_t node_input_index(std::size_t i) const {
    return static_cast<std::size_t>(nodes_[i].id);
  }

  std::size_t input_count_, output_count_;
  std::vector<NodeGene> nodes_;
  std::map<int, std::size_t> index_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<InEdge>> in_edges_;
  std::vector<double> prev_, cur_;
};

// ---------------------------------------------------------------------------
// Variation

// Minimal topology: inputs 0..n-1, bias n, outputs n+1..n+m, fully
// connected input/bias -> output with weights in [-1,1].
inline Genome minimal_genome(int id, std::size_t inputs, std::size_t outputs,
                             InnovationLedger& ledger, Rng& rng) {
  Genome g;
  g.id = id;
  for (std::size_t i = 0; i < inputs; ++i)
    g.nodes.push_back({static_cast<int>(i), NodeRole::Input});
  int bias = static_cast<int>(inputs);
  g.nodes.push_back({bias, NodeRole::Bias});
  for (std::size_t o = 0; o < outputs; ++o)
    g.nodes.push_back({bias + 1 + static_cast<int>(o), NodeRole::Output});
  for (const auto& src : g.nodes) {
    if (src.role == NodeRole::Output) continue;
    for (const auto& dst : g.nodes) {
      if (dst.role != NodeRole::Output) continue;
      g.connections.push_back({ledger.connection(src.id, dst.id), src.id, dst.id,
                               rng.uniform(-1.0, 1.0), true});
    }
  }
  std::sort(g.connections.begin(), g.connections.end(),
            [](const auto& a, const auto& b) { return a.innovation < b.innovation; });
  if (ledger.next_node_id <= bias + static_cast<int>(outputs))
    ledger.next_node_id = bias + static_cast<int>(outputs) + 1;
  return g;
}

inline Genome mutate(const Genome& parent, const NeatParams& params, InnovationLedger& ledger,
                     Rng& rng, int new_id) {
  Genome g = parent;
  g.id = new_id;
  g.fitness = g.novelty = g.adjusted_fitness = 0.0;

  if (rng.chance(params.weight_mutation_rate)) {
    for (auto& c : g.connections) {
      if (rng.chance(params.weight_reset_rate))
        c.weight = rng.uniform(-1.0, 1.0);
      else
        c.weight += rng.uniform(-params.weight_mutation_power, params.weight_mutation_power);
    }
  }

  if (rng.chance(params.add_connection_rate)) {
    // a handful of attempts; silently skip when saturated
    for (int attempt = 0; attempt < 20; ++attempt) {
      const NodeGene& src = g.nodes[rng.uniform_int(0, static_cast<int>(g.nodes.size()) - 1)];
      const NodeGene& dst = g.nodes[rng.uniform_int(0, static_cast<int>(g.nodes.size()) - 1)];
      if (dst.role == NodeRole::Input || dst.role == NodeRole::Bias) continue;
      if (g.has_connection(src.id, dst.id)) continue;
      g.connections.push_back({ledger.connection(src.id, dst.id), src.id, dst.id,
                               rng.uniform(-1.0, 1.0), true});
      break;
    }
  }

  if (rng.chance(params.add_node_rate)) {
    std::vector<std::size_t> enabled;
    for (std::size_t i = 0; i < g.connections.size(); ++i)
      if (g.connections[i].enabled) enabled.push_back(i);
    if (!enabled.empty()) {
      std::size_t pick = enabled[rng.uniform_int(0, static_cast<int>(enabled.size()) - 1)];
      ConnectionGene old = g.connections[pick];  // copy: push_back below reallocates
      auto split = ledger.split(old.innovation, old.source, old.target);
      if (!g.find_node(split.node_id)) {
        g.connections[pick].enabled = false;
        g.nodes.push_back({split.node_id, NodeRole::Hidden});
        g.connections.push_back({split.in_innovation, old.source, split.node_id, 1.0, true});
        g.connections.push_back({split.out_innovation, split.node_id, old.target, old.weight, true});
      }
    }
  }

  std::sort(g.nodes.begin(), g.nodes.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(g.connections.begin(), g.connections.end(),
            [](const auto& a, const auto& b) { return a.innovation < b.innovation; });
  return g;
}

// Matching genes uniformly from either parent; disjoint and excess genes
// from the fitter parent (both, deduplicated, on a tie); genes disabled
// in either parent are re-enabled with probability params.reenable_rate.
inline Genome crossover(const Genome& a, const Genome& b, const NeatParams& params, Rng& rng,
                        int new_id) {
  const Genome* fitter = &a;
  const Genome* other = &b;
  bool tie = a.fitness == b.fitness;
  if (b.fitness > a.fitness) std::swap(fitter, other);

  std::map<int, const ConnectionGene*> genes_a, genes_b;
  for (const auto& c : a.connections) genes_a[c.innovation] = &c;
  for (const auto& c : b.connections) genes_b[c.innovation] = &c;

  Genome child;
  child.id = new_id;
  std::set<int> innovations;
  for (const auto& [inn, _] : genes_a) innovations.insert(inn);
  for (const auto& [inn, _] : genes_b) innovations.insert(inn);

  for (int inn : innovations) {
    auto ita = genes_a.find(inn);
    auto itb = genes_b.find(inn);
    const ConnectionGene* chosen = nullptr;
    bool disabled_in_either = false;
    if (ita != genes_a.end() && itb != genes_b.end()) {
      chosen = rng.chance(0.5) ? ita->second : itb->second;
      disabled_in_either = !ita->second->enabled || !itb->second->enabled;
    } else {
      const ConnectionGene* only = ita != genes_a.end() ? ita->second : itb->second;
      bool from_fitter = (ita != genes_a.end()) == (fitter == &a);
      if (tie || from_fitter) chosen = only;
      if (chosen) disabled_in_either = !chosen->enabled;
    }
    if (!chosen) continue;
    ConnectionGene gene = *chosen;
    if (disabled_in_either) gene.enabled = rng.chance(params.reenable_rate);
    child.connections.push_back(gene);
  }

  // Node genes: everything referenced by a connection plus the fixed
  // input/bias/output scaffold; definitions prefer the fitter parent.
  std::set<int> needed;
  for (const auto& n : fitter->nodes)
    if (n.role != NodeRole::Hidden) needed.insert(n.id);
  for (const auto& c : child.connections) {
    needed.insert(c.source);
    needed.insert(c.target);
  }
  for (int id : needed) {
    const NodeGene* n = fitter->find_node(id);
    if (!n) n = other->find_node(id);
    child.nodes.push_back(*n);
  }
  std::sort(child.nodes.begin(), child.nodes.end(),
            [](const auto& x, const auto& y) { return x.id < y.id; });
  return child;
}

// delta = c1*E/N + c2*D/N + c3*Wbar with N = max(gene counts, 1).
inline double compatibility_distance(const Genome& a, const Genome& b, const NeatParams& params) {
  std::size_t i = 0, j = 0;
  int matching = 0, disjoint = 0, excess = 0;
  double weight_diff = 0.0;
  while (i < a.connections.size() || j < b.connections.size()) {
    if (i >= a.connections.size()) {
      ++excess;
      ++j;
    } else if (j >= b.connections.size()) {
      ++excess;
      ++i;
    } else if (a.connections[i].innovation == b.connections[j].innovation) {
      ++matching;
      weight_diff += std::abs(a.connections[i].weight - b.connections[j].weight);
      ++i;
      ++j;
    } else if (a.connections[i].innovation < b.connections[j].innovation) {
      ++disjoint;
      ++i;
    } else {
      ++disjoint;
      ++j;
    }
  }
  double n = static_cast<double>(std::max({a.connections.size(), b.connections.size(),
                                           static_cast<std::size_t>(1)}));
  double wbar = matching > 0 ? weight_diff / matching : 0.0;
  return params.c1 * excess / n + params.c2 * disjoint / n + params.c3 * wbar;
}

// ---------------------------------------------------------------------------
// Population-level operations

inline Population init_population(const NeatParams& params, std::size_t inputs,
                                  std::size_t outputs, InnovationLedger& ledger, Rng& rng,
                                  const std::vector<Genome>& seeds = {}) {
  if (inputs < 1 || outputs < 1) throw std::invalid_argument("dimensions must be >= 1");
  for (const auto& s : seeds) {
    std::size_t in = 0, out = 0;
    for (const auto& n : s.nodes) {
      if (n.role == NodeRole::Input) ++in;
      if (n.role == NodeRole::Output) ++out;
    }
    if (in != inputs || out != outputs)
      throw std::invalid_argument("seed genome dimension mismatch");
  }
  Population pop;
  for (int i = 0; i < params.population_size; ++i) {
    if (!seeds.empty()) {
      const Genome& seed = seeds[i % seeds.size()];
      pop.genomes.push_back(mutate(seed, params, ledger, rng, pop.fresh_id()));
    } else {
      pop.genomes.push_back(minimal_genome(pop.fresh_id(), inputs, outputs, ledger, rng));
    }
  }
  return pop;
}

namespace detail {

// Largest-remainder allocation of `total` offspring proportional to the
// species shares; deterministic.
inline std::vector<int> allocate_quota(const std::vector<double>& shares, int total) {
  double sum = 0.0;
  for (double s : shares) sum += s;
  std::vector<int> quota(shares.size(), 0);
  if (shares.empty()) return quota;
  if (sum <= 0.0) {
    for (int i = 0; i < total; ++i) quota[i % shares.size()]++;
    return quota;
  }
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    double exact = shares[i] / sum * total;
    quota[i] = static_cast<int>(exact);
    assigned += quota[i];
    remainders.push_back({exact - quota[i], i});
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  for (int k = 0; k < total - assigned; ++k) quota[remainders[k % remainders.size()].second]++;
  return quota;
}

}  // namespace detail

// Speciates, shares fitness, allocates offspring and reproduces. `rank`
// lists population indices best-first and encodes the full selection
// order (including any novelty tiebreaking).
inline Population evolve_generation(const Population& pop, const NeatParams& params,
                                    InnovationLedger& ledger, const std::vector<std::size_t>& rank,
                                    Rng& rng) {
  std::vector<std::size_t> position(pop.genomes.size());
  for (std::size_t r = 0; r < rank.size(); ++r) position[rank[r]] = r;

  // Speciate against carried-over representatives, then fresh species.
  std::vector<Species> species = pop.species;
  for (auto& s : species) s.members.clear();
  for (std::size_t gi = 0; gi < pop.genomes.size(); ++gi) {
    bool placed = false;
    for (auto& s : species) {
      if (compatibility_distance(pop.genomes[gi], s.representative, params) <
          params.compatibility_threshold) {
        s.members.push_back(static_cast<int>(gi));
        placed = true;
        break;
      }
    }
    if (!placed) {
      Species s;
      s.representative = pop.genomes[gi];
      s.members.push_back(static_cast<int>(gi));
      species.push_back(std::move(s));
    }
  }
  std::erase_if(species, [](const Species& s) { return s.members.empty(); });

  // Staleness bookkeeping.
  std::size_t global_best = rank.empty() ? 0 : rank[0];
  for (auto& s : species) {
    double best = -std::numeric_limits<double>::infinity();
    for (int m : s.members) best = std::max(best, pop.genomes[m].fitness);
    if (best > s.best_fitness) {
      s.best_fitness = best;
      s.staleness = 0;
    } else {
      ++s.staleness;
    }
  }
  std::vector<Species> survivors;
  for (auto& s : species) {
    bool holds_best = std::find(s.members.begin(), s.members.end(),
                                static_cast<int>(global_best)) != s.members.end();
    if (s.staleness <= params.stagnation_limit || holds_best) survivors.push_back(std::move(s));
  }

  Population next;
  next.next_genome_id = pop.next_genome_id;

  if (survivors.empty()) {
    // every species stagnant: restart from mutants of the global best
    const Genome& best = pop.genomes[global_best];
    for (int i = 0; i < params.population_size; ++i)
      next.genomes.push_back(mutate(best, params, ledger, rng, next.fresh_id()));
    return next;
  }

  // Fitness sharing and offspring quota by mean adjusted fitness.
  std::vector<double> shares;
  double fitness_floor = 0.0;
  for (const auto& g : pop.genomes) fitness_floor = std::min(fitness_floor, g.fitness);
  for (auto& s : survivors) {
    double mean_adjusted = 0.0;
    for (int m : s.members)
      mean_adjusted += (pop.genomes[m].fitness - fitness_floor) / s.members.size();
    mean_adjusted /= s.members.size();
    shares.push_back(mean_adjusted);
  }
  std::vector<int> quota = detail::allocate_quota(shares, params.population_size);

  auto best_ranked = [&](const std::vector<int>& members) {
    int best = members[0];
    for (int m : members)
      if (position[m] < position[best]) best = m;
    return best;
  };
  auto tournament = [&](const std::vector<int>& members) {
    int best = members[rng.uniform_int(0, static_cast<int>(members.size()) - 1)];
    for (int t = 1; t < params.tournament_size; ++t) {
      int cand = members[rng.uniform_int(0, static_cast<int>(members.size()) - 1)];
      if (position[cand] < position[best]) best = cand;
    }
    return best;
  };

  for (std::size_t si = 0; si < survivors.size(); ++si) {
    const auto& s = survivors[si];
    int remaining = quota[si];
    for (int e = 0; e < params.elitism && remaining > 0; ++e, --remaining)
      next.genomes.push_back(pop.genomes[best_ranked(s.members)]);  // elite: copied unchanged
    while (remaining-- > 0) {
      int pa = tournament(s.members);
      Genome child;
      if (s.members.size() > 1 && rng.chance(params.crossover_rate)) {
        int pb = tournament(s.members);
        child = crossover(pop.genomes[pa], pop.genomes[pb], params, rng, next.fresh_id());
        child = mutate(child, params, ledger, rng, child.id);
      } else {
        child = mutate(pop.genomes[pa], params, ledger, rng, next.fresh_id());
      }
      next.genomes.push_back(std::move(child));
    }
  }

  // Representatives for the next generation: a random current member.
  for (std::size_t si = 0; si < survivors.size(); ++si) {
    auto& s = survivors[si];
    s.representative =
        pop.genomes[s.members[rng.uniform_int(0, static_cast<int>(s.members.size()) - 1)]];
    s.members.clear();
  }
  next.species = std::move(survivors);
  return next;
}

}  // namespace noveltest
