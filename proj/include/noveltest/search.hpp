#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <thread>

#include "noveltest/json_io.hpp"
#include "noveltest/neat.hpp"
#include "noveltest/novelty.hpp"
#include "noveltest/objectives.hpp"
#include "noveltest/vm.hpp"

namespace noveltest {

enum class SearchMode { FitnessOnly, FitnessPlusNovelty };

inline const char* mode_name(SearchMode m) {
  return m == SearchMode::FitnessOnly ? "fitness" : "novelty";
}

struct SearchConfig {
  SearchMode mode = SearchMode::FitnessPlusNovelty;
  std::uint64_t master_seed = 1;
  int budget_generations = 200;  // total, across targets
  long budget_ms = 0;            // 0 = unlimited; virtual ms (1 simulated tick = 1 ms)
  int max_ticks = kDefaultMaxTicks;
  int decision_interval = kDefaultDecisionInterval;
  int robustness_reps = 10;
  int target_generation_quota = 25;
  int workers = 1;
  NeatParams neat;
  NoveltyParams novelty;
};

inline json config_to_json(const SearchConfig& c) {
  return {{"mode", mode_name(c.mode)},
          {"master_seed", c.master_seed},
          {"budget_generations", c.budget_generations},
          {"budget_ms", c.budget_ms},
          {"max_ticks", c.max_ticks},
          {"decision_interval", c.decision_interval},
          {"robustness_reps", c.robustness_reps},
          {"target_generation_quota", c.target_generation_quota},
          {"population_size", c.neat.population_size},
          {"novelty_k", c.novelty.k},
          {"archive_probability", c.novelty.archive_probability}};
}

struct EvaluationRecord {
  int genome_id = -1;
  double fitness_max = 0.0;  // F = 1/(1 + f_s(t)), maximization form
  ObjectiveResult objective;
  BehaviorVector behavior;
  std::set<int> covered;
  std::uint64_t episode_seed = 0;
  double novelty = 0.0;
};

// F values equal within this tolerance count as a tie ("performed
// equally well"); exact float equality is brittle across evaluation
// orders.
constexpr double kFitnessTieTolerance = 1e-9;

// Primary key F descending; in fitness-plus-novelty mode, ties on F are
// ordered by novelty descending; remaining ties by genome id ascending.
inline std::vector<std::size_t> rank_candidates(const std::vector<EvaluationRecord>& records,
                                                SearchMode mode) {
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].fitness_max != records[b].fitness_max)
      return records[a].fitness_max > records[b].fitness_max;
    return records[a].genome_id < records[b].genome_id;
  });
  if (mode == SearchMode::FitnessPlusNovelty) {
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i + 1;
      double head = records[order[i]].fitness_max;
      while (j < order.size() && head - records[order[j]].fitness_max <= kFitnessTieTolerance) ++j;
      std::sort(order.begin() + i, order.begin() + j, [&](std::size_t a, std::size_t b) {
        if (records[a].novelty != records[b].novelty)
          return records[a].novelty > records[b].novelty;
        return records[a].genome_id < records[b].genome_id;
      });
      i = j;
    }
  }
  return order;
}

// ---------------------------------------------------------------------------
// Genome -> game policy

// Argmax over the network outputs picks the action; ties break toward
// the lowest action index. Key presses are held for one decision
// interval.
inline Action select_action(const std::vector<double>& outputs, const GameInstance& inst,
                            int decision_interval) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < outputs.size(); ++i)
    if (outputs[i] > outputs[best]) best = i;
  Action a = inst.alphabet[best];
  if (a.kind == Action::Kind::PressKey) a.duration = decision_interval;
  return a;
}

inline EpisodeResult run_genome_episode(const Genome& g, const GameInstance& inst,
                                        std::uint64_t seed, int max_ticks,
                                        int decision_interval) {
  Network net(g, inst.schema.dimension(), inst.alphabet.size());
  Policy policy = [&](const BehaviorVector& features) {
    return select_action(net.activate(features), inst, decision_interval);
  };
  return run_episode(policy, inst, seed, max_ticks, decision_interval);
}

// ---------------------------------------------------------------------------
// Robustness

// Replays the genome on r fresh seeds; on success returns the set of
// statements covered in every one of the r episodes (the reliably
// covered set), on failure nullopt.
inline std::optional<std::set<int>> robustness_check(const Genome& g, int target,
                                                     const GameInstance& inst, int reps,
                                                     std::uint64_t seed_base, int max_ticks,
                                                     int decision_interval) {
  std::optional<std::set<int>> robust;
  for (int i = 0; i < reps; ++i) {
    EpisodeResult ep =
        run_genome_episode(g, inst, mix_seed(seed_base, i), max_ticks, decision_interval);
    if (!ep.covered.count(target)) return std::nullopt;
    if (!robust) {
      robust = std::move(ep.covered);
    } else {
      std::set<int> inter;
      std::set_intersection(robust->begin(), robust->end(), ep.covered.begin(), ep.covered.end(),
                            std::inserter(inter, inter.begin()));
      robust = std::move(inter);
    }
  }
  return robust;
}

// ---------------------------------------------------------------------------
// Suite + timeline

struct SuiteEntry {
  int target = -1;
  Genome genome;
  std::uint64_t seed_base = 0;  // verification seeds derive from this
  int reps = 0;
  int generation = -1;  // global generation the entry was found in
};

struct DynamicTestSuite {
  std::string spec_digest;
  json config_echo;
  std::vector<SuiteEntry> entries;
};

struct TimelinePoint {
  int generation = 0;
  long elapsed_ms = 0;  // virtual ms: simulated ticks so far
  int covered = 0;      // robustly covered statements
  int total = 0;
};

inline json suite_to_json(const DynamicTestSuite& suite) {
  json entries = json::array();
  for (const auto& e : suite.entries)
    entries.push_back({{"target", e.target},
                       {"seed_base", e.seed_base},
                       {"reps", e.reps},
                       {"generation", e.generation},
                       {"genome", genome_to_json(e.genome)}});
  return {{"spec_digest", suite.spec_digest}, {"config", suite.config_echo}, {"entries", entries}};
}

inline DynamicTestSuite suite_from_json(const json& j) {
  DynamicTestSuite suite;
  suite.spec_digest = j.at("spec_digest").get<std::string>();
  suite.config_echo = j.value("config", json::object());
  for (const auto& je : j.at("entries")) {
    SuiteEntry e;
    e.target = je.at("target").get<int>();
    e.seed_base = je.at("seed_base").get<std::uint64_t>();
    e.reps = je.at("reps").get<int>();
    e.generation = je.at("generation").get<int>();
    e.genome = genome_from_json(je.at("genome"));
    suite.entries.push_back(std::move(e));
  }
  return suite;
}

inline std::string timeline_to_csv(const std::vector<TimelinePoint>& timeline,
                                   const std::string& run_id, const std::string& mode,
                                   bool header = true) {
  std::ostringstream out;
  if (header) out << "run_id,mode,generation,elapsed_ms,covered,total\n";
  for (const auto& p : timeline)
    out << run_id << ',' << mode << ',' << p.generation << ',' << p.elapsed_ms << ','
        << p.covered << ',' << p.total << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// The search loop

struct GenerationInfo {
  int target = -1;
  int generation = 0;  // global generation index
  SearchMode mode = SearchMode::FitnessOnly;
  const std::vector<EvaluationRecord>* records = nullptr;
  const std::vector<std::size_t>* rank = nullptr;
  double best_fitness = 0.0;
  int covered = 0;
  int total = 0;
};

using SearchObserver = std::function<void(const GenerationInfo&)>;

struct SearchResult {
  DynamicTestSuite suite;
  std::vector<TimelinePoint> timeline;
  BehaviorArchive archive{0};
  std::set<int> robust_covered;
  int generations = 0;
  long virtual_ms = 0;
};

namespace detail {

inline void evaluate_population(const Population& pop, const GameInstance& inst,
                                const ControlDependenceGraph& cdg, int target,
                                const SearchConfig& cfg, int generation,
                                std::vector<EvaluationRecord>& records) {
  records.assign(pop.genomes.size(), {});
  auto evaluate_one = [&](std::size_t i) {
    const Genome& g = pop.genomes[i];
    EvaluationRecord rec;
    rec.genome_id = g.id;
    rec.episode_seed = mix_seed(cfg.master_seed, 0xe9150deULL, generation, g.id);
    EpisodeResult ep = run_genome_episode(g, inst, rec.episode_seed, cfg.max_ticks,
                                          cfg.decision_interval);
    rec.objective = statement_fitness(ep, target, cdg);
    rec.fitness_max = 1.0 / (1.0 + rec.objective.fitness);
    rec.behavior = extract_features(ep.final_state, inst);
    rec.covered = std::move(ep.covered);
    records[i] = std::move(rec);
  };
  int workers = std::max(1, cfg.workers);
  if (workers == 1 || pop.genomes.size() < 2) {
    for (std::size_t i = 0; i < pop.genomes.size(); ++i) evaluate_one(i);
  } else {
    std::vector<std::thread> threads;
    std::size_t n = pop.genomes.size();
    for (int w = 0; w < workers; ++w)
      threads.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += static_cast<std::size_t>(workers)) evaluate_one(i);
      });
    for (auto& t : threads) t.join();
  }
}

}  // namespace detail

// Evolves networks target by target: pick the next uncovered statement,
// run NEAT generations ranked by fitness (plus the novelty tiebreaker),
// accept a covering genome once it passes the robustness check, seed the
// next target's population with the suite so far. A pure function of
// (instance, config).
inline SearchResult neatest_search(const GameInstance& inst, const SearchConfig& cfg,
                                   const SearchObserver& observer = {}) {
  ControlDependenceGraph cdg = build_cdg(inst.spec);
  SearchResult result;
  result.suite.spec_digest = spec_digest(inst.spec);
  result.suite.config_echo = config_to_json(cfg);
  result.archive = BehaviorArchive(mix_seed(cfg.master_seed, 0xa9c817eULL));

  InnovationLedger ledger;
  Rng repro_rng(mix_seed(cfg.master_seed, 0x9e9d0ULL));
  std::map<int, int> quota_used;
  int generation = 0;
  int total = inst.total_statements;

  auto budget_left = [&] {
    if (generation >= cfg.budget_generations) return false;
    if (cfg.budget_ms > 0 && result.virtual_ms >= cfg.budget_ms) return false;
    return true;
  };

  while (budget_left()) {
    std::set<int> targets = next_targets(cdg, result.robust_covered);
    if (targets.empty()) break;  // full robust coverage
    int target = -1;
    for (int t : targets) {
      if (quota_used[t] < cfg.target_generation_quota) {
        target = t;
        break;
      }
    }
    if (target < 0) {
      // every remaining target exhausted its quota: grant another round
      for (int t : targets) quota_used[t] = 0;
      continue;
    }

    std::vector<Genome> seeds;
    for (const auto& e : result.suite.entries) seeds.push_back(e.genome);
    Population pop = init_population(cfg.neat, inst.schema.dimension(), inst.alphabet.size(),
                                     ledger, repro_rng, seeds);

    bool solved = false;
    while (!solved && quota_used[target] < cfg.target_generation_quota && budget_left()) {
      std::vector<EvaluationRecord> records;
      detail::evaluate_population(pop, inst, cdg, target, cfg, generation, records);
      for (const auto& rec : records) result.virtual_ms += cfg.max_ticks;

      // Novelty against a frozen snapshot of this generation + archive.
      {
        std::vector<const BehaviorVector*> neighbours;
        neighbours.reserve(records.size() - 1 + result.archive.entries.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
          neighbours.clear();
          for (std::size_t j = 0; j < records.size(); ++j)
            if (j != i) neighbours.push_back(&records[j].behavior);
          for (const auto& b : result.archive.entries) neighbours.push_back(&b);
          records[i].novelty = novelty_score(records[i].behavior, neighbours, cfg.novelty);
        }
      }
      for (const auto& rec : records) update_archive(result.archive, rec.behavior, cfg.novelty);

      for (std::size_t i = 0; i < records.size(); ++i) {
        pop.genomes[i].fitness = records[i].fitness_max;
        pop.genomes[i].novelty = records[i].novelty;
      }
      std::vector<std::size_t> rank = rank_candidates(records, cfg.mode);

      // Robustness gate, best candidates first.
      for (std::size_t ri : rank) {
        if (!records[ri].covered.count(target)) continue;
        std::uint64_t seed_base =
            mix_seed(cfg.master_seed, 0x10b057ULL, generation, records[ri].genome_id);
        auto robust = robustness_check(pop.genomes[ri], target, inst, cfg.robustness_reps,
                                       seed_base, cfg.max_ticks, cfg.decision_interval);
        result.virtual_ms += static_cast<long>(cfg.robustness_reps) * cfg.max_ticks;
        if (!robust) continue;
        SuiteEntry entry;
        entry.target = target;
        entry.genome = pop.genomes[ri];
        entry.seed_base = seed_base;
        entry.reps = cfg.robustness_reps;
        entry.generation = generation;
        result.suite.entries.push_back(std::move(entry));
        for (int s : *robust) result.robust_covered.insert(s);
        result.robust_covered.insert(target);
        solved = true;
        break;
      }

      int covered_statements = 0;
      for (int s : result.robust_covered)
        if (!cdg.node(s).is_entry) ++covered_statements;
      result.timeline.push_back({generation, result.virtual_ms, covered_statements, total});

      if (observer) {
        GenerationInfo info;
        info.target = target;
        info.generation = generation;
        info.mode = cfg.mode;
        info.records = &records;
        info.rank = &rank;
        info.best_fitness = rank.empty() ? 0.0 : records[rank[0]].fitness_max;
        info.covered = covered_statements;
        info.total = total;
        observer(info);
      }

      ++generation;
      ++quota_used[target];
      if (!solved && quota_used[target] < cfg.target_generation_quota && budget_left())
        pop = evolve_generation(pop, cfg.neat, ledger, rank, repro_rng);
    }
  }

  result.generations = generation;
  return result;
}

// ---------------------------------------------------------------------------
// Replay

struct ReplayReport {
  struct Row {
    int target;
    bool passed;
  };
  std::vector<Row> rows;
  bool all_passed() const {
    for (const auto& r : rows)
      if (!r.passed) return false;
    return true;
  }
};

struct DigestMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline ReplayReport replay_suite(const DynamicTestSuite& suite, const GameInstance& inst,
                                 int reps, int max_ticks = kDefaultMaxTicks,
                                 int decision_interval = kDefaultDecisionInterval) {
  if (suite.spec_digest != spec_digest(inst.spec))
    throw DigestMismatch("suite digest does not match the game spec");
  ReplayReport report;
  for (const auto& e : suite.entries) {
    auto robust = robustness_check(e.genome, e.target, inst, reps > 0 ? reps : e.reps,
                                   e.seed_base, max_ticks, decision_interval);
    report.rows.push_back({e.target, robust.has_value()});
  }
  return report;
}

}  // namespace noveltest
