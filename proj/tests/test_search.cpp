#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>

#include "doctest.h"
#include "noveltest/experiment.hpp"
#include "noveltest/games.hpp"
#include "noveltest/search.hpp"

using namespace noveltest;

namespace {

GameSpec trivial_spec() {
  GameSpec spec;
  spec.name = "trivial";
  spec.backdrops = 1;
  SpriteSpec hero;
  hero.name = "hero";
  hero.costumes = {{20, 20, "blue"}};
  spec.sprites.push_back(hero);
  Script sc;
  sc.owner = "hero";
  sc.trigger = {Trigger::Kind::GameStart, ""};
  sc.body = {stmt::go_to(0, 0), stmt::declare_win()};
  spec.scripts.push_back(std::move(sc));
  return spec;
}

SearchConfig small_config(SearchMode mode, std::uint64_t seed) {
  SearchConfig cfg;
  cfg.mode = mode;
  cfg.master_seed = seed;
  cfg.budget_generations = 80;
  cfg.neat.population_size = 30;
  return cfg;
}

EvaluationRecord rec(int id, double fmax, double nov) {
  EvaluationRecord r;
  r.genome_id = id;
  r.fitness_max = fmax;
  r.novelty = nov;
  return r;
}

}  // namespace

TEST_CASE("rank_candidates orders by fitness, ties by id in fitness mode") {
  std::vector<EvaluationRecord> records{rec(3, 0.5, 0.9), rec(1, 0.8, 0.1), rec(2, 0.5, 0.2)};
  auto order = rank_candidates(records, SearchMode::FitnessOnly);
  CHECK(order == std::vector<std::size_t>{1, 2, 0});  // 0.8, then ids 2 < 3
}

TEST_CASE("rank_candidates breaks fitness plateaus by novelty") {
  std::vector<EvaluationRecord> records{rec(0, 0.5, 0.1), rec(1, 0.5, 0.9), rec(2, 0.5, 0.4),
                                        rec(3, 0.9, 0.0), rec(4, 0.5, 0.4)};
  auto fit = rank_candidates(records, SearchMode::FitnessOnly);
  CHECK(fit == std::vector<std::size_t>{3, 0, 1, 2, 4});
  auto nov = rank_candidates(records, SearchMode::FitnessPlusNovelty);
  // within the 0.5 plateau: novelty 0.9, then the 0.4 pair by id, then 0.1
  CHECK(nov == std::vector<std::size_t>{3, 1, 2, 4, 0});
}

TEST_CASE("near-ties within the tolerance count as a plateau") {
  std::vector<EvaluationRecord> records{rec(0, 0.5, 0.1), rec(1, 0.5 - 1e-12, 0.9)};
  auto nov = rank_candidates(records, SearchMode::FitnessPlusNovelty);
  CHECK(nov == std::vector<std::size_t>{1, 0});
  // far apart: fitness decides regardless of novelty
  records[1].fitness_max = 0.4;
  CHECK(rank_candidates(records, SearchMode::FitnessPlusNovelty) ==
        std::vector<std::size_t>{0, 1});
}

TEST_CASE("rank_candidates is a permutation matching a reference sort") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EvaluationRecord> records;
    int n = 2 + rng.uniform_int(0, 18);
    for (int i = 0; i < n; ++i)
      records.push_back(rec(i, rng.uniform_int(0, 3) / 3.0, rng.next_unit()));
    for (SearchMode mode : {SearchMode::FitnessOnly, SearchMode::FitnessPlusNovelty}) {
      auto order = rank_candidates(records, mode);
      std::set<std::size_t> seen(order.begin(), order.end());
      REQUIRE(seen.size() == records.size());
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const auto& a = records[order[k]];
        const auto& b = records[order[k + 1]];
        CHECK(a.fitness_max >= b.fitness_max);
        if (mode == SearchMode::FitnessPlusNovelty &&
            a.fitness_max - b.fitness_max <= kFitnessTieTolerance)
          CHECK(a.novelty >= b.novelty);
      }
    }
  }
}

TEST_CASE("select_action takes the argmax and holds keys for the interval") {
  GameInstance inst = load_game(build_maze_world());
  std::vector<double> outputs(inst.alphabet.size(), 0.0);
  outputs[2] = 1.0;
  Action a = select_action(outputs, inst, 10);
  CHECK(a.kind == Action::Kind::PressKey);
  CHECK(a.arg == inst.alphabet[2].arg);
  CHECK(a.duration == 10);
  // all-equal outputs: lowest index wins
  std::fill(outputs.begin(), outputs.end(), 0.5);
  CHECK(select_action(outputs, inst, 10).arg == inst.alphabet[0].arg);
}

TEST_CASE("robustness rejects coverage that rides a lucky random spawn") {
  GameInstance inst = load_game(build_maze_world());
  // spawn-offset statement: only runs when the random draw lands >= 1
  int lucky = inst.spec.scripts[0].body[2].body[0].id;
  InnovationLedger ledger;
  Rng rng(1);
  Genome g = minimal_genome(0, inst.schema.dimension(), inst.alphabet.size(), ledger, rng);
  int rejected = 0;
  for (std::uint64_t base = 1; base <= 6; ++base)
    if (!robustness_check(g, lucky, inst, 10, base, 300, 10)) ++rejected;
  CHECK(rejected >= 5);  // all-10-seeds-lucky has probability (2/3)^10
}

TEST_CASE("robustness returns the intersection of reliably covered statements") {
  GameInstance inst = load_game(build_maze_world());
  int unconditional = inst.spec.scripts[0].body[0].id;  // spawn go-to
  int lucky = inst.spec.scripts[0].body[2].body[0].id;
  InnovationLedger ledger;
  Rng rng(1);
  Genome g = minimal_genome(0, inst.schema.dimension(), inst.alphabet.size(), ledger, rng);
  auto robust = robustness_check(g, unconditional, inst, 10, 1, 300, 10);
  REQUIRE(robust.has_value());
  CHECK(robust->count(unconditional) == 1);
  CHECK(robust->count(lucky) == 0);  // not covered on every seed
}

TEST_CASE("trivial always-win game is fully covered in the first generation") {
  GameInstance inst = load_game(trivial_spec());
  SearchResult res = neatest_search(inst, small_config(SearchMode::FitnessPlusNovelty, 1));
  CHECK(res.suite.entries.size() == 1);
  CHECK(res.generations == 1);
  REQUIRE_FALSE(res.timeline.empty());
  CHECK(res.timeline.back().covered == inst.total_statements);
  CHECK(next_targets(build_cdg(inst.spec), res.robust_covered).empty());
}

TEST_CASE("search output is deterministic, including across worker counts") {
  GameInstance inst = load_game(build_clicker());
  SearchConfig cfg = small_config(SearchMode::FitnessPlusNovelty, 7);
  SearchResult a = neatest_search(inst, cfg);
  SearchResult b = neatest_search(inst, cfg);
  cfg.workers = 4;
  SearchResult c = neatest_search(inst, cfg);
  CHECK(suite_to_json(a.suite).dump() == suite_to_json(b.suite).dump());
  CHECK(suite_to_json(a.suite).dump() == suite_to_json(c.suite).dump());
  std::string ta = timeline_to_csv(a.timeline, "r", "novelty");
  CHECK(ta == timeline_to_csv(b.timeline, "r", "novelty"));
  CHECK(ta == timeline_to_csv(c.timeline, "r", "novelty"));
}

TEST_CASE("timeline is monotone and well-formed") {
  GameInstance inst = load_game(build_clicker());
  SearchResult res = neatest_search(inst, small_config(SearchMode::FitnessOnly, 3));
  REQUIRE_FALSE(res.timeline.empty());
  for (std::size_t i = 0; i < res.timeline.size(); ++i) {
    const auto& p = res.timeline[i];
    CHECK(p.generation == static_cast<int>(i));
    CHECK(p.total == inst.total_statements);
    CHECK(p.covered >= 0);
    CHECK(p.covered <= p.total);
    if (i) {
      CHECK(p.elapsed_ms > res.timeline[i - 1].elapsed_ms);
      CHECK(p.covered >= res.timeline[i - 1].covered);
    }
  }
  std::string csv = timeline_to_csv(res.timeline, "run7", "fitness");
  CHECK(csv.rfind("run_id,mode,generation,elapsed_ms,covered,total\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(res.timeline.size()));
}

TEST_CASE("suite JSON roundtrips") {
  GameInstance inst = load_game(build_clicker());
  SearchResult res = neatest_search(inst, small_config(SearchMode::FitnessPlusNovelty, 7));
  REQUIRE_FALSE(res.suite.entries.empty());
  json j = suite_to_json(res.suite);
  DynamicTestSuite back = suite_from_json(j);
  CHECK(suite_to_json(back).dump() == j.dump());
  CHECK(back.spec_digest == res.suite.spec_digest);
  CHECK(back.entries.size() == res.suite.entries.size());
}

TEST_CASE("suite entries come from nondecreasing generations (curriculum order)") {
  GameInstance inst = load_game(build_clicker());
  SearchResult res = neatest_search(inst, small_config(SearchMode::FitnessPlusNovelty, 7));
  REQUIRE(res.suite.entries.size() >= 2);
  for (std::size_t i = 1; i < res.suite.entries.size(); ++i)
    CHECK(res.suite.entries[i].generation >= res.suite.entries[i - 1].generation);
}

TEST_CASE("a fresh suite replays clean") {
  GameInstance inst = load_game(build_clicker());
  SearchResult res = neatest_search(inst, small_config(SearchMode::FitnessPlusNovelty, 7));
  REQUIRE_FALSE(res.suite.entries.empty());
  ReplayReport rep = replay_suite(res.suite, inst, 0);
  CHECK(rep.rows.size() == res.suite.entries.size());
  CHECK(rep.all_passed());
}

TEST_CASE("replay refuses a spec with a different digest") {
  GameInstance inst = load_game(build_maze_world());
  SearchConfig cfg = small_config(SearchMode::FitnessPlusNovelty, 1);
  cfg.budget_generations = 5;
  SearchResult res = neatest_search(inst, cfg);
  GameSpec mutated = build_maze_world();
  mutated.sprites[1].costumes[0].colour = "purple";  // portal
  GameInstance other = load_game(std::move(mutated));
  CHECK_THROWS_AS(replay_suite(res.suite, other, 0), DigestMismatch);
}

TEST_CASE("replay against a behaviour-changing mutation fails affected targets") {
  GameInstance inst = load_game(build_clicker());
  SearchResult res = neatest_search(inst, small_config(SearchMode::FitnessPlusNovelty, 7));
  int shop_upgrade = inst.spec.scripts[4].body[0].body[0].body[0].id;  // change points -3
  bool suite_has_it = false;
  for (const auto& e : res.suite.entries) suite_has_it |= e.target == shop_upgrade;
  REQUIRE(suite_has_it);

  GameSpec mutated = build_clicker();
  // raise the shop threshold out of reach
  mutated.scripts[4].body[0].body[0].pred.rhs = Expr::num(1000);
  GameInstance other = load_game(std::move(mutated));
  DynamicTestSuite spoofed = res.suite;
  spoofed.spec_digest = spec_digest(other.spec);  // bypass the digest gate on purpose
  ReplayReport rep = replay_suite(spoofed, other, 0);
  CHECK_FALSE(rep.all_passed());
  for (std::size_t i = 0; i < rep.rows.size(); ++i)
    if (rep.rows[i].target == shop_upgrade) CHECK_FALSE(rep.rows[i].passed);
}

TEST_CASE("an empty suite replays trivially") {
  GameInstance inst = load_game(build_clicker());
  DynamicTestSuite empty;
  empty.spec_digest = spec_digest(inst.spec);
  ReplayReport rep = replay_suite(empty, inst, 0);
  CHECK(rep.rows.empty());
  CHECK(rep.all_passed());
}

TEST_CASE("comparison on the trivial game is a statistical wash") {
  GameInstance inst = load_game(trivial_spec());
  SearchConfig cfg = small_config(SearchMode::FitnessOnly, 5);
  int win_id = inst.spec.scripts[0].body[1].id;
  ComparisonReport rep = run_comparison(inst, cfg, 3, {{"won", win_id}});
  CHECK(rep.repetitions == 3);
  CHECK(rep.fitness_runs.size() == 3);
  CHECK(rep.novelty_runs.size() == 3);
  for (const auto* runs : {&rep.fitness_runs, &rep.novelty_runs})
    for (const auto& r : *runs) CHECK(r.coverage == doctest::Approx(1.0));
  CHECK(rep.a12 == doctest::Approx(0.5));
  CHECK(rep.p_value == doctest::Approx(1.0));
  CHECK_FALSE(rep.significant);
  CHECK(rep.events.at("won").at("fitness") == 3);
  CHECK(rep.events.at("won").at("novelty") == 3);
}

TEST_CASE("stats JSON has the pinned schema and is rerun-deterministic") {
  GameInstance inst = load_game(trivial_spec());
  SearchConfig cfg = small_config(SearchMode::FitnessOnly, 5);
  ComparisonReport a = run_comparison(inst, cfg, 2);
  ComparisonReport b = run_comparison(inst, cfg, 2);
  json ja = report_to_json(a);
  CHECK(ja.dump() == report_to_json(b).dump());
  for (const char* key : {"game", "modes", "repetitions", "coverage_samples", "a12", "u", "p",
                          "significant", "events"})
    CHECK(ja.contains(key));
  CHECK(ja["modes"] == json::array({"fitness", "novelty"}));
  CHECK(ja["coverage_samples"]["fitness"].size() == 2);
  CHECK(ja["coverage_samples"]["novelty"].size() == 2);
}

TEST_CASE("write_report emits all four artifacts with consistent timelines") {
  GameInstance inst = load_game(trivial_spec());
  SearchConfig cfg = small_config(SearchMode::FitnessOnly, 5);
  ComparisonReport rep = run_comparison(inst, cfg, 2);
  auto dir = std::filesystem::temp_directory_path() / "noveltest-report-test";
  std::filesystem::remove_all(dir);
  write_report(rep, dir);
  for (const char* f : {"stats.json", "timelines.csv", "coverage_over_time.svg", "box.svg"})
    CHECK(std::filesystem::exists(dir / f));
  std::string csv = read_text_file(dir / "timelines.csv");
  long rows = 0;
  for (const auto* runs : {&rep.fitness_runs, &rep.novelty_runs})
    for (const auto& r : *runs) rows += static_cast<long>(r.timeline.size());
  CHECK(std::count(csv.begin(), csv.end(), '\n') == rows + 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("coverage-over-time SVG draws one series per mode") {
  GameInstance inst = load_game(trivial_spec());
  ComparisonReport rep = run_comparison(inst, small_config(SearchMode::FitnessOnly, 5), 2);
  std::string svg = coverage_over_time_svg(rep);
  std::size_t count = 0, pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    ++count;
    ++pos;
  }
  CHECK(count == 2);
  CHECK(svg.find("#d62728") != std::string::npos);
  CHECK(svg.find("#1f77b4") != std::string::npos);
}

TEST_CASE("box plot matches the reviewed golden rendering") {
  ComparisonReport rep;
  rep.game = "demo";
  rep.repetitions = 4;
  double fit[] = {0.50, 0.60, 0.70, 0.80};
  double nov[] = {0.65, 0.75, 0.85, 0.95};
  for (int i = 0; i < 4; ++i) {
    RunOutcome f;
    f.run_id = "fitness-" + std::to_string(i);
    f.mode = SearchMode::FitnessOnly;
    f.coverage = fit[i];
    rep.fitness_runs.push_back(f);
    RunOutcome n;
    n.run_id = "novelty-" + std::to_string(i);
    n.mode = SearchMode::FitnessPlusNovelty;
    n.coverage = nov[i];
    rep.novelty_runs.push_back(n);
  }
  const std::string golden = R"SVG(<svg xmlns="http://www.w3.org/2000/svg" width="640" height="400" viewBox="0 0 640 400">
<rect width="640" height="400" fill="white"/>
<text x="320" y="16" text-anchor="middle" font-family="sans-serif" font-size="13">Final coverage by mode</text>
<line x1="56" y1="360" x2="624" y2="360" stroke="black"/>
<line x1="56" y1="360" x2="56" y2="24" stroke="black"/>
<text x="14" y="200" text-anchor="middle" font-family="sans-serif" font-size="11" transform="rotate(-90 14 200)">coverage %</text>
<text x="50" y="364" text-anchor="end" font-family="sans-serif" font-size="10">0</text>
<text x="50" y="280" text-anchor="end" font-family="sans-serif" font-size="10">25</text>
<text x="50" y="196" text-anchor="end" font-family="sans-serif" font-size="10">50</text>
<text x="50" y="112" text-anchor="end" font-family="sans-serif" font-size="10">75</text>
<text x="50" y="28" text-anchor="end" font-family="sans-serif" font-size="10">100</text>
<line x1="226.4" y1="192" x2="226.4" y2="91.2" stroke="black"/>
<line x1="206.4" y1="192" x2="246.4" y2="192" stroke="black"/>
<line x1="206.4" y1="91.2" x2="246.4" y2="91.2" stroke="black"/>
<rect x="186.4" y="116.4" width="80" height="50.4" fill="#d62728" fill-opacity="0.4" stroke="black"/>
<line x1="186.4" y1="141.6" x2="266.4" y2="141.6" stroke="black" stroke-width="2"/>
<text x="226.4" y="392" text-anchor="middle" font-family="sans-serif" font-size="11">fitness</text>
<line x1="453.6" y1="141.6" x2="453.6" y2="40.8" stroke="black"/>
<line x1="433.6" y1="141.6" x2="473.6" y2="141.6" stroke="black"/>
<line x1="433.6" y1="40.8" x2="473.6" y2="40.8" stroke="black"/>
<rect x="413.6" y="66" width="80" height="50.4" fill="#1f77b4" fill-opacity="0.4" stroke="black"/>
<line x1="413.6" y1="91.2" x2="493.6" y2="91.2" stroke="black" stroke-width="2"/>
<text x="453.6" y="392" text-anchor="middle" font-family="sans-serif" font-size="11">novelty</text>
</svg>
)SVG";
  CHECK(coverage_box_svg(rep) == golden);
}
