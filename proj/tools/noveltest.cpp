// noveltest: generate dynamic test suites for sprite games, replay them,
// and compare the fitness-only and fitness-plus-novelty search modes.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "noveltest/experiment.hpp"
#include "noveltest/games.hpp"

namespace {

using namespace noveltest;

constexpr int kExitOk = 0;
constexpr int kExitReplayFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitIoError = 3;
constexpr int kExitDigestMismatch = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

GameInstance load_game_source(const std::string& source) {
  if (source == "builtin:maze") return load_game(build_maze_world());
  if (source == "builtin:clicker") return load_game(build_clicker());
  try {
    return load_game(spec_from_json(load_json_file(source)));
  } catch (const std::exception& e) {
    throw IoError("cannot load game spec '" + source + "': " + e.what());
  }
}

SearchMode parse_mode(const std::string& s) {
  if (s == "fitness") return SearchMode::FitnessOnly;
  if (s == "novelty") return SearchMode::FitnessPlusNovelty;
  throw ConfigError("--mode must be 'fitness' or 'novelty', got '" + s + "'");
}

int default_workers() {
  if (const char* env = std::getenv("NOVELTEST_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1) return static_cast<int>(v);
    throw ConfigError("NOVELTEST_WORKERS must be a positive integer, got '" + std::string(env) +
                      "'");
  }
  return 1;
}

// Config file keys mirror the flags; unknown keys are rejected so typos
// never pass silently. Command-line flags win over file values.
const std::set<std::string> kConfigKeys = {
    "game",        "mode",        "seed",       "budget_gens",      "budget_ms",
    "out",         "timeline",    "suite",      "out_dir",          "reps",
    "workers",     "max_ticks",   "population", "decision_interval", "quota",
    "novelty_k",   "archive_probability"};

json load_config_file(const std::string& path) {
  json j;
  try {
    j = load_json_file(path);
  } catch (const std::exception& e) {
    throw IoError("cannot read config file '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!kConfigKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  return j;
}

// Applies a file value unless the flag was given on the command line.
template <typename T>
void merge(const CLI::App& app, const std::string& flag, const json& file, const char* key,
           T& slot) {
  const CLI::Option* opt = app.get_option_no_throw(flag);
  if (opt && opt->count() > 0) return;
  if (file.contains(key)) slot = file.at(key).get<T>();
}

struct CommonArgs {
  std::string game;
  std::string config_path;
  std::string mode_str = "novelty";
  std::uint64_t seed = 1;
  int budget_gens = 200;
  long budget_ms = 0;
  int workers = 0;  // 0 = resolve from env / default
  int max_ticks = kDefaultMaxTicks;
  int decision_interval = kDefaultDecisionInterval;
  int population = 150;
  int quota = 25;
  int novelty_k = 15;
  double archive_probability = 0.1;
};

void add_search_flags(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "JSON config file; flags override its values");
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--budget-gens", a.budget_gens, "total generation budget");
  cmd->add_option("--budget-ms", a.budget_ms, "simulated-time budget in ms (0 = unlimited)");
  cmd->add_option("--workers", a.workers, "evaluation worker threads");
  cmd->add_option("--max-ticks", a.max_ticks, "episode length cap in ticks");
  cmd->add_option("--decision-interval", a.decision_interval, "ticks between policy queries");
  cmd->add_option("--population", a.population, "NEAT population size");
  cmd->add_option("--quota", a.quota, "generation quota per target before moving on");
  cmd->add_option("--novelty-k", a.novelty_k, "nearest neighbours for the novelty score");
  cmd->add_option("--archive-probability", a.archive_probability, "archive insertion probability");
}

void merge_search_flags(const CLI::App& cmd, const json& file, CommonArgs& a) {
  merge(cmd, "--game", file, "game", a.game);
  merge(cmd, "--mode", file, "mode", a.mode_str);
  merge(cmd, "--seed", file, "seed", a.seed);
  merge(cmd, "--budget-gens", file, "budget_gens", a.budget_gens);
  merge(cmd, "--budget-ms", file, "budget_ms", a.budget_ms);
  merge(cmd, "--workers", file, "workers", a.workers);
  merge(cmd, "--max-ticks", file, "max_ticks", a.max_ticks);
  merge(cmd, "--decision-interval", file, "decision_interval", a.decision_interval);
  merge(cmd, "--population", file, "population", a.population);
  merge(cmd, "--quota", file, "quota", a.quota);
  merge(cmd, "--novelty-k", file, "novelty_k", a.novelty_k);
  merge(cmd, "--archive-probability", file, "archive_probability", a.archive_probability);
}

SearchConfig build_config(const CommonArgs& a) {
  if (a.game.empty()) throw ConfigError("--game is required");
  if (a.budget_gens < 1) throw ConfigError("--budget-gens must be >= 1");
  if (a.max_ticks < 1) throw ConfigError("--max-ticks must be >= 1");
  if (a.population < 2) throw ConfigError("--population must be >= 2");
  if (a.quota < 1) throw ConfigError("--quota must be >= 1");
  if (a.novelty_k < 1) throw ConfigError("--novelty-k must be >= 1");
  if (a.archive_probability < 0.0 || a.archive_probability > 1.0)
    throw ConfigError("--archive-probability must be in [0,1]");
  SearchConfig cfg;
  cfg.mode = parse_mode(a.mode_str);
  cfg.master_seed = a.seed;
  cfg.budget_generations = a.budget_gens;
  cfg.budget_ms = a.budget_ms;
  cfg.max_ticks = a.max_ticks;
  cfg.decision_interval = a.decision_interval;
  cfg.target_generation_quota = a.quota;
  cfg.workers = a.workers > 0 ? a.workers : default_workers();
  if (cfg.workers < 1) throw ConfigError("--workers must be >= 1");
  cfg.neat.population_size = a.population;
  cfg.novelty.k = a.novelty_k;
  cfg.novelty.archive_probability = a.archive_probability;
  return cfg;
}

SearchObserver progress_observer() {
  return [](const GenerationInfo& info) {
    std::cerr << "gen " << info.generation << " target " << info.target << " best F "
              << info.best_fitness << " coverage " << info.covered << "/" << info.total << "\n";
  };
}

int cmd_generate(const CLI::App& cmd, CommonArgs& args, std::string& out_path,
                 std::string& timeline_path) {
  json file = args.config_path.empty() ? json::object() : load_config_file(args.config_path);
  merge_search_flags(cmd, file, args);
  merge(cmd, "--out", file, "out", out_path);
  merge(cmd, "--timeline", file, "timeline", timeline_path);
  if (out_path.empty()) throw ConfigError("--out is required");
  SearchConfig cfg = build_config(args);
  GameInstance inst = load_game_source(args.game);

  SearchResult result = neatest_search(inst, cfg, progress_observer());

  try {
    write_text_file(out_path, suite_to_json(result.suite).dump(2) + "\n");
    if (!timeline_path.empty()) {
      std::string run_id = "seed" + std::to_string(cfg.master_seed);
      write_text_file(timeline_path, timeline_to_csv(result.timeline, run_id,
                                                     mode_name(cfg.mode)));
    }
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  int covered = result.timeline.empty() ? 0 : result.timeline.back().covered;
  std::cerr << "done: " << result.suite.entries.size() << " suite entries, coverage " << covered
            << "/" << inst.total_statements << " after " << result.generations
            << " generations\n";
  return kExitOk;
}

int cmd_replay(const std::string& suite_path, const std::string& game, int reps) {
  if (reps < 1) throw ConfigError("--reps must be >= 1");
  if (game.empty()) throw ConfigError("--game is required");
  DynamicTestSuite suite;
  try {
    suite = suite_from_json(load_json_file(suite_path));
  } catch (const std::exception& e) {
    throw IoError("cannot load suite '" + suite_path + "': " + e.what());
  }
  GameInstance inst = load_game_source(game);
  ReplayReport report;
  try {
    report = replay_suite(suite, inst, reps);
  } catch (const DigestMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDigestMismatch;
  }
  std::cout << "target\tresult\n";
  for (const auto& row : report.rows)
    std::cout << row.target << '\t' << (row.passed ? "pass" : "FAIL") << '\n';
  return report.all_passed() ? kExitOk : kExitReplayFailure;
}

int cmd_compare(const CLI::App& cmd, CommonArgs& args, std::string& out_dir, int& reps) {
  json file = args.config_path.empty() ? json::object() : load_config_file(args.config_path);
  merge_search_flags(cmd, file, args);
  merge(cmd, "--out-dir", file, "out_dir", out_dir);
  merge(cmd, "--reps", file, "reps", reps);
  if (out_dir.empty()) throw ConfigError("--out-dir is required");
  if (reps < 2) throw ConfigError("--reps must be >= 2 for the statistics");
  SearchConfig cfg = build_config(args);
  GameInstance inst = load_game_source(args.game);

  std::map<std::string, int> events;
  if (args.game == "builtin:maze") {
    MazeIds ids = maze_ids(inst.spec);
    events["level2_reached"] = ids.level1_advance;
    events["won"] = ids.win;
  } else if (args.game == "builtin:clicker") {
    ClickerIds ids = clicker_ids(inst.spec);
    events["stats_menu_reached"] = ids.stats_counter;
    events["won"] = ids.win;
  }
  RunObserver observer = [](const RunOutcome& out) {
    std::cerr << out.run_id << ": coverage " << out.covered << "/" << out.total << " in "
              << out.generations << " generations\n";
  };
  ComparisonReport report = run_comparison(inst, cfg, reps, events, observer);
  json echo = config_to_json(cfg);
  echo.erase("mode");  // both modes ran
  echo["reps"] = reps;
  try {
    write_report(report, out_dir, echo);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  std::cout << "a12 " << report.a12 << "\n"
            << "p " << report.p_value << "\n"
            << "median_fitness " << report.fitness_median << "\n"
            << "median_novelty " << report.novelty_median << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic test-suite generation for sprite games"};
  app.require_subcommand(1);

  CommonArgs gen_args, cmp_args;
  std::string out_path, timeline_path, suite_path, replay_game, out_dir;
  int replay_reps = 10, compare_reps = 10;

  CLI::App* gen = app.add_subcommand("generate", "evolve a test suite for one game");
  gen->add_option("--game", gen_args.game, "game spec path or builtin:maze / builtin:clicker");
  gen->add_option("--mode", gen_args.mode_str, "search mode: fitness or novelty");
  add_search_flags(gen, gen_args);
  gen->add_option("--out", out_path, "suite output path");
  gen->add_option("--timeline", timeline_path, "coverage timeline CSV path");

  CLI::App* rep = app.add_subcommand("replay", "re-run a suite against a game");
  rep->add_option("--suite", suite_path, "suite JSON path")->required();
  rep->add_option("--game", replay_game, "game spec path or builtin name");
  rep->add_option("--reps", replay_reps, "verification episodes per entry");

  CLI::App* cmp = app.add_subcommand("compare", "fitness vs novelty experiment");
  cmp->add_option("--game", cmp_args.game, "game spec path or builtin name");
  cmp->add_option("--reps", compare_reps, "independent runs per mode");
  add_search_flags(cmp, cmp_args);
  cmp->add_option("--out-dir", out_dir, "report output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (gen->parsed()) return cmd_generate(*gen, gen_args, out_path, timeline_path);
    if (rep->parsed()) return cmd_replay(suite_path, replay_game, replay_reps);
    if (cmp->parsed()) return cmd_compare(*cmp, cmp_args, out_dir, compare_reps);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
