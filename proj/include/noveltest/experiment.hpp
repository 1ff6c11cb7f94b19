#pragma once

#include <filesystem>
#include <iomanip>

#include "noveltest/search.hpp"
#include "noveltest/stats.hpp"

namespace noveltest {

struct RunOutcome {
  std::string run_id;
  SearchMode mode = SearchMode::FitnessOnly;
  double coverage = 0.0;  // robustly covered / total, fraction in [0,1]
  int covered = 0;
  int total = 0;
  int generations = 0;
  long virtual_ms = 0;
  std::vector<TimelinePoint> timeline;
  std::set<int> robust_covered;
};

struct ComparisonReport {
  std::string game;
  int repetitions = 0;
  std::vector<RunOutcome> fitness_runs;
  std::vector<RunOutcome> novelty_runs;
  double a12 = 0.5;  // novelty vs fitness on final coverage; > 0.5 favours novelty
  double u = 0.0;
  double p_value = 1.0;
  bool significant = false;  // at alpha = 0.05
  double fitness_median = 0.0;
  double novelty_median = 0.0;
  // event name -> per-mode count of runs where the event statement was
  // robustly covered (e.g. "reached level 2")
  std::map<std::string, std::map<std::string, int>> events;
};

using RunObserver = std::function<void(const RunOutcome&)>;

// Runs `reps` independent searches per mode on the same game with seeds
// derived from the master seed, then compares final robust coverage.
// `event_targets` names statements whose per-mode reach counts are
// reported alongside the coverage statistics.
inline ComparisonReport run_comparison(const GameInstance& inst, const SearchConfig& base,
                                       int reps,
                                       const std::map<std::string, int>& event_targets = {},
                                       const RunObserver& observer = {}) {
  ComparisonReport report;
  report.game = inst.spec.name;
  report.repetitions = reps;
  for (const auto& [name, id] : event_targets) {
    (void)id;
    report.events[name] = {{"fitness", 0}, {"novelty", 0}};
  }
  for (int mode_idx = 0; mode_idx < 2; ++mode_idx) {
    SearchMode mode = mode_idx == 0 ? SearchMode::FitnessOnly : SearchMode::FitnessPlusNovelty;
    for (int rep = 0; rep < reps; ++rep) {
      SearchConfig cfg = base;
      cfg.mode = mode;
      cfg.master_seed = mix_seed(base.master_seed, mode_idx, rep);
      SearchResult res = neatest_search(inst, cfg);
      RunOutcome out;
      out.run_id = std::string(mode_name(mode)) + "-" + std::to_string(rep);
      out.mode = mode;
      out.total = inst.total_statements;
      out.covered = res.timeline.empty() ? 0 : res.timeline.back().covered;
      out.coverage = out.total ? static_cast<double>(out.covered) / out.total : 0.0;
      out.generations = res.generations;
      out.virtual_ms = res.virtual_ms;
      out.timeline = std::move(res.timeline);
      out.robust_covered = std::move(res.robust_covered);
      for (const auto& [name, id] : event_targets)
        if (out.robust_covered.count(id)) report.events[name][mode_name(mode)]++;
      if (observer) observer(out);
      (mode == SearchMode::FitnessOnly ? report.fitness_runs : report.novelty_runs)
          .push_back(std::move(out));
    }
  }
  auto coverages = [](const std::vector<RunOutcome>& runs) {
    std::vector<double> out;
    for (const auto& r : runs) out.push_back(r.coverage);
    return out;
  };
  std::vector<double> fit = coverages(report.fitness_runs);
  std::vector<double> nov = coverages(report.novelty_runs);
  report.a12 = vargha_delaney_a12(nov, fit);
  MannWhitneyResult mw = mann_whitney_u(nov, fit);
  report.u = mw.u;
  report.p_value = mw.p;
  report.significant = mw.p < 0.05;
  report.fitness_median = median(fit);
  report.novelty_median = median(nov);
  return report;
}

inline json report_to_json(const ComparisonReport& report) {
  json samples = {{"fitness", json::array()}, {"novelty", json::array()}};
  for (const auto& r : report.fitness_runs) samples["fitness"].push_back(r.coverage);
  for (const auto& r : report.novelty_runs) samples["novelty"].push_back(r.coverage);
  return {{"game", report.game},
          {"modes", json::array({"fitness", "novelty"})},
          {"repetitions", report.repetitions},
          {"coverage_samples", samples},
          {"a12", report.a12},
          {"u", report.u},
          {"p", report.p_value},
          {"significant", report.significant},
          {"events", report.events}};
}

// ---------------------------------------------------------------------------
// Plots, as tiny hand-rolled SVGs. Fixed geometry so outputs are
// reproducible byte for byte.

namespace svg {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kMarginLeft = 56;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 24;
constexpr int kMarginBottom = 40;

inline std::string fmt(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v;
  std::string s = out.str();
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s.empty() ? "0" : s;
}

inline double plot_x(double frac) {
  return kMarginLeft + frac * (kWidth - kMarginLeft - kMarginRight);
}
inline double plot_y(double frac) {
  return kHeight - kMarginBottom - frac * (kHeight - kMarginTop - kMarginBottom);
}

inline void open_plot(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
      << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"16\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"13\">"
      << title << "</text>\n"
      << "<line x1=\"" << fmt(plot_x(0)) << "\" y1=\"" << fmt(plot_y(0)) << "\" x2=\""
      << fmt(plot_x(1)) << "\" y2=\"" << fmt(plot_y(0)) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << fmt(plot_x(0)) << "\" y1=\"" << fmt(plot_y(0)) << "\" x2=\""
      << fmt(plot_x(0)) << "\" y2=\"" << fmt(plot_y(1)) << "\" stroke=\"black\"/>\n";
}

}  // namespace svg

// Median coverage over generations, one polyline per mode.
inline std::string coverage_over_time_svg(const ComparisonReport& report) {
  using namespace svg;
  long max_gen = 1;
  for (const auto* runs : {&report.fitness_runs, &report.novelty_runs})
    for (const auto& r : *runs)
      if (!r.timeline.empty()) max_gen = std::max<long>(max_gen, r.timeline.back().generation);

  // median across runs of coverage-so-far at each generation
  auto series = [&](const std::vector<RunOutcome>& runs) {
    std::vector<double> med;
    for (long g = 0; g <= max_gen; ++g) {
      std::vector<double> at;
      for (const auto& r : runs) {
        double cov = 0.0;
        for (const auto& p : r.timeline) {
          if (p.generation > g) break;
          cov = p.total ? 100.0 * p.covered / p.total : 0.0;
        }
        at.push_back(cov);
      }
      med.push_back(median(at));
    }
    return med;
  };

  std::ostringstream out;
  open_plot(out, "Median coverage over generations");
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">generation"
      << "</text>\n"
      << "<text x=\"14\" y=\"" << kHeight / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
         "transform=\"rotate(-90 14 "
      << kHeight / 2 << ")\">coverage %</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    double frac = tick / 4.0;
    out << "<text x=\"" << fmt(plot_x(0) - 6) << "\" y=\"" << fmt(plot_y(frac) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << fmt(frac * 100.0) << "</text>\n";
  }
  const char* colours[2] = {"#d62728", "#1f77b4"};
  const char* labels[2] = {"fitness", "novelty"};
  const std::vector<RunOutcome>* groups[2] = {&report.fitness_runs, &report.novelty_runs};
  for (int m = 0; m < 2; ++m) {
    std::vector<double> med = series(*groups[m]);
    out << "<polyline fill=\"none\" stroke=\"" << colours[m] << "\" stroke-width=\"2\" points=\"";
    for (long g = 0; g <= max_gen; ++g) {
      if (g) out << ' ';
      out << fmt(plot_x(max_gen ? static_cast<double>(g) / max_gen : 0.0)) << ','
          << fmt(plot_y(med[g] / 100.0));
    }
    out << "\"/>\n";
    out << "<text x=\"" << fmt(plot_x(1) - 90) << "\" y=\"" << 40 + 16 * m
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << colours[m] << "\">"
        << labels[m] << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

// Box plot (min/Q1/median/Q3/max whiskers) of the final coverage per mode.
inline std::string coverage_box_svg(const ComparisonReport& report) {
  using namespace svg;
  std::ostringstream out;
  open_plot(out, "Final coverage by mode");
  out << "<text x=\"14\" y=\"" << kHeight / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
         "transform=\"rotate(-90 14 "
      << kHeight / 2 << ")\">coverage %</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    double frac = tick / 4.0;
    out << "<text x=\"" << fmt(plot_x(0) - 6) << "\" y=\"" << fmt(plot_y(frac) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << fmt(frac * 100.0) << "</text>\n";
  }
  const char* colours[2] = {"#d62728", "#1f77b4"};
  const char* labels[2] = {"fitness", "novelty"};
  const std::vector<RunOutcome>* groups[2] = {&report.fitness_runs, &report.novelty_runs};
  for (int m = 0; m < 2; ++m) {
    std::vector<double> cov;
    for (const auto& r : *groups[m]) cov.push_back(100.0 * r.coverage);
    if (cov.empty()) continue;
    double lo = quantile(cov, 0.0), q1 = quantile(cov, 0.25), q2 = median(cov),
           q3 = quantile(cov, 0.75), hi = quantile(cov, 1.0);
    double cx = plot_x(m == 0 ? 0.3 : 0.7);
    double half = 40.0;
    auto y = [&](double c) { return plot_y(c / 100.0); };
    out << "<line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(y(lo)) << "\" x2=\"" << fmt(cx)
        << "\" y2=\"" << fmt(y(hi)) << "\" stroke=\"black\"/>\n";
    for (double w : {lo, hi})
      out << "<line x1=\"" << fmt(cx - half / 2) << "\" y1=\"" << fmt(y(w)) << "\" x2=\""
          << fmt(cx + half / 2) << "\" y2=\"" << fmt(y(w)) << "\" stroke=\"black\"/>\n";
    out << "<rect x=\"" << fmt(cx - half) << "\" y=\"" << fmt(y(q3)) << "\" width=\""
        << fmt(2 * half) << "\" height=\"" << fmt(std::max(0.0, y(q1) - y(q3)))
        << "\" fill=\"" << colours[m] << "\" fill-opacity=\"0.4\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << fmt(cx - half) << "\" y1=\"" << fmt(y(q2)) << "\" x2=\""
        << fmt(cx + half) << "\" y2=\"" << fmt(y(q2)) << "\" stroke=\"black\" "
           "stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fmt(cx) << "\" y=\"" << kHeight - 8
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << labels[m]
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

// Writes stats.json, timelines.csv, coverage_over_time.svg and box.svg
// into `dir`.
inline void write_report(const ComparisonReport& report, const std::filesystem::path& dir,
                         const json& config_echo = json::object()) {
  std::filesystem::create_directories(dir);
  json stats = report_to_json(report);
  stats["config"] = config_echo;
  write_text_file(dir / "stats.json", stats.dump(2) + "\n");
  std::string csv = "run_id,mode,generation,elapsed_ms,covered,total\n";
  for (const auto* runs : {&report.fitness_runs, &report.novelty_runs})
    for (const auto& r : *runs)
      csv += timeline_to_csv(r.timeline, r.run_id, mode_name(r.mode), /*header=*/false);
  write_text_file(dir / "timelines.csv", csv);
  write_text_file(dir / "coverage_over_time.svg", coverage_over_time_svg(report));
  write_text_file(dir / "box.svg", coverage_box_svg(report));
}

}  // namespace noveltest
