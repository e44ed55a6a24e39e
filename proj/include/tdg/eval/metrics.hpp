#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tdg/eval/stats.hpp"
#include "tdg/sim/episode.hpp"

namespace tdg::eval {

struct DrivingMetrics {
  double sdlp = 0.0;       // m, population SD of lateral offset
  double sds = 0.0;        // m/s, population SD of speed
  double avg_speed = 0.0;  // m/s
  double dct = 0.0;        // s

  friend bool operator==(const DrivingMetrics&, const DrivingMetrics&) = default;
};

inline constexpr std::array<const char*, 4> kMetricNames = {"sdlp", "sds", "avg_speed", "dct"};
double metric_value(const DrivingMetrics& m, std::size_t index);

// Whole-episode metrics; dct is last time minus first time. Needs >= 2
// records.
DrivingMetrics compute_metrics(const sim::Episode& episode, const sim::Terrain& terrain);

// Per-episode metrics of each section: records are assigned by the arc
// length of their position; section dct is the time spent there (record
// count times the tick). Sections an episode never entered are empty.
std::vector<std::optional<DrivingMetrics>> episode_section_metrics(const sim::Episode& episode,
                                                                   const sim::Terrain& terrain);

// Mean over episodes of the per-section values; a section entered by no
// episode is missing.
std::vector<std::optional<DrivingMetrics>> section_metrics(const std::vector<sim::Episode>& episodes,
                                                           const sim::Terrain& terrain);

struct MetricCorrelation {
  std::string metric;
  std::optional<Regression> fit;  // empty when the correlation is undefined
  std::optional<double> r;
  std::size_t sections_used = 0;
};

struct MetricTest {
  std::string metric;
  WelchResult welch;
  double mean_a = 0.0, sd_a = 0.0, mean_b = 0.0, sd_b = 0.0;
};

struct SectionReport {
  std::vector<std::optional<DrivingMetrics>> drivers;  // per section
  std::vector<std::optional<DrivingMetrics>> model;
  std::vector<MetricCorrelation> correlations;          // per metric
  std::vector<MetricTest> tests;                        // per metric, whole episodes
};

SectionReport compare_populations(const std::vector<sim::Episode>& drivers, const std::vector<sim::Episode>& model,
                                  const sim::Terrain& terrain);

// Each CSV starts with a "# TDGREPORT 1 ..." comment line naming the format
// version and the SD convention.
// metric,section,mean_drivers,mean_model (missing sections written as "missing")
std::string sections_csv(const SectionReport& report);
// metric,slope,intercept,r ("undefined" when not computable)
std::string correlation_csv(const SectionReport& report);
// metric,t,df,p,mean_a,sd_a,mean_b,sd_b
std::string ttest_csv(const SectionReport& report);

}  // namespace tdg::eval
