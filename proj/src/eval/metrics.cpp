#include "tdg/eval/metrics.hpp"

#include <charconv>
#include <cmath>

#include "tdg/error.hpp"

namespace tdg::eval {

double metric_value(const DrivingMetrics& m, std::size_t index) {
  switch (index) {
    case 0: return m.sdlp;
    case 1: return m.sds;
    case 2: return m.avg_speed;
    case 3: return m.dct;
  }
  throw RangeError("metric index " + std::to_string(index) + " out of range");
}

namespace {

DrivingMetrics metrics_of(const std::vector<double>& offsets, const std::vector<double>& speeds, double dct) {
  return {population_sd(offsets), population_sd(speeds), mean(speeds), dct};
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

constexpr const char* kReportHeader = "# TDGREPORT 1 sd=population p=two-sided\n";

}  // namespace

DrivingMetrics compute_metrics(const sim::Episode& episode, const sim::Terrain& terrain) {
  if (episode.records.size() < 2) {
    throw UsageError("metrics need at least 2 records, episode has " + std::to_string(episode.records.size()));
  }
  std::vector<double> offsets, speeds;
  for (const auto& r : episode.records) {
    offsets.push_back(terrain.project(r.vehicle_state.position).offset);
    speeds.push_back(r.vehicle_state.speed);
  }
  return metrics_of(offsets, speeds, episode.records.back().time - episode.records.front().time);
}

std::vector<std::optional<DrivingMetrics>> episode_section_metrics(const sim::Episode& episode,
                                                                   const sim::Terrain& terrain) {
  const std::size_t n = static_cast<std::size_t>(terrain.section_count());
  std::vector<std::vector<double>> offsets(n), speeds(n);
  for (const auto& r : episode.records) {
    const sim::Projection p = terrain.project(r.vehicle_state.position);
    const auto s = static_cast<std::size_t>(terrain.section_index(p.arc_length));
    offsets[s].push_back(p.offset);
    speeds[s].push_back(r.vehicle_state.speed);
  }
  std::vector<std::optional<DrivingMetrics>> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (speeds[s].empty()) continue;
    out[s] = metrics_of(offsets[s], speeds[s], static_cast<double>(speeds[s].size()) * sim::kTickSeconds);
  }
  return out;
}

std::vector<std::optional<DrivingMetrics>> section_metrics(const std::vector<sim::Episode>& episodes,
                                                           const sim::Terrain& terrain) {
  const std::size_t n = static_cast<std::size_t>(terrain.section_count());
  std::vector<DrivingMetrics> sums(n);
  std::vector<std::size_t> counts(n, 0);
  for (const auto& ep : episodes) {
    const auto per = episode_section_metrics(ep, terrain);
    for (std::size_t s = 0; s < n; ++s) {
      if (!per[s]) continue;
      sums[s].sdlp += per[s]->sdlp;
      sums[s].sds += per[s]->sds;
      sums[s].avg_speed += per[s]->avg_speed;
      sums[s].dct += per[s]->dct;
      ++counts[s];
    }
  }
  std::vector<std::optional<DrivingMetrics>> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (counts[s] == 0) continue;
    const double k = static_cast<double>(counts[s]);
    out[s] = DrivingMetrics{sums[s].sdlp / k, sums[s].sds / k, sums[s].avg_speed / k, sums[s].dct / k};
  }
  return out;
}

SectionReport compare_populations(const std::vector<sim::Episode>& drivers, const std::vector<sim::Episode>& model,
                                  const sim::Terrain& terrain) {
  if (drivers.empty() || model.empty()) throw UsageError("compare_populations needs two nonempty populations");
  SectionReport rep;
  rep.drivers = section_metrics(drivers, terrain);
  rep.model = section_metrics(model, terrain);
  std::vector<DrivingMetrics> whole_a, whole_b;
  for (const auto& e : drivers) whole_a.push_back(compute_metrics(e, terrain));
  for (const auto& e : model) whole_b.push_back(compute_metrics(e, terrain));

  for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
    MetricCorrelation c;
    c.metric = kMetricNames[m];
    std::vector<double> xs, ys;
    for (std::size_t s = 0; s < rep.drivers.size(); ++s) {
      if (!rep.drivers[s] || !rep.model[s]) continue;
      xs.push_back(metric_value(*rep.drivers[s], m));
      ys.push_back(metric_value(*rep.model[s], m));
    }
    c.sections_used = xs.size();
    try {
      c.r = pearson_r(xs, ys);
      c.fit = linear_regression(xs, ys);
    } catch (const UndefinedCorrelationError&) {
    } catch (const DimensionError&) {
    }
    rep.correlations.push_back(c);

    MetricTest t;
    t.metric = kMetricNames[m];
    std::vector<double> a, b;
    for (const auto& d : whole_a) a.push_back(metric_value(d, m));
    for (const auto& d : whole_b) b.push_back(metric_value(d, m));
    t.mean_a = mean(a);
    t.sd_a = population_sd(a);
    t.mean_b = mean(b);
    t.sd_b = population_sd(b);
    if (a.size() >= 2 && b.size() >= 2) {
      t.welch = welch_t_test(a, b);
    } else {
      t.welch = {std::nan(""), std::nan(""), std::nan("")};
    }
    rep.tests.push_back(t);
  }
  return rep;
}

std::string sections_csv(const SectionReport& report) {
  std::string out = std::string(kReportHeader) + "metric,section,mean_drivers,mean_model\n";
  for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
    for (std::size_t s = 0; s < report.drivers.size(); ++s) {
      out += std::string(kMetricNames[m]) + "," + std::to_string(s + 1) + ",";
      out += report.drivers[s] ? num(metric_value(*report.drivers[s], m)) : "missing";
      out += ",";
      out += report.model[s] ? num(metric_value(*report.model[s], m)) : "missing";
      out += "\n";
    }
  }
  return out;
}

std::string correlation_csv(const SectionReport& report) {
  std::string out = std::string(kReportHeader) + "metric,slope,intercept,r\n";
  for (const auto& c : report.correlations) {
    if (c.r && c.fit) {
      out += c.metric + "," + num(c.fit->slope) + "," + num(c.fit->intercept) + "," + num(*c.r) + "\n";
    } else {
      out += c.metric + ",undefined,undefined,undefined\n";
    }
  }
  return out;
}

std::string ttest_csv(const SectionReport& report) {
  std::string out = std::string(kReportHeader) + "metric,t,df,p,mean_a,sd_a,mean_b,sd_b\n";
  for (const auto& t : report.tests) {
    out += t.metric + "," + num(t.welch.t) + "," + num(t.welch.df) + "," + num(t.welch.p) + "," + num(t.mean_a) + "," +
           num(t.sd_a) + "," + num(t.mean_b) + "," + num(t.sd_b) + "\n";
  }
  return out;
}

}  // namespace tdg::eval
