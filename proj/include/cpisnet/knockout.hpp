#pragma once

// Error / attack node-removal simulations and the Monte-Carlo confidence
// interval comparison of empirical statistics against null-model families.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "cpisnet/error.hpp"
#include "cpisnet/metrics.hpp"
#include "cpisnet/netbuild.hpp"
#include "cpisnet/nullmodels.hpp"
#include "cpisnet/parallel.hpp"
#include "cpisnet/rng.hpp"

namespace cpisnet {

enum class Strategy { error, attack };

inline std::string_view strategy_name(Strategy s) {
  return s == Strategy::error ? "error" : "attack";
}

namespace detail {

// Surviving-graph bookkeeping for a knockout run: the mask of live nodes and
// each node's degree restricted to live neighbours.
class SurvivingGraph {
 public:
  explicit SurvivingGraph(const BinaryNetwork& net)
      : net_(net), alive_(all_alive(net.size())), live_(net.size()) {
    out_ = net.out_degrees();
    in_ = net.in_degrees();
  }

  std::size_t live_count() const { return live_; }
  bool is_alive(std::size_t v) const { return (alive_[v / 64] >> (v % 64)) & 1U; }
  std::size_t degree_sum(std::size_t v) const { return out_[v] + in_[v]; }

  std::vector<std::size_t> live_nodes() const {
    std::vector<std::size_t> out;
    out.reserve(live_);
    for (std::size_t v = 0; v < net_.size(); ++v)
      if (is_alive(v)) out.push_back(v);
    return out;
  }

  void remove(std::size_t v) {
    alive_[v / 64] &= ~(BinaryNetwork::Word{1} << (v % 64));
    --live_;
    net_.for_each_out_neighbor(v, [&](std::size_t j) {
      if (is_alive(j)) --in_[j];
    });
    for (std::size_t i = 0; i < net_.size(); ++i)
      if (is_alive(i) && net_.has_edge(i, v)) --out_[i];
  }

  double modified_aspl() const { return distance_profile(net_, alive_).modified_aspl(); }

 private:
  const BinaryNetwork& net_;
  std::vector<BinaryNetwork::Word> alive_;
  std::size_t live_;
  std::vector<std::size_t> out_, in_;
};

inline std::size_t pick_attack_target(const SurvivingGraph& g, Rng& rng) {
  std::vector<std::size_t> best;
  std::size_t best_degree = 0;
  for (std::size_t v : g.live_nodes()) {
    const std::size_t d = g.degree_sum(v);
    if (best.empty() || d > best_degree) {
      best.assign(1, v);
      best_degree = d;
    } else if (d == best_degree) {
      best.push_back(v);
    }
  }
  if (best.empty()) throw InvalidArgument("attack target requested on an empty graph");
  return best.size() == 1 ? best.front() : best[uniform_index(rng, best.size())];
}

}  // namespace detail

// Node with maximal in-degree + out-degree; ties broken uniformly at random.
inline std::size_t select_attack_target(const BinaryNetwork& net, Rng& rng) {
  if (net.size() == 0) throw InvalidArgument("select_attack_target: empty network");
  return detail::pick_attack_target(detail::SurvivingGraph(net), rng);
}

struct KnockoutTrace {
  Strategy strategy = Strategy::error;
  std::uint64_t seed = 0;
  std::vector<CountryCode> removal_order;
  std::vector<double> aspl_series;  // after 0, 1, ..., n-1 removals
};

// Removes nodes one at a time (uniformly at random for error, by maximal
// surviving degree-sum for attack) until one node remains, recording the
// modified ASPL of the surviving graph. A one-node graph scores 4.
inline KnockoutTrace run_knockout(const BinaryNetwork& net, Strategy strategy,
                                  std::uint64_t seed) {
  if (net.size() < 2) throw InvalidArgument("run_knockout: need at least 2 nodes");
  Rng rng(seed);
  KnockoutTrace trace;
  trace.strategy = strategy;
  trace.seed = seed;
  detail::SurvivingGraph g(net);
  trace.aspl_series.push_back(g.modified_aspl());
  while (g.live_count() > 1) {
    std::size_t victim = 0;
    if (strategy == Strategy::attack) {
      victim = detail::pick_attack_target(g, rng);
    } else {
      const auto live = g.live_nodes();
      victim = live[uniform_index(rng, live.size())];
    }
    g.remove(victim);
    trace.removal_order.push_back(net.countries()[victim]);
    trace.aspl_series.push_back(g.modified_aspl());
  }
  return trace;
}

inline constexpr std::size_t kCurveGridPoints = 101;

// Value of a trace at a fraction of nodes removed; step k of an n-entry
// series sits at fraction k / (n - 1).
inline double interpolate_trace(const std::vector<double>& series, double fraction) {
  if (series.size() == 1) return series.front();
  const double x = fraction * static_cast<double>(series.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(x));
  if (lo + 1 >= series.size()) return series.back();
  const double w = x - static_cast<double>(lo);
  return series[lo] + w * (series[lo + 1] - series[lo]);
}

struct CurveSummary {
  Strategy strategy = Strategy::error;
  std::size_t traces = 0;
  std::vector<double> fraction;  // 0, 0.01, ..., 1
  std::vector<double> mean;
  std::vector<double> std;  // population standard deviation
};

inline double grid_fraction(std::size_t k) {
  return static_cast<double>(k) / static_cast<double>(kCurveGridPoints - 1);
}

// `trials` traces per network; trace (network i, trial t) is seeded with
// derive_seed(master_seed, i, t).
inline CurveSummary ensemble_knockout(const std::vector<BinaryNetwork>& nets,
                                      Strategy strategy, int trials,
                                      std::uint64_t master_seed, unsigned jobs = 1) {
  if (trials < 1) throw InvalidArgument("ensemble_knockout: trials must be >= 1");
  const std::size_t per = static_cast<std::size_t>(trials);
  const std::size_t total = nets.size() * per;
  std::vector<std::vector<double>> curves(total);
  parallel_for(total, jobs, [&](std::size_t idx) {
    const std::size_t i = idx / per;
    const std::size_t t = idx % per;
    const auto trace = run_knockout(nets[i], strategy, derive_seed(master_seed, i, t));
    auto& c = curves[idx];
    c.resize(kCurveGridPoints);
    for (std::size_t k = 0; k < kCurveGridPoints; ++k)
      c[k] = interpolate_trace(trace.aspl_series, grid_fraction(k));
  });

  CurveSummary s;
  s.strategy = strategy;
  s.traces = total;
  s.fraction.resize(kCurveGridPoints);
  s.mean.assign(kCurveGridPoints, 0.0);
  s.std.assign(kCurveGridPoints, 0.0);
  for (std::size_t k = 0; k < kCurveGridPoints; ++k) {
    s.fraction[k] = grid_fraction(k);
    // Welford, merged in index order
    double mean = 0.0, m2 = 0.0;
    std::size_t count = 0;
    for (const auto& c : curves) {
      ++count;
      const double d = c[k] - mean;
      mean += d / static_cast<double>(count);
      m2 += d * (c[k] - mean);
    }
    s.mean[k] = mean;
    s.std[k] = count > 0 ? std::sqrt(std::max(m2, 0.0) / static_cast<double>(count)) : 0.0;
  }
  return s;
}

inline std::string curve_to_csv(const CurveSummary& s) {
  std::ostringstream out;
  out << "grid_point,mean,std\n";
  for (std::size_t k = 0; k < s.fraction.size(); ++k)
    out << detail::format_number(s.fraction[k]) << ',' << detail::format_number(s.mean[k])
        << ',' << detail::format_number(s.std[k]) << '\n';
  return out.str();
}

inline nlohmann::json to_json(const CurveSummary& s) {
  return {{"strategy", strategy_name(s.strategy)},
          {"traces", s.traces},
          {"grid_point", s.fraction},
          {"mean", s.mean},
          {"std", s.std}};
}

inline nlohmann::json to_json(const KnockoutTrace& t) {
  return {{"strategy", strategy_name(t.strategy)},
          {"seed", t.seed},
          {"removal_order", t.removal_order},
          {"aspl_series", t.aspl_series}};
}

// ---------------------------------------------------------------------------
// Confidence-interval comparison

enum class Position { below, within, above, undefined };

inline std::string_view position_name(Position p) {
  switch (p) {
    case Position::below: return "below";
    case Position::within: return "within";
    case Position::above: return "above";
    case Position::undefined: return "undefined";
  }
  return "?";
}

// Empirical quantile at probability p: position h = (N - 1) p on the sorted
// sample, midpoint of the two order statistics around h. Reorders `x`.
inline double midpoint_quantile(std::vector<double>& x, double p) {
  if (x.empty()) throw InvalidArgument("quantile of an empty sample");
  const double h = static_cast<double>(x.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(lo), x.end());
  const double a = x[lo];
  if (hi == lo) return a;
  const double b = *std::min_element(x.begin() + static_cast<std::ptrdiff_t>(lo) + 1, x.end());
  return 0.5 * (a + b);
}

struct CiEntry {
  Measure measure = Measure::modified_aspl;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> empirical;
  Position position = Position::undefined;
  std::size_t defined_samples = 0;
  std::size_t undefined_samples = 0;
};

struct CiReport {
  int year = 0;
  NullModelKind model = NullModelKind::er;
  char rule = 'A';
  double alpha = 0.05;
  std::size_t samples = 0;
  std::vector<CiEntry> entries;  // one per measure, kAllMeasures order

  const CiEntry& entry(Measure m) const { return entries[static_cast<std::size_t>(m)]; }
};

inline Position classify(double value, double lower, double upper) {
  if (value < lower) return Position::below;
  if (value > upper) return Position::above;
  return Position::within;
}

// Classifies each empirical statistic against the central (1 - alpha) interval
// of its distribution over precomputed null samples. Undefined null samples
// are skipped and counted.
inline CiReport ci_from_samples(const MeasureVector& empirical,
                                const std::vector<MeasureVector>& nulls, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
  CiReport r;
  r.alpha = alpha;
  r.samples = nulls.size();
  for (Measure m : kAllMeasures) {
    CiEntry e;
    e.measure = m;
    e.empirical = empirical[m];
    std::vector<double> values;
    values.reserve(nulls.size());
    for (const auto& mv : nulls)
      if (mv[m]) values.push_back(*mv[m]);
    e.defined_samples = values.size();
    e.undefined_samples = nulls.size() - values.size();
    if (!values.empty()) {
      e.lower = midpoint_quantile(values, alpha / 2.0);
      e.upper = midpoint_quantile(values, 1.0 - alpha / 2.0);
      if (e.empirical) e.position = classify(*e.empirical, e.lower, e.upper);
    }
    r.entries.push_back(e);
  }
  return r;
}

struct CiOptions {
  int samples = 10000;
  double alpha = 0.05;
  std::uint64_t seed = kDefaultSeed;
  unsigned jobs = 1;
  AssortativityVariant assortativity = AssortativityVariant::out_in;
};

// Null sample s is generated from derive_seed(seed, s).
inline std::vector<MeasureVector> sample_null_measures(const NullModelSpec& spec,
                                                       const CiOptions& opt) {
  std::vector<MeasureVector> out(static_cast<std::size_t>(opt.samples));
  parallel_for(out.size(), opt.jobs, [&](std::size_t s) {
    Rng rng(derive_seed(opt.seed, s));
    out[s] = compute_measures(sample_null(spec, rng), opt.assortativity);
  });
  return out;
}

inline CiReport ci_compare(const MeasureVector& empirical, const NullModelSpec& spec,
                           const CiOptions& opt = {}) {
  if (opt.samples < 100) throw InvalidArgument("ci_compare: samples must be >= 100");
  auto report = ci_from_samples(empirical, sample_null_measures(spec, opt), opt.alpha);
  report.model = spec.kind;
  report.rule = spec.rule.letter();
  return report;
}

struct CiTableRow {
  Measure measure = Measure::modified_aspl;
  NullModelKind model = NullModelKind::er;
  char rule = 'A';
  std::size_t below = 0, within = 0, above = 0, undefined = 0;
  std::size_t years = 0;

  // (years above - years below) / years
  double score() const {
    return years == 0 ? 0.0
                      : (static_cast<double>(above) - static_cast<double>(below)) /
                            static_cast<double>(years);
  }
};

// Aggregates per-year reports into one row per (measure, model, rule).
inline std::vector<CiTableRow> ci_table(const std::vector<CiReport>& reports) {
  if (reports.empty()) throw InvalidArgument("ci_table: no reports");
  std::map<std::tuple<char, int, int>, CiTableRow> rows;
  for (const auto& r : reports) {
    for (const auto& e : r.entries) {
      auto key = std::tuple(r.rule, static_cast<int>(r.model), static_cast<int>(e.measure));
      auto& row = rows[key];
      row.measure = e.measure;
      row.model = r.model;
      row.rule = r.rule;
      ++row.years;
      switch (e.position) {
        case Position::below: ++row.below; break;
        case Position::within: ++row.within; break;
        case Position::above: ++row.above; break;
        case Position::undefined: ++row.undefined; break;
      }
    }
  }
  std::vector<CiTableRow> out;
  for (auto& [k, v] : rows) out.push_back(v);
  std::stable_sort(out.begin(), out.end(), [](const CiTableRow& a, const CiTableRow& b) {
    return std::tuple(static_cast<int>(a.measure), static_cast<int>(a.model), a.rule) <
           std::tuple(static_cast<int>(b.measure), static_cast<int>(b.model), b.rule);
  });
  return out;
}

inline std::string ci_table_to_csv(const std::vector<CiTableRow>& rows) {
  std::ostringstream out;
  out << "measure,model,rule,score,below,within,above,undefined\n";
  for (const auto& r : rows)
    out << measure_name(r.measure) << ',' << null_model_name(r.model) << ',' << r.rule << ','
        << detail::format_number(r.score()) << ',' << r.below << ',' << r.within << ','
        << r.above << ',' << r.undefined << '\n';
  return out.str();
}

inline nlohmann::json to_json(const CiReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"measure", measure_name(e.measure)},
                       {"lower", e.lower},
                       {"upper", e.upper},
                       {"empirical", e.empirical ? nlohmann::json(*e.empirical) : nlohmann::json()},
                       {"position", position_name(e.position)},
                       {"defined_samples", e.defined_samples},
                       {"undefined_samples", e.undefined_samples}});
  }
  return {{"year", r.year},        {"model", null_model_name(r.model)},
          {"rule", std::string(1, r.rule)}, {"alpha", r.alpha},
          {"samples", r.samples},  {"entries", entries}};
}

inline nlohmann::json to_json(const std::vector<CiTableRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows)
    out.push_back({{"measure", measure_name(r.measure)},
                   {"model", null_model_name(r.model)},
                   {"rule", std::string(1, r.rule)},
                   {"score", r.score()},
                   {"below", r.below},
                   {"within", r.within},
                   {"above", r.above},
                   {"undefined", r.undefined},
                   {"years", r.years}});
  return out;
}

}  // namespace cpisnet
