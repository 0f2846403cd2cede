#pragma once

// Loss-given-default cascades over the weighted asset network.
//
// A surviving country i defaults once its (haircut-scaled) holdings of
// already-defaulted issuers exceed both d1 times its total external portfolio
// and d2 times its GDP. Rounds are synchronous; the portfolio total is fixed at
// its initial value.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpisnet/error.hpp"
#include "cpisnet/ingest.hpp"
#include "cpisnet/parallel.hpp"

namespace cpisnet {

struct LgdSpec {
  double d1 = 0.1;       // fraction of total external portfolio, [0, 1]
  double d2 = 0.1;       // fraction of GDP, >= 0
  double haircut = 1.0;  // share of exposure lost, (0, 1]

  void validate() const {
    if (!(d1 >= 0.0 && d1 <= 1.0)) throw InvalidArgument("d1 must lie in [0,1]");
    if (!(d2 >= 0.0)) throw InvalidArgument("d2 must be nonnegative");
    if (!(haircut > 0.0 && haircut <= 1.0)) throw InvalidArgument("haircut must lie in (0,1]");
  }

  friend bool operator==(const LgdSpec&, const LgdSpec&) = default;
};

using Combination = std::vector<CountryCode>;

struct CascadeResult {
  Combination initial;
  std::vector<Combination> rounds;  // newly defaulted countries per round
  Combination defaulted;            // sorted, includes the initial set
  double impact = 0.0;              // |defaulted| / n
};

namespace detail {

// Precomputed per-country default thresholds for one spec. Losses are compared
// unscaled against thresholds divided by the haircut, so that haircut h with
// (d1, d2) and haircut 1 with (d1/h, d2/h) evaluate identical expressions.
struct CascadeKernel {
  const AssetSlice* slice = nullptr;
  std::vector<double> portfolio_threshold;
  std::vector<double> gdp_threshold;

  CascadeKernel(const AssetSlice& s, const LgdSpec& spec) : slice(&s) {
    spec.validate();
    const std::size_t n = s.size();
    const double e1 = spec.d1 / spec.haircut;
    const double e2 = spec.d2 / spec.haircut;
    portfolio_threshold.resize(n);
    gdp_threshold.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      portfolio_threshold[i] = e1 * s.holdings().row_sum(i);
      gdp_threshold[i] = e2 * s.gdp()[i];
    }
  }

  bool defaults(std::size_t i, double loss) const {
    return loss > portfolio_threshold[i] && loss > gdp_threshold[i];
  }

  // Runs the cascade from `initial` (indices, distinct). Returns the number of
  // defaulted countries; optionally records the rounds.
  std::size_t run(const std::vector<std::size_t>& initial,
                  std::vector<std::vector<std::size_t>>* rounds,
                  std::vector<char>& is_defaulted, std::vector<double>& loss) const {
    const std::size_t n = slice->size();
    const auto& s = slice->holdings();
    std::fill(is_defaulted.begin(), is_defaulted.end(), 0);
    std::fill(loss.begin(), loss.end(), 0.0);
    std::vector<std::size_t> fresh = initial;
    std::size_t count = 0;
    for (std::size_t j : fresh) {
      if (is_defaulted[j]) throw InvalidArgument("duplicate country in initial set");
      is_defaulted[j] = 1;
      ++count;
    }
    std::vector<std::size_t> next;
    while (!fresh.empty()) {
      for (std::size_t j : fresh)
        for (std::size_t i = 0; i < n; ++i) loss[i] += s(i, j);
      next.clear();
      for (std::size_t i = 0; i < n; ++i)
        if (!is_defaulted[i] && defaults(i, loss[i])) next.push_back(i);
      for (std::size_t i : next) is_defaulted[i] = 1;
      count += next.size();
      if (rounds != nullptr && !next.empty()) rounds->push_back(next);
      fresh.swap(next);
    }
    return count;
  }
};

inline std::vector<std::size_t> resolve(const AssetSlice& slice, const Combination& codes) {
  std::vector<std::size_t> idx;
  idx.reserve(codes.size());
  for (const auto& c : codes) {
    const auto i = slice.index_of(c);
    if (!i) throw InvalidArgument("unknown country code '" + c + "'");
    idx.push_back(*i);
  }
  return idx;
}

inline Combination names(const AssetSlice& slice, const std::vector<std::size_t>& idx) {
  Combination out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(slice.countries()[i]);
  return out;
}

// All k-subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k == 0 || k > n) return out;
  std::vector<std::size_t> c(k);
  for (std::size_t i = 0; i < k; ++i) c[i] = i;
  for (;;) {
    out.push_back(c);
    std::size_t pos = k;
    while (pos > 0 && c[pos - 1] == n - k + pos - 1) --pos;
    if (pos == 0) return out;
    ++c[pos - 1];
    for (std::size_t i = pos; i < k; ++i) c[i] = c[i - 1] + 1;
  }
}

}  // namespace detail

inline CascadeResult cascade(const AssetSlice& slice, const Combination& initial,
                             const LgdSpec& spec) {
  if (initial.empty()) throw InvalidArgument("cascade: initial set is empty");
  const detail::CascadeKernel kernel(slice, spec);
  auto idx = detail::resolve(slice, initial);
  std::sort(idx.begin(), idx.end());
  std::vector<std::vector<std::size_t>> rounds;
  std::vector<char> flags(slice.size());
  std::vector<double> loss(slice.size());
  const std::size_t count = kernel.run(idx, &rounds, flags, loss);

  CascadeResult r;
  r.initial = detail::names(slice, idx);
  for (const auto& round : rounds) r.rounds.push_back(detail::names(slice, round));
  for (std::size_t i = 0; i < slice.size(); ++i)
    if (flags[i]) r.defaulted.push_back(slice.countries()[i]);
  r.impact = static_cast<double>(count) / static_cast<double>(slice.size());
  return r;
}

struct ImpactByK {
  std::size_t k = 0;
  std::size_t scenarios = 0;
  double mean = 0.0;
  double worst5 = 0.0;  // mean of the ceil(0.05 m) largest impacts
  double worst = 0.0;
  std::vector<Combination> argmax;  // every combination reaching `worst`
  std::vector<double> sorted_impacts;  // descending severity
};

struct ImpactSummary {
  int year = 0;
  LgdSpec spec;
  std::vector<ImpactByK> by_k;  // k = 1..k_max
};

// Cascades from every initial set of size 1..k_max.
inline ImpactSummary enumerate_impacts(const AssetSlice& slice, const LgdSpec& spec,
                                       int k_max, unsigned jobs = 1) {
  if (k_max < 1 || k_max > 3) throw InvalidArgument("k_max must be 1, 2 or 3");
  const detail::CascadeKernel kernel(slice, spec);
  const std::size_t n = slice.size();
  ImpactSummary summary;
  summary.year = slice.year();
  summary.spec = spec;
  for (std::size_t k = 1; k <= static_cast<std::size_t>(k_max); ++k) {
    const auto combos = detail::combinations(n, k);
    std::vector<std::size_t> counts(combos.size());
    constexpr std::size_t kChunk = 256;
    const std::size_t chunks = (combos.size() + kChunk - 1) / kChunk;
    parallel_for(chunks, jobs, [&](std::size_t c) {
      std::vector<char> flags(n);
      std::vector<double> loss(n);
      const std::size_t end = std::min(combos.size(), (c + 1) * kChunk);
      for (std::size_t i = c * kChunk; i < end; ++i)
        counts[i] = kernel.run(combos[i], nullptr, flags, loss);
    });

    ImpactByK out;
    out.k = k;
    out.scenarios = combos.size();
    if (combos.empty()) {
      summary.by_k.push_back(out);
      continue;
    }
    const std::size_t best = *std::max_element(counts.begin(), counts.end());
    double total = 0.0;
    for (std::size_t i = 0; i < combos.size(); ++i) {
      total += static_cast<double>(counts[i]);
      if (counts[i] == best) out.argmax.push_back(detail::names(slice, combos[i]));
    }
    const double nn = static_cast<double>(n);
    out.mean = total / static_cast<double>(combos.size()) / nn;
    out.worst = static_cast<double>(best) / nn;
    auto sorted = counts;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto tail = static_cast<std::size_t>(
        std::ceil(0.05 * static_cast<double>(combos.size()) - 1e-9));
    double tail_sum = 0.0;
    for (std::size_t i = 0; i < tail; ++i) tail_sum += static_cast<double>(sorted[i]);
    out.worst5 = tail_sum / static_cast<double>(tail) / nn;
    out.sorted_impacts.reserve(sorted.size());
    for (std::size_t c : sorted) out.sorted_impacts.push_back(static_cast<double>(c) / nn);
    summary.by_k.push_back(std::move(out));
  }
  return summary;
}

inline const std::vector<double> kDefaultSweepGrid = {0.0, 0.1, 0.25, 0.5, 0.75};

// One summary per (d1, d2), d1-major, skipping d1 = d2 = 0.
inline std::vector<ImpactSummary> sweep_grid(const AssetSlice& slice,
                                             const std::vector<double>& d1_set,
                                             const std::vector<double>& d2_set, int k_max,
                                             double haircut = 1.0, unsigned jobs = 1) {
  if (d1_set.empty() || d2_set.empty()) throw InvalidArgument("sweep grids must be nonempty");
  std::vector<ImpactSummary> out;
  for (double d1 : d1_set)
    for (double d2 : d2_set) {
      if (d1 == 0.0 && d2 == 0.0) continue;
      out.push_back(enumerate_impacts(slice, LgdSpec{d1, d2, haircut}, k_max, jobs));
    }
  return out;
}

// Evenly spaced threshold axis: value(i) = i * step for i in [0, count).
struct GridAxis {
  double step = 0.0;
  std::size_t count = 0;

  double value(std::size_t i) const { return static_cast<double>(i) * step; }
};

inline constexpr GridAxis kPigsD1Axis{0.004, 51};  // 0 .. 0.2
inline constexpr GridAxis kPigsD2Axis{0.01, 51};   // 0 .. 0.5

struct PigsCell {
  double d1 = 0.0;
  double d2 = 0.0;
  double impact = 0.0;
  std::size_t rounds = 0;
};

struct PigsSubsetGrid {
  Combination subset;
  std::vector<PigsCell> cells;  // d1-major, count_d1 * count_d2 entries
};

// Every nonempty subset of `group` with at most three members, in order of
// size and then lexicographically.
inline std::vector<Combination> small_subsets(Combination group) {
  std::sort(group.begin(), group.end());
  group.erase(std::unique(group.begin(), group.end()), group.end());
  std::vector<Combination> out;
  for (std::size_t k = 1; k <= std::min<std::size_t>(3, group.size()); ++k)
    for (const auto& c : detail::combinations(group.size(), k)) {
      Combination s;
      for (std::size_t i : c) s.push_back(group[i]);
      out.push_back(std::move(s));
    }
  return out;
}

inline std::vector<PigsSubsetGrid> pigs_grid(const AssetSlice& slice, const Combination& group,
                                             GridAxis d1_axis = kPigsD1Axis,
                                             GridAxis d2_axis = kPigsD2Axis,
                                             double haircut = 1.0, unsigned jobs = 1) {
  if (group.empty()) throw InvalidArgument("pigs_grid: group is empty");
  detail::resolve(slice, group);
  const auto subsets = small_subsets(group);
  std::vector<PigsSubsetGrid> out(subsets.size());
  parallel_for(subsets.size(), jobs, [&](std::size_t s) {
    auto idx = detail::resolve(slice, subsets[s]);
    std::vector<char> flags(slice.size());
    std::vector<double> loss(slice.size());
    std::vector<std::vector<std::size_t>> rounds;
    out[s].subset = subsets[s];
    out[s].cells.reserve(d1_axis.count * d2_axis.count);
    for (std::size_t a = 0; a < d1_axis.count; ++a)
      for (std::size_t b = 0; b < d2_axis.count; ++b) {
        const LgdSpec spec{d1_axis.value(a), d2_axis.value(b), haircut};
        const detail::CascadeKernel kernel(slice, spec);
        rounds.clear();
        const std::size_t count = kernel.run(idx, &rounds, flags, loss);
        out[s].cells.push_back({spec.d1, spec.d2,
                                static_cast<double>(count) / static_cast<double>(slice.size()),
                                rounds.size()});
      }
  });
  return out;
}

struct RankingEntry {
  Combination combination;
  std::size_t count = 0;
};

// Per k, how many (year, spec) cells each combination attains the maximal
// impact in (ties all counted). Sorted by count descending, then
// lexicographically; truncated to top_n when top_n > 0.
inline std::map<std::size_t, std::vector<RankingEntry>> influence_ranking(
    const std::vector<ImpactSummary>& summaries, std::size_t top_n = 10) {
  if (summaries.empty()) throw InvalidArgument("influence_ranking: no summaries");
  std::map<std::size_t, std::map<Combination, std::size_t>> counts;
  for (const auto& s : summaries)
    for (const auto& byk : s.by_k)
      for (const auto& combo : byk.argmax) ++counts[byk.k][combo];
  std::map<std::size_t, std::vector<RankingEntry>> out;
  for (auto& [k, per] : counts) {
    auto& list = out[k];
    for (auto& [combo, c] : per) list.push_back({combo, c});
    std::stable_sort(list.begin(), list.end(), [](const RankingEntry& a, const RankingEntry& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.combination < b.combination;
    });
    if (top_n > 0 && list.size() > top_n) list.resize(top_n);
  }
  return out;
}

inline std::string join_combination(const Combination& c, char sep = '+') {
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) s += sep;
    s += c[i];
  }
  return s;
}

inline nlohmann::json to_json(const CascadeResult& r) {
  return {{"initial", r.initial},
          {"rounds", r.rounds},
          {"defaulted", r.defaulted},
          {"impact", r.impact}};
}

inline std::string sweep_to_csv(const std::vector<ImpactSummary>& summaries,
                                bool header = true) {
  std::ostringstream out;
  if (header) out << "year,d1,d2,k,mean,worst5,worst,argmax_combos\n";
  for (const auto& s : summaries)
    for (const auto& b : s.by_k) {
      std::string argmax;
      for (std::size_t i = 0; i < b.argmax.size(); ++i) {
        if (i) argmax += ';';
        argmax += join_combination(b.argmax[i]);
      }
      out << s.year << ',' << detail::format_number(s.spec.d1) << ','
          << detail::format_number(s.spec.d2) << ',' << b.k << ','
          << detail::format_number(b.mean) << ',' << detail::format_number(b.worst5) << ','
          << detail::format_number(b.worst) << ',' << argmax << '\n';
    }
  return out.str();
}

// Severity-sorted impact columns: one row per (year, d1, d2, k, rank).
inline std::string severity_columns_to_csv(const std::vector<ImpactSummary>& summaries,
                                           bool header = true) {
  std::ostringstream out;
  if (header) out << "year,d1,d2,k,rank,impact\n";
  for (const auto& s : summaries)
    for (const auto& b : s.by_k)
      for (std::size_t r = 0; r < b.sorted_impacts.size(); ++r)
        out << s.year << ',' << detail::format_number(s.spec.d1) << ','
            << detail::format_number(s.spec.d2) << ',' << b.k << ',' << r << ','
            << detail::format_number(b.sorted_impacts[r]) << '\n';
  return out.str();
}

inline std::string pigs_to_csv(const std::vector<PigsSubsetGrid>& grids, bool header = true) {
  std::ostringstream out;
  if (header) out << "subset,d1,d2,impact,rounds\n";
  for (const auto& g : grids)
    for (const auto& c : g.cells)
      out << join_combination(g.subset) << ',' << detail::format_number(c.d1) << ','
          << detail::format_number(c.d2) << ',' << detail::format_number(c.impact) << ','
          << c.rounds << '\n';
  return out.str();
}

inline std::string ranking_to_csv(const std::map<std::size_t, std::vector<RankingEntry>>& r,
                                  bool header = true) {
  std::ostringstream out;
  if (header) out << "k,rank,combination,instances\n";
  for (const auto& [k, list] : r)
    for (std::size_t i = 0; i < list.size(); ++i)
      out << k << ',' << i + 1 << ',' << join_combination(list[i].combination) << ','
          << list[i].count << '\n';
  return out.str();
}

}  // namespace cpisnet
