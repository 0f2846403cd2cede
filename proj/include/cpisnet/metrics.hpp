#pragma once

// Graph statistics on a BinaryNetwork: capped shortest-path measures,
// assortativity, directed clustering and edge transitivity.

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cpisnet/error.hpp"
#include "cpisnet/netbuild.hpp"

namespace cpisnet {

// All-pairs directed hop distances. Diagonal entries are 0 and unreachable
// pairs hold kUnreachable.
class SplMatrix {
 public:
  static constexpr int kUnreachable = -1;
  static constexpr int kCap = 4;

  explicit SplMatrix(std::size_t n) : n_(n), dist_(n * n, kUnreachable) {}

  std::size_t size() const { return n_; }
  int operator()(std::size_t i, std::size_t j) const { return dist_[i * n_ + j]; }
  int& at(std::size_t i, std::size_t j) { return dist_[i * n_ + j]; }
  bool reachable(std::size_t i, std::size_t j) const {
    return (*this)(i, j) != kUnreachable;
  }
  // Lengths above 3 and unreachable pairs both map to 4.
  int capped(std::size_t i, std::size_t j) const {
    const int d = (*this)(i, j);
    return (d == kUnreachable || d > 3) ? kCap : d;
  }

 private:
  std::size_t n_;
  std::vector<int> dist_;
};

inline SplMatrix shortest_paths(const BinaryNetwork& net) {
  const std::size_t n = net.size();
  SplMatrix spl(n);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    spl.at(s, s) = 0;
    queue.assign(1, s);
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      net.for_each_out_neighbor(u, [&](std::size_t v) {
        if (spl(s, v) == SplMatrix::kUnreachable) {
          spl.at(s, v) = spl(s, u) + 1;
          queue.push_back(v);
        }
      });
    }
  }
  return spl;
}

// Number of ordered pairs at distance exactly 1, 2 and 3 among `nodes`
// surviving nodes; all other pairs are farther or unreachable.
struct DistanceProfile {
  std::size_t nodes = 0;
  std::array<std::uint64_t, 4> at_distance{};  // index 1..3 used

  std::uint64_t pairs() const {
    return static_cast<std::uint64_t>(nodes) * (nodes == 0 ? 0 : nodes - 1);
  }
  std::uint64_t within(int k) const {
    std::uint64_t c = 0;
    for (int d = 1; d <= k && d <= 3; ++d) c += at_distance[d];
    return c;
  }
  // Mean capped distance; defined as 4 when there are no ordered pairs.
  double modified_aspl() const {
    if (pairs() == 0) return 4.0;
    const std::uint64_t total = 4 * pairs() - 3 * at_distance[1] -
                                2 * at_distance[2] - at_distance[3];
    return static_cast<double>(total) / static_cast<double>(pairs());
  }
  double fraction_within(int k) const {
    if (pairs() == 0) return 0.0;
    return static_cast<double>(within(k)) / static_cast<double>(pairs());
  }
};

namespace detail {

using Word = BinaryNetwork::Word;

// Bitset BFS truncated at depth 3, restricted to nodes whose bit is set in
// `alive` (one word per 64 nodes).
inline DistanceProfile distance_profile(const BinaryNetwork& net,
                                        std::span<const Word> alive) {
  const std::size_t n = net.size();
  const std::size_t words = net.words_per_row();
  DistanceProfile prof;
  std::vector<Word> seen(words), frontier(words), next(words);
  for (std::size_t w = 0; w < words; ++w)
    prof.nodes += static_cast<std::size_t>(std::popcount(alive[w]));

  for (std::size_t s = 0; s < n; ++s) {
    if (!((alive[s / 64] >> (s % 64)) & 1U)) continue;
    std::fill(seen.begin(), seen.end(), 0);
    seen[s / 64] |= Word{1} << (s % 64);
    const auto r = net.row(s);
    for (std::size_t w = 0; w < words; ++w) {
      frontier[w] = r[w] & alive[w] & ~seen[w];
      seen[w] |= frontier[w];
    }
    for (int depth = 1; depth <= 3; ++depth) {
      std::uint64_t count = 0;
      for (std::size_t w = 0; w < words; ++w)
        count += static_cast<std::uint64_t>(std::popcount(frontier[w]));
      prof.at_distance[depth] += count;
      if (depth == 3 || count == 0) break;
      std::fill(next.begin(), next.end(), 0);
      for (std::size_t w = 0; w < words; ++w) {
        Word bits = frontier[w];
        while (bits) {
          const std::size_t u = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
          bits &= bits - 1;
          const auto ru = net.row(u);
          for (std::size_t x = 0; x < words; ++x) next[x] |= ru[x];
        }
      }
      for (std::size_t w = 0; w < words; ++w) {
        frontier[w] = next[w] & alive[w] & ~seen[w];
        seen[w] |= frontier[w];
      }
    }
  }
  return prof;
}

inline std::vector<Word> all_alive(std::size_t n) {
  std::vector<Word> alive((n + 63) / 64, 0);
  for (std::size_t i = 0; i < n; ++i) alive[i / 64] |= Word{1} << (i % 64);
  return alive;
}

inline void require_nodes(const BinaryNetwork& net, std::size_t minimum,
                          std::string_view what) {
  if (net.size() < minimum)
    throw InvalidArgument(std::string(what) + " needs at least " +
                          std::to_string(minimum) + " nodes");
}

}  // namespace detail

inline DistanceProfile distance_profile(const BinaryNetwork& net) {
  const auto alive = detail::all_alive(net.size());
  return detail::distance_profile(net, alive);
}

// Mean over ordered pairs of the hop distance, with lengths above 3 and
// unreachable pairs counted as 4.
inline double modified_aspl(const BinaryNetwork& net) {
  detail::require_nodes(net, 2, "modified_aspl");
  return distance_profile(net).modified_aspl();
}

// Fraction of ordered pairs joined by a path of length <= k, k in {2, 3}.
inline double fraction_spl_le(const BinaryNetwork& net, int k) {
  if (k != 2 && k != 3) throw InvalidArgument("fraction_spl_le: k must be 2 or 3");
  detail::require_nodes(net, 2, "fraction_spl_le");
  return distance_profile(net).fraction_within(k);
}

enum class AssortativityVariant { out_in, in_out, out_out, in_in, total_total };

// Degree assortativity over directed edges (Newman's edge-symmetrised
// correlation, as in the Brain Connectivity Toolbox's assortativity_bin).
// nullopt when the degree variance over edge endpoints is zero.
inline std::optional<double> assortativity(
    const BinaryNetwork& net,
    AssortativityVariant variant = AssortativityVariant::out_in) {
  const auto out = net.out_degrees();
  const auto in = net.in_degrees();
  auto pick = [&](std::size_t v, bool source) -> std::int64_t {
    switch (variant) {
      case AssortativityVariant::out_in: return static_cast<std::int64_t>(source ? out[v] : in[v]);
      case AssortativityVariant::in_out: return static_cast<std::int64_t>(source ? in[v] : out[v]);
      case AssortativityVariant::out_out: return static_cast<std::int64_t>(out[v]);
      case AssortativityVariant::in_in: return static_cast<std::int64_t>(in[v]);
      case AssortativityVariant::total_total: return static_cast<std::int64_t>(out[v] + in[v]);
    }
    return 0;
  };
  std::int64_t m = 0, sum_prod = 0, sum_pair = 0, sum_sq = 0;
  for (const auto& [i, j] : net.edges()) {
    const std::int64_t a = pick(i, true);
    const std::int64_t b = pick(j, false);
    ++m;
    sum_prod += a * b;
    sum_pair += a + b;
    sum_sq += a * a + b * b;
  }
  if (m == 0) return std::nullopt;
  // Both terms scaled by 4 m^2 so that they stay exact integers.
  const std::int64_t num = 4 * m * sum_prod - sum_pair * sum_pair;
  const std::int64_t den = 2 * m * sum_sq - sum_pair * sum_pair;
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

// Per-node binary directed clustering (Fagiolo): directed triangles over all
// edge-direction patterns divided by d_tot (d_tot - 1) - 2 d_bidir. Nodes in no
// triangle get 0.
inline std::vector<double> clustering_coefficients(const BinaryNetwork& net) {
  const std::size_t n = net.size();
  std::vector<int> sym(n * n, 0);
  for (const auto& [i, j] : net.edges()) {
    ++sym[i * n + j];
    ++sym[j * n + i];
  }
  std::vector<double> c(n, 0.0);
  std::vector<std::size_t> nbrs;
  for (std::size_t i = 0; i < n; ++i) {
    nbrs.clear();
    long total_degree = 0;
    long bidirectional = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const int s = sym[i * n + j];
      if (s == 0) continue;
      nbrs.push_back(j);
      total_degree += s;
      if (s == 2) ++bidirectional;
    }
    // (S^3)_ii / 2 restricted to neighbour pairs
    long closed = 0;
    for (std::size_t a : nbrs)
      for (std::size_t b : nbrs)
        closed += static_cast<long>(sym[i * n + a]) * sym[a * n + b] * sym[b * n + i];
    if (closed == 0) continue;
    const double triangles = static_cast<double>(closed) / 2.0;
    const double possible = static_cast<double>(total_degree * (total_degree - 1) -
                                                2 * bidirectional);
    c[i] = triangles / possible;
  }
  return c;
}

inline double avg_clustering(const BinaryNetwork& net) {
  detail::require_nodes(net, 3, "avg_clustering");
  const auto c = clustering_coefficients(net);
  double s = 0.0;
  for (double v : c) s += v;
  return s / static_cast<double>(c.size());
}

// Pr(i -> k | i -> j and j -> k) over ordered distinct triples. nullopt when
// the graph has no two-step triple.
inline std::optional<double> edge_transitivity(const BinaryNetwork& net) {
  std::uint64_t closed = 0;
  std::uint64_t open = 0;
  const std::size_t words = net.words_per_row();
  for (const auto& [i, j] : net.edges()) {
    const auto ri = net.row(i);
    const auto rj = net.row(j);
    for (std::size_t w = 0; w < words; ++w) {
      open += static_cast<std::uint64_t>(std::popcount(rj[w]));
      closed += static_cast<std::uint64_t>(std::popcount(rj[w] & ri[w]));
    }
    if (net.has_edge(j, i)) --open;  // k == i
  }
  if (open == 0) return std::nullopt;
  return static_cast<double>(closed) / static_cast<double>(open);
}

enum class Measure {
  frac_spl_le2,
  frac_spl_le3,
  modified_aspl,
  assortativity,
  avg_clustering,
  edge_transitivity,
};

inline constexpr std::size_t kMeasureCount = 6;
inline constexpr std::array<Measure, kMeasureCount> kAllMeasures = {
    Measure::frac_spl_le2,   Measure::frac_spl_le3,   Measure::modified_aspl,
    Measure::assortativity,  Measure::avg_clustering, Measure::edge_transitivity};

inline std::string_view measure_name(Measure m) {
  switch (m) {
    case Measure::frac_spl_le2: return "frac_spl_le2";
    case Measure::frac_spl_le3: return "frac_spl_le3";
    case Measure::modified_aspl: return "modified_aspl";
    case Measure::assortativity: return "assortativity";
    case Measure::avg_clustering: return "avg_clustering";
    case Measure::edge_transitivity: return "edge_transitivity";
  }
  return "?";
}

// The six network statistics compared against null models. A missing value
// means the statistic is undefined on that network.
struct MeasureVector {
  std::array<std::optional<double>, kMeasureCount> values{};

  std::optional<double>& operator[](Measure m) {
    return values[static_cast<std::size_t>(m)];
  }
  const std::optional<double>& operator[](Measure m) const {
    return values[static_cast<std::size_t>(m)];
  }
};

inline MeasureVector compute_measures(
    const BinaryNetwork& net,
    AssortativityVariant variant = AssortativityVariant::out_in) {
  detail::require_nodes(net, 2, "compute_measures");
  MeasureVector mv;
  const auto prof = distance_profile(net);
  mv[Measure::frac_spl_le2] = prof.fraction_within(2);
  mv[Measure::frac_spl_le3] = prof.fraction_within(3);
  mv[Measure::modified_aspl] = prof.modified_aspl();
  mv[Measure::assortativity] = assortativity(net, variant);
  if (net.size() >= 3) mv[Measure::avg_clustering] = avg_clustering(net);
  mv[Measure::edge_transitivity] = edge_transitivity(net);
  return mv;
}

}  // namespace cpisnet
