#pragma once

// Binary directed networks derived from an AssetSlice by thresholding.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cpisnet/error.hpp"
#include "cpisnet/ingest.hpp"

namespace cpisnet {

// Edge rule used to derive a network from asset holdings.
struct ThresholdRule {
  enum class Kind { above_average_exposure, gdp_normalized };

  Kind kind = Kind::above_average_exposure;
  double t = 0.0;  // fraction of holder GDP; gdp_normalized only

  static ThresholdRule rule_a() { return {Kind::above_average_exposure, 0.0}; }
  static ThresholdRule rule_b(double t) {
    if (!(t > 0.0)) throw InvalidArgument("rule B threshold must be positive");
    return {Kind::gdp_normalized, t};
  }

  char letter() const { return kind == Kind::above_average_exposure ? 'A' : 'B'; }

  friend bool operator==(const ThresholdRule&, const ThresholdRule&) = default;
};

inline constexpr double kDefaultGdpThreshold = 0.0417;

// Directed simple graph stored as one bitset row per node (bit j of row i set
// iff edge i -> j). No self-loops.
class BinaryNetwork {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BinaryNetwork() = default;

  explicit BinaryNetwork(std::vector<CountryCode> countries,
                         std::optional<ThresholdRule> rule = std::nullopt,
                         int source_year = 0)
      : countries_(std::move(countries)),
        words_((countries_.size() + kWordBits - 1) / kWordBits),
        bits_(countries_.size() * words_, 0),
        rule_(rule),
        source_year_(source_year) {}

  // Unlabelled network on n nodes; labels are zero-padded indices so that
  // lexicographic and index order agree.
  static BinaryNetwork with_size(std::size_t n) {
    std::vector<CountryCode> labels(n);
    const std::size_t width = std::to_string(n == 0 ? 0 : n - 1).size();
    for (std::size_t i = 0; i < n; ++i) {
      std::string s = std::to_string(i);
      labels[i] = std::string(width - s.size(), '0') + s;
    }
    return BinaryNetwork(std::move(labels));
  }

  std::size_t size() const { return countries_.size(); }
  std::size_t words_per_row() const { return words_; }
  const std::vector<CountryCode>& countries() const { return countries_; }
  const std::optional<ThresholdRule>& rule() const { return rule_; }
  int source_year() const { return source_year_; }

  bool has_edge(std::size_t i, std::size_t j) const {
    return (bits_[i * words_ + j / kWordBits] >> (j % kWordBits)) & 1U;
  }
  void add_edge(std::size_t i, std::size_t j) {
    if (i == j) throw InvalidArgument("self-loops are not allowed");
    bits_[i * words_ + j / kWordBits] |= Word{1} << (j % kWordBits);
  }
  void remove_edge(std::size_t i, std::size_t j) {
    bits_[i * words_ + j / kWordBits] &= ~(Word{1} << (j % kWordBits));
  }

  std::span<const Word> row(std::size_t i) const {
    return {bits_.data() + i * words_, words_};
  }

  std::size_t out_degree(std::size_t i) const {
    std::size_t d = 0;
    for (Word w : row(i)) d += static_cast<std::size_t>(std::popcount(w));
    return d;
  }
  std::size_t in_degree(std::size_t j) const {
    std::size_t d = 0;
    for (std::size_t i = 0; i < size(); ++i) d += has_edge(i, j);
    return d;
  }
  std::vector<std::size_t> out_degrees() const {
    std::vector<std::size_t> d(size());
    for (std::size_t i = 0; i < size(); ++i) d[i] = out_degree(i);
    return d;
  }
  std::vector<std::size_t> in_degrees() const {
    std::vector<std::size_t> d(size(), 0);
    for (std::size_t i = 0; i < size(); ++i)
      for_each_out_neighbor(i, [&](std::size_t j) { ++d[j]; });
    return d;
  }
  std::size_t edge_count() const {
    std::size_t m = 0;
    for (Word w : bits_) m += static_cast<std::size_t>(std::popcount(w));
    return m;
  }

  template <typename Fn>
  void for_each_out_neighbor(std::size_t i, Fn&& fn) const {
    const auto r = row(i);
    for (std::size_t w = 0; w < words_; ++w) {
      Word bits = r[w];
      while (bits) {
        const int b = std::countr_zero(bits);
        fn(w * kWordBits + static_cast<std::size_t>(b));
        bits &= bits - 1;
      }
    }
  }

  // Edges in (source, target) index order.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(edge_count());
    for (std::size_t i = 0; i < size(); ++i)
      for_each_out_neighbor(i, [&](std::size_t j) { out.emplace_back(i, j); });
    return out;
  }

  BinaryNetwork transposed() const {
    BinaryNetwork t(countries_, rule_, source_year_);
    for (const auto& [i, j] : edges()) t.add_edge(j, i);
    return t;
  }

  // Network with node i moved to position perm[i]; labels move along.
  BinaryNetwork permuted(std::span<const std::size_t> perm) const {
    std::vector<CountryCode> labels(size());
    for (std::size_t i = 0; i < size(); ++i) labels[perm[i]] = countries_[i];
    BinaryNetwork p(std::move(labels), rule_, source_year_);
    for (const auto& [i, j] : edges()) p.add_edge(perm[i], perm[j]);
    return p;
  }

  // Same topology with different provenance (used by null-model generators).
  BinaryNetwork empty_like() const {
    return BinaryNetwork(countries_, rule_, source_year_);
  }

  friend bool operator==(const BinaryNetwork& a, const BinaryNetwork& b) {
    return a.countries_ == b.countries_ && a.bits_ == b.bits_;
  }

 private:
  std::vector<CountryCode> countries_;
  std::size_t words_ = 0;
  std::vector<Word> bits_;
  std::optional<ThresholdRule> rule_;
  int source_year_ = 0;
};

// Mean of row i over the n-1 off-diagonal entries.
inline double row_average_exposure(const AssetSlice& slice, std::size_t i) {
  return slice.holdings().row_sum(i) / static_cast<double>(slice.size() - 1);
}

// Edge i -> j iff s_ij strictly exceeds i's average exposure.
inline BinaryNetwork threshold_a(const AssetSlice& slice) {
  const std::size_t n = slice.size();
  BinaryNetwork net(slice.countries(), ThresholdRule::rule_a(), slice.year());
  for (std::size_t i = 0; i < n; ++i) {
    // s_ij > sum/(n-1), compared without forming the quotient
    const double total = slice.holdings().row_sum(i);
    const double scale = static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && slice.holding(i, j) * scale > total) net.add_edge(i, j);
  }
  return net;
}

// Edge i -> j iff s_ij / gdp_i strictly exceeds t.
inline BinaryNetwork threshold_b(const AssetSlice& slice,
                                 double t = kDefaultGdpThreshold) {
  const auto rule = ThresholdRule::rule_b(t);
  const std::size_t n = slice.size();
  BinaryNetwork net(slice.countries(), rule, slice.year());
  for (std::size_t i = 0; i < n; ++i) {
    const double g = slice.gdp()[i];
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && slice.holding(i, j) / g > t) net.add_edge(i, j);
  }
  return net;
}

inline BinaryNetwork apply_rule(const AssetSlice& slice, const ThresholdRule& rule) {
  return rule.kind == ThresholdRule::Kind::above_average_exposure
             ? threshold_a(slice)
             : threshold_b(slice, rule.t);
}

enum class ExposureAverage { all_pairs, positive_only };

// Mean GDP-normalized exposure s_ij / gdp_i over ordered pairs i != j.
inline double average_gdp_exposure(const AssetSlice& slice,
                                   ExposureAverage mode = ExposureAverage::all_pairs) {
  const std::size_t n = slice.size();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double s = slice.holding(i, j);
      if (mode == ExposureAverage::positive_only && !(s > 0.0)) continue;
      sum += s / slice.gdp()[i];
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

// Exposure class relative to the holder's average exposure:
// 1: below 2x, 2: [2x,4x), 3: [4x,8x), 4: [8x,16x), 5: 16x and above.
inline int weight_class(double exposure, double row_average) {
  int k = 1;
  for (double factor : {2.0, 4.0, 8.0, 16.0})
    if (exposure >= factor * row_average) ++k;
  return k;
}

enum class GraphFormat { edge_list, dot };

// Deterministic edge export annotated with weight classes. Edges appear in
// lexicographic (holder, issuer) order.
inline std::string export_graph(const BinaryNetwork& net, const AssetSlice& slice,
                                GraphFormat format) {
  if (net.countries() != slice.countries())
    throw InvalidArgument("network and slice country lists differ");
  std::ostringstream out;
  if (format == GraphFormat::edge_list) {
    out << "holder,issuer,weight_class\n";
  } else {
    out << "digraph cpis {\n";
  }
  const auto& c = net.countries();
  for (const auto& [i, j] : net.edges()) {
    const int k = weight_class(slice.holding(i, j), row_average_exposure(slice, i));
    if (format == GraphFormat::edge_list) {
      out << c[i] << ',' << c[j] << ',' << k << '\n';
    } else {
      out << "  \"" << c[i] << "\" -> \"" << c[j] << "\" [class=" << k << "];\n";
    }
  }
  if (format == GraphFormat::dot) out << "}\n";
  return out.str();
}

}  // namespace cpisnet
