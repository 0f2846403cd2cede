#pragma once

// Bilateral asset / GDP panels and per-year core slices.
//
// Units are millions of current USD throughout. GDP tables given in raw USD
// must be converted by the caller before ingestion.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "cpisnet/error.hpp"

namespace cpisnet {

using CountryCode = std::string;

// Dense row-major n x n matrix of doubles.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0)
      : n_(n), data_(n * n, fill) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * n_ + j];
  }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * n_, n_};
  }
  double sum() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
  }
  double row_sum(std::size_t i) const {
    double s = 0.0;
    for (double v : row(i)) s += v;
    return s;
  }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct AssetRecord {
  int year = 0;
  CountryCode holder;
  CountryCode issuer;
  double value_musd = 0.0;

  friend bool operator==(const AssetRecord&, const AssetRecord&) = default;
};

struct GdpRecord {
  int year = 0;
  CountryCode country;
  double gdp_musd = 0.0;

  friend bool operator==(const GdpRecord&, const GdpRecord&) = default;
};

// Set of bilateral holdings, sorted by (year, holder, issuer).
class AssetPanel {
 public:
  AssetPanel() = default;

  // Throws DataError on self-loops, negative values or duplicate keys.
  explicit AssetPanel(std::vector<AssetRecord> records)
      : records_(std::move(records)) {
    for (const auto& r : records_) {
      if (r.holder == r.issuer)
        throw DataError("self-loop record for " + r.holder + " in " +
                        std::to_string(r.year));
      if (!(r.value_musd >= 0.0) || !std::isfinite(r.value_musd))
        throw DataError("negative or non-finite value for " + r.holder + "->" +
                        r.issuer);
    }
    std::sort(records_.begin(), records_.end(), key_less);
    for (std::size_t i = 1; i < records_.size(); ++i) {
      if (!key_less(records_[i - 1], records_[i]))
        throw DataError("duplicate record (" + std::to_string(records_[i].year) +
                        "," + records_[i].holder + "," + records_[i].issuer +
                        ")");
    }
  }

  const std::vector<AssetRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  std::set<int> years() const {
    std::set<int> out;
    for (const auto& r : records_) out.insert(r.year);
    return out;
  }

  friend bool operator==(const AssetPanel&, const AssetPanel&) = default;

 private:
  static bool key_less(const AssetRecord& a, const AssetRecord& b) {
    return std::tie(a.year, a.holder, a.issuer) <
           std::tie(b.year, b.holder, b.issuer);
  }

  std::vector<AssetRecord> records_;
};

// Set of GDP observations, sorted by (year, country).
class GdpPanel {
 public:
  GdpPanel() = default;

  explicit GdpPanel(std::vector<GdpRecord> records)
      : records_(std::move(records)) {
    for (const auto& r : records_) {
      if (!(r.gdp_musd > 0.0) || !std::isfinite(r.gdp_musd))
        throw DataError("nonpositive GDP for " + r.country + " in " +
                        std::to_string(r.year));
    }
    std::sort(records_.begin(), records_.end(), key_less);
    for (std::size_t i = 1; i < records_.size(); ++i) {
      if (!key_less(records_[i - 1], records_[i]))
        throw DataError("duplicate GDP record (" +
                        std::to_string(records_[i].year) + "," +
                        records_[i].country + ")");
    }
  }

  const std::vector<GdpRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  std::optional<double> lookup(int year, const CountryCode& country) const {
    const auto it = std::lower_bound(
        records_.begin(), records_.end(), std::tie(year, country),
        [](const GdpRecord& r, const std::tuple<const int&, const CountryCode&>& k) {
          return std::tie(r.year, r.country) < k;
        });
    if (it != records_.end() && it->year == year && it->country == country)
      return it->gdp_musd;
    return std::nullopt;
  }

  std::set<int> years() const {
    std::set<int> out;
    for (const auto& r : records_) out.insert(r.year);
    return out;
  }

  friend bool operator==(const GdpPanel&, const GdpPanel&) = default;

 private:
  static bool key_less(const GdpRecord& a, const GdpRecord& b) {
    return std::tie(a.year, a.country) < std::tie(b.year, b.country);
  }

  std::vector<GdpRecord> records_;
};

// One year's self-contained core network: holdings among the listed countries
// (row = holder, column = issuer) together with their GDPs.
class AssetSlice {
 public:
  AssetSlice() = default;

  AssetSlice(int year, std::vector<CountryCode> countries, SquareMatrix holdings,
             std::vector<double> gdp, double coverage = 1.0)
      : year_(year),
        countries_(std::move(countries)),
        holdings_(std::move(holdings)),
        gdp_(std::move(gdp)),
        coverage_(coverage) {
    const std::size_t n = countries_.size();
    if (n < 2) throw InvalidArgument("slice needs at least 2 countries");
    if (holdings_.size() != n || gdp_.size() != n)
      throw InvalidArgument("slice dimensions disagree with country list");
    if (!std::is_sorted(countries_.begin(), countries_.end()) ||
        std::adjacent_find(countries_.begin(), countries_.end()) !=
            countries_.end())
      throw InvalidArgument("slice countries must be sorted and unique");
    for (std::size_t i = 0; i < n; ++i) {
      if (holdings_(i, i) != 0.0)
        throw InvalidArgument("slice diagonal must be zero");
      if (!(gdp_[i] > 0.0)) throw InvalidArgument("slice GDP must be positive");
      for (std::size_t j = 0; j < n; ++j)
        if (!(holdings_(i, j) >= 0.0))
          throw InvalidArgument("slice holdings must be nonnegative");
    }
    if (!(coverage_ >= 0.0 && coverage_ <= 1.0))
      throw InvalidArgument("coverage must lie in [0,1]");
  }

  int year() const { return year_; }
  std::size_t size() const { return countries_.size(); }
  const std::vector<CountryCode>& countries() const { return countries_; }
  const SquareMatrix& holdings() const { return holdings_; }
  double holding(std::size_t i, std::size_t j) const { return holdings_(i, j); }
  const std::vector<double>& gdp() const { return gdp_; }
  double coverage() const { return coverage_; }

  std::optional<std::size_t> index_of(std::string_view code) const {
    const auto it =
        std::lower_bound(countries_.begin(), countries_.end(), code);
    if (it == countries_.end() || *it != code) return std::nullopt;
    return static_cast<std::size_t>(it - countries_.begin());
  }

  friend bool operator==(const AssetSlice&, const AssetSlice&) = default;

 private:
  int year_ = 0;
  std::vector<CountryCode> countries_;
  SquareMatrix holdings_;
  std::vector<double> gdp_;
  double coverage_ = 1.0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline std::string line_error(std::size_t line_no, std::string_view what) {
  return "line " + std::to_string(line_no) + ": " + std::string(what);
}

inline int parse_year(std::string_view field, std::size_t line_no) {
  int year = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), year);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw DataError(line_error(line_no, "malformed year '" + std::string(field) + "'"));
  return year;
}

inline double parse_number(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v))
    throw DataError(
        line_error(line_no, "malformed number '" + std::string(field) + "'"));
  return v;
}

inline std::string_view parse_code(std::string_view field, std::size_t line_no) {
  if (field.empty()) throw DataError(line_error(line_no, "empty country code"));
  return field;
}

// Iterates data rows of a headed CSV. Blank lines and lines starting with '#'
// are skipped; a repeated header line (concatenated files) is skipped too.
template <typename RowFn>
void for_each_csv_row(std::istream& in, std::string_view expected_header,
                      std::size_t expected_fields, RowFn&& on_row) {
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    view = trim(view);
    if (view.empty() || view.front() == '#') continue;
    if (!saw_header) {
      if (view != expected_header)
        throw DataError(line_error(line_no, "unknown column header '" +
                                                std::string(view) +
                                                "', expected '" +
                                                std::string(expected_header) + "'"));
      saw_header = true;
      continue;
    }
    if (view == expected_header) continue;
    const auto fields = split_csv_line(view);
    if (fields.size() != expected_fields)
      throw DataError(line_error(line_no, "malformed row, expected " +
                                              std::to_string(expected_fields) +
                                              " fields"));
    on_row(fields, line_no);
  }
  if (!saw_header) throw DataError("missing header '" + std::string(expected_header) + "'");
}

inline std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline constexpr std::string_view kAssetHeader = "year,holder,issuer,value_musd";
inline constexpr std::string_view kGdpHeader = "year,country,gdp_musd";

// Parses `year,holder,issuer,value_musd`. Errors name the offending line.
inline AssetPanel parse_asset_table(std::istream& in) {
  std::vector<AssetRecord> records;
  std::map<std::tuple<int, std::string, std::string>, std::size_t> seen;
  detail::for_each_csv_row(
      in, kAssetHeader, 4,
      [&](const std::vector<std::string_view>& f, std::size_t line_no) {
        AssetRecord r;
        r.year = detail::parse_year(f[0], line_no);
        r.holder = std::string(detail::parse_code(f[1], line_no));
        r.issuer = std::string(detail::parse_code(f[2], line_no));
        r.value_musd = detail::parse_number(f[3], line_no);
        if (r.value_musd < 0.0)
          throw DataError(detail::line_error(line_no, "negative value"));
        if (r.holder == r.issuer)
          throw DataError(detail::line_error(line_no, "holder equals issuer"));
        const auto [it, inserted] =
            seen.emplace(std::tuple(r.year, r.holder, r.issuer), line_no);
        if (!inserted)
          throw DataError(detail::line_error(
              line_no, "duplicate key (" + std::to_string(r.year) + "," +
                           r.holder + "," + r.issuer + "), first seen on line " +
                           std::to_string(it->second)));
        records.push_back(std::move(r));
      });
  return AssetPanel(std::move(records));
}

inline AssetPanel parse_asset_table(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_asset_table(in);
}

inline GdpPanel parse_gdp_table(std::istream& in) {
  std::vector<GdpRecord> records;
  std::map<std::pair<int, std::string>, std::size_t> seen;
  detail::for_each_csv_row(
      in, kGdpHeader, 3,
      [&](const std::vector<std::string_view>& f, std::size_t line_no) {
        GdpRecord r;
        r.year = detail::parse_year(f[0], line_no);
        r.country = std::string(detail::parse_code(f[1], line_no));
        r.gdp_musd = detail::parse_number(f[2], line_no);
        if (!(r.gdp_musd > 0.0))
          throw DataError(detail::line_error(line_no, "nonpositive GDP"));
        const auto [it, inserted] =
            seen.emplace(std::pair(r.year, r.country), line_no);
        if (!inserted)
          throw DataError(detail::line_error(
              line_no, "duplicate key (" + std::to_string(r.year) + "," +
                           r.country + "), first seen on line " +
                           std::to_string(it->second)));
        records.push_back(std::move(r));
      });
  return GdpPanel(std::move(records));
}

inline GdpPanel parse_gdp_table(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_gdp_table(in);
}

inline void write_asset_table(const AssetPanel& panel, std::ostream& out) {
  out << kAssetHeader << '\n';
  for (const auto& r : panel.records())
    out << r.year << ',' << r.holder << ',' << r.issuer << ','
        << detail::format_number(r.value_musd) << '\n';
}

inline void write_gdp_table(const GdpPanel& panel, std::ostream& out) {
  out << kGdpHeader << '\n';
  for (const auto& r : panel.records())
    out << r.year << ',' << r.country << ',' << detail::format_number(r.gdp_musd)
        << '\n';
}

// Restricts `year` to holders that report in that year and have GDP data.
// Missing pairs are zero. Coverage is the retained share of those holders'
// total reported assets; it is reported, not enforced.
inline AssetSlice core_slice(const AssetPanel& assets, const GdpPanel& gdp,
                             int year) {
  const auto& recs = assets.records();
  const auto first = std::lower_bound(
      recs.begin(), recs.end(), year,
      [](const AssetRecord& r, int y) { return r.year < y; });
  const auto last = std::upper_bound(
      first, recs.end(), year,
      [](int y, const AssetRecord& r) { return y < r.year; });
  if (first == last)
    throw DataError("year " + std::to_string(year) + " absent from asset panel");
  if (!gdp.years().contains(year))
    throw DataError("year " + std::to_string(year) + " absent from GDP panel");

  std::vector<CountryCode> countries;
  std::vector<double> gdp_values;
  for (auto it = first; it != last; ++it) {
    // records are sorted by holder within the year
    if (!countries.empty() && countries.back() == it->holder) continue;
    if (const auto g = gdp.lookup(year, it->holder)) {
      countries.push_back(it->holder);
      gdp_values.push_back(*g);
    }
  }
  if (countries.size() < 2)
    throw DataError("year " + std::to_string(year) + " has fewer than 2 reporting countries with GDP data");

  const std::size_t n = countries.size();
  SquareMatrix s(n);
  double holders_total = 0.0;
  auto index_of = [&](const CountryCode& c) -> std::optional<std::size_t> {
    const auto pos = std::lower_bound(countries.begin(), countries.end(), c);
    if (pos == countries.end() || *pos != c) return std::nullopt;
    return static_cast<std::size_t>(pos - countries.begin());
  };
  for (auto it = first; it != last; ++it) {
    const auto i = index_of(it->holder);
    if (!i) continue;
    holders_total += it->value_musd;
    if (const auto j = index_of(it->issuer)) s(*i, *j) = it->value_musd;
  }
  const double inside = s.sum();
  const double coverage =
      holders_total > 0.0 ? std::clamp(inside / holders_total, 0.0, 1.0) : 1.0;
  return AssetSlice(year, std::move(countries), std::move(s),
                    std::move(gdp_values), coverage);
}

}  // namespace cpisnet
