#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <string>

#include "cpisnet/ingest.hpp"

using namespace cpisnet;

namespace {

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ParseAssets, HeaderOnlyIsEmpty) {
  const auto p = parse_asset_table("year,holder,issuer,value_musd\n");
  EXPECT_TRUE(p.empty());
}

TEST(ParseAssets, SingleRow) {
  const auto p = parse_asset_table("year,holder,issuer,value_musd\n2009,US,JP,100.5\n");
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.records()[0], (AssetRecord{2009, "US", "JP", 100.5}));
}

TEST(ParseAssets, DuplicateKeyNamesLine) {
  const auto msg = error_of([] {
    parse_asset_table("year,holder,issuer,value_musd\n2009,US,JP,1\n2009,US,JP,2\n");
  });
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("duplicate"), std::string::npos) << msg;
}

TEST(ParseAssets, Errors) {
  const std::string h = "year,holder,issuer,value_musd\n";
  EXPECT_NE(error_of([&] { parse_asset_table(h + "2009,US,JP\n"); }).find("line 2"), std::string::npos);
  EXPECT_NE(error_of([&] { parse_asset_table(h + "2009,US,JP,-1\n"); }).find("negative"), std::string::npos);
  EXPECT_NE(error_of([&] { parse_asset_table(h + "2009,US,US,1\n"); }).find("holder equals issuer"), std::string::npos);
  EXPECT_NE(error_of([&] { parse_asset_table(h + "20x9,US,JP,1\n"); }).find("malformed year"), std::string::npos);
  EXPECT_NE(error_of([&] { parse_asset_table(h + "2009,US,JP,1e\n"); }).find("malformed number"), std::string::npos);
  EXPECT_NE(error_of([] { parse_asset_table("year,holder,issuer,value\n"); }).find("unknown column header"), std::string::npos);
  EXPECT_NE(error_of([] { parse_asset_table(""); }).find("missing header"), std::string::npos);
}

TEST(ParseAssets, ToleratesCrlfBlankAndComments) {
  const auto p = parse_asset_table(
      "# exported\r\nyear,holder,issuer,value_musd\r\n\r\n2009,US,JP,3\r\n# note\n2009,JP,US,4\n");
  EXPECT_EQ(p.size(), 2u);
}

TEST(ParseGdp, Basics) {
  const auto g = parse_gdp_table("year,country,gdp_musd\n2007,GR,318000\n");
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.lookup(2007, "GR"), 318000.0);
  EXPECT_FALSE(g.lookup(2008, "GR"));
  EXPECT_NE(error_of([] { parse_gdp_table("year,country,gdp_musd\n2007,GR,0\n"); }).find("nonpositive"), std::string::npos);
}

TEST(ParseGdp, ConcatenatedFilesWithConflictingValues) {
  const std::string a = "year,country,gdp_musd\n2007,GR,318000\n";
  const std::string b = "year,country,gdp_musd\n2007,GR,320000\n";
  const auto msg = error_of([&] { parse_gdp_table(a + b); });
  EXPECT_NE(msg.find("duplicate"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
}

TEST(CoreSlice, RestrictsToHoldersWithGdp) {
  const auto assets = parse_asset_table(
      "year,holder,issuer,value_musd\n"
      "2009,A,B,5\n2009,B,C,7\n2009,C,A,9\n2009,A,C,1\n");
  const auto gdp = parse_gdp_table("year,country,gdp_musd\n2009,A,100\n2009,B,100\n");
  const auto s = core_slice(assets, gdp, 2009);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.countries(), (std::vector<CountryCode>{"A", "B"}));
  EXPECT_EQ(s.holding(0, 1), 5.0);
  EXPECT_EQ(s.holding(1, 0), 0.0);  // missing pair
}

TEST(CoreSlice, CoverageAgainstUnrestrictedHoldings) {
  // A: 60 in B plus 10 in non-reporter X; B: 30 in A. Internal 90 of 100.
  const auto assets = parse_asset_table(
      "year,holder,issuer,value_musd\n2009,A,B,60\n2009,A,X,10\n2009,B,A,30\n");
  const auto gdp = parse_gdp_table("year,country,gdp_musd\n2009,A,1\n2009,B,1\n");
  const auto s = core_slice(assets, gdp, 2009);
  EXPECT_DOUBLE_EQ(s.coverage(), 0.9);
}

TEST(CoreSlice, Errors) {
  const auto assets = parse_asset_table("year,holder,issuer,value_musd\n2009,A,B,1\n2009,B,A,1\n");
  const auto gdp = parse_gdp_table("year,country,gdp_musd\n2009,A,1\n2008,B,1\n");
  EXPECT_THROW(core_slice(assets, gdp, 2007), DataError);
  EXPECT_THROW(core_slice(assets, gdp, 2009), DataError);  // only A qualifies
}

namespace {

std::string random_asset_csv(std::mt19937_64& rng, int countries, int years) {
  std::ostringstream out;
  out << "year,holder,issuer,value_musd\n";
  std::uniform_real_distribution<double> value(0.0, 1000.0);
  std::bernoulli_distribution present(0.6);
  for (int y = 0; y < years; ++y)
    for (int i = 0; i < countries; ++i)
      for (int j = 0; j < countries; ++j)
        if (i != j && present(rng))
          out << 2001 + y << ",C" << i << ",C" << j << ',' << value(rng) << '\n';
  return out.str();
}

}  // namespace

TEST(CoreSliceProperty, SubsetIdempotentAndCoverageIdentity) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto assets = parse_asset_table(random_asset_csv(rng, 9, 2));
    std::ostringstream g;
    g << "year,country,gdp_musd\n";
    std::bernoulli_distribution has_gdp(0.7);
    for (int y = 0; y < 2; ++y)
      for (int i = 0; i < 9; ++i)
        if (has_gdp(rng)) g << 2001 + y << ",C" << i << ",1000\n";
    const auto gdp = parse_gdp_table(g.str());
    for (int year : {2001, 2002}) {
      AssetSlice s;
      try {
        s = core_slice(assets, gdp, year);
      } catch (const DataError&) {
        continue;
      }
      double holders_total = 0.0;
      for (const auto& r : assets.records()) {
        if (r.year != year) continue;
        if (s.index_of(r.holder)) holders_total += r.value_musd;
      }
      // every slice country is a holder in that year
      for (const auto& c : s.countries()) {
        bool found = false;
        for (const auto& r : assets.records()) found |= (r.year == year && r.holder == c);
        EXPECT_TRUE(found);
      }
      EXPECT_LE(s.holdings().sum(), holders_total * (1 + 1e-12));
      EXPECT_NEAR(s.coverage() * holders_total, s.holdings().sum(), 1e-9 * holders_total);
      EXPECT_EQ(core_slice(assets, gdp, year), s);
    }
  }
}

TEST(PanelProperty, WriteParseRoundTrip) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = parse_asset_table(random_asset_csv(rng, 6, 3));
    std::ostringstream out;
    write_asset_table(p, out);
    EXPECT_EQ(parse_asset_table(out.str()), p);
  }
  const auto g = parse_gdp_table("year,country,gdp_musd\n2001,A,0.1\n2001,B,123456.789\n");
  std::ostringstream out;
  write_gdp_table(g, out);
  EXPECT_EQ(parse_gdp_table(out.str()), g);
}
