#include <gtest/gtest.h>

#include <cmath>

#include "builders.hpp"
#include "ftheat/classical_stats.hpp"
#include "ftheat/error.hpp"
#include "ftheat/gvt_recovery.hpp"

using namespace ftheat;
using ftheat::test::player;
using ftheat::test::player_of;
using ftheat::test::TripSpec;

namespace {

double independent_se(double h1, double h2, double n) {
  const double p1 = h1 / n, p2 = h2 / n;
  return std::sqrt(p1 * (1 - p1) / n + p2 * (1 - p2) / n);
}

const PairStatsRow& row(const std::vector<PairStatsRow>& rows, const std::string& label) {
  for (const auto& r : rows)
    if (r.label == label) return r;
  throw std::runtime_error("no row " + label);
}

}  // namespace

TEST(DiffSeZ, PooledCeltics) {
  const auto d = diff_se_z(1473, 1590, 2049);
  EXPECT_NEAR(d.diff, 117.0 / 2049.0, 1e-15);
  EXPECT_NEAR(d.std_err, independent_se(1473, 1590, 2049), 1e-15);
  EXPECT_NEAR(d.std_err, 0.014, 0.0005);
  EXPECT_NEAR(d.z, 4.2157, 5e-4);
}

TEST(DiffSeZ, Maxwell) {
  const auto d = diff_se_z(302, 342, 430);
  EXPECT_NEAR(d.diff, 0.093, 0.0005);
  EXPECT_NEAR(d.std_err, 0.029, 0.001);
}

TEST(DiffSeZ, Degenerate) {
  const auto d = diff_se_z(7, 7, 7);
  EXPECT_EQ(d.diff, 0.0);
  EXPECT_EQ(d.z, 0.0);
  EXPECT_THROW(diff_se_z(0, 0, 0), DomainError);
  EXPECT_THROW(diff_se_z(0, 5, 5), NumericalError);
}

TEST(DiffSeZ, McNemarForm) {
  const RawCounts c{31, 97, 57, 245};  // Maxwell
  const auto d = diff_se_z(c, SeFormula::McNemar);
  const double n = 430, b = 57, cc = 97;
  EXPECT_NEAR(d.std_err, std::sqrt(b + cc - (b - cc) * (b - cc) / n) / n, 1e-15);
  EXPECT_NEAR(d.diff, (cc - b) / n, 1e-15);
  const auto ind = diff_se_z(c, SeFormula::Independent);
  EXPECT_NEAR(ind.std_err, independent_se(302, 342, 430), 1e-15);
}

TEST(SeFormulaNames, ParseRoundTrip) {
  EXPECT_EQ(parse_se_formula("independent"), SeFormula::Independent);
  EXPECT_EQ(parse_se_formula("mcnemar"), SeFormula::McNemar);
  EXPECT_STREQ(to_string(SeFormula::McNemar), "mcnemar");
  EXPECT_THROW(parse_se_formula("paired"), DomainError);
}

TEST(PairStats, CelticsPooledAndParish) {
  const auto t = celtics_dataset();
  const auto rows = pair_stats(t, Grouping::Both);
  ASSERT_EQ(rows.size(), 10u);
  const auto& total = row(rows, "Total");
  EXPECT_EQ(total.n, 2049);
  EXPECT_NEAR(total.pct1, 0.719, 0.0005);
  EXPECT_NEAR(total.pct2, 0.776, 0.0005);
  const auto& parish = row(rows, "Parish");
  EXPECT_NEAR(parish.pct1, 0.670, 0.0005);
  EXPECT_NEAR(parish.pct2, 0.758, 0.0005);
  EXPECT_NEAR(parish.diff, 0.088, 0.0005);
}

TEST(PairStats, PooledIsSumOfPlayers) {
  const auto rows = pair_stats(celtics_dataset(), Grouping::Both);
  std::int64_t n = 0, h1 = 0, h2 = 0;
  for (const auto& r : rows)
    if (r.label != "Total") {
      n += r.n;
      h1 += r.h1;
      h2 += r.h2;
    }
  const auto& total = rows.back();
  EXPECT_EQ(total.label, "Total");
  EXPECT_EQ(total.n, n);
  EXPECT_EQ(total.h1, h1);
  EXPECT_EQ(total.h2, h2);
}

TEST(PairStats, OneTripHitMiss) {
  const TripTable t({player_of("P", {"HM"})});
  const auto rows = pair_stats(t, Grouping::PerPlayer);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].pct1, 1.0);
  EXPECT_EQ(rows[0].pct2, 0.0);
  EXPECT_EQ(rows[0].diff, -1.0);
  EXPECT_TRUE(std::isnan(rows[0].z));
}

TEST(PairStats, SkipsOneShotTripsAndEmptyPlayers) {
  const TripTable t({player_of("A", {"H", "HHM", "MH"}), player_of("B", {"H", "M"})});
  const auto rows = pair_stats(t, Grouping::PerPlayer);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].label, "A");
  EXPECT_EQ(rows[0].n, 2);
  EXPECT_EQ(rows[0].h1, 1);
  EXPECT_EQ(rows[0].h2, 2);
}

TEST(PairStats, OrderInvariant) {
  const TripTable a({player_of("A", {"HM", "MM", "HH", "MH", "HH"})});
  const TripTable b({player_of("A", {"HH", "MH", "HH", "MM", "HM"})});
  const auto ra = pair_stats(a, Grouping::Pooled)[0];
  const auto rb = pair_stats(b, Grouping::Pooled)[0];
  EXPECT_EQ(ra.h1, rb.h1);
  EXPECT_EQ(ra.h2, rb.h2);
  EXPECT_EQ(ra.z, rb.z);
}

TEST(TripLengthTable, ThreeOneShotHits) {
  const TripTable t({player_of("A", {"H", "H", "H"})});
  const auto rows = trip_length_table(t);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].situation, TripClass::ExactlyOne);
  EXPECT_EQ(rows[0].n, 3);
  ASSERT_TRUE(rows[0].pct[0].has_value());
  EXPECT_EQ(*rows[0].pct[0], 1.0);
  EXPECT_FALSE(rows[0].hits[1].has_value());
  EXPECT_EQ(rows[1].n, 0);
  EXPECT_FALSE(rows[1].pct[0].has_value());
  EXPECT_FALSE(rows[1].z12.has_value());
}

TEST(TripLengthTable, ClassesAndTotal) {
  const TripTable t({player_of("A", {"H", "M", "HM", "MH", "HH", "MHH", "HHM"})});
  const auto rows = trip_length_table(t);
  const auto& one = rows[0];
  const auto& two = rows[1];
  const auto& three = rows[2];
  const auto& total = rows[3];
  EXPECT_EQ(one.n, 2);
  EXPECT_EQ(two.n, 3);
  EXPECT_EQ(three.n, 2);
  EXPECT_EQ(*two.hits[0], 2);
  EXPECT_EQ(*two.hits[1], 2);
  EXPECT_EQ(*three.hits[2], 1);
  EXPECT_EQ(*three.misses(1), 1);
  EXPECT_EQ(*three.misses(3), 1);
  // Total Pct1 is the trip-weighted average of the class Pct1 values.
  const double w = (*one.pct[0] * 2 + *two.pct[0] * 3 + *three.pct[0] * 2) / 7.0;
  EXPECT_NEAR(*total.pct[0], w, 1e-15);
  EXPECT_NEAR(*total.pct[1], 4.0 / 5.0, 1e-15);
  EXPECT_NEAR(*total.pct[2], 1.0 / 2.0, 1e-15);
  EXPECT_NEAR(*three.delta23, 0.5 - 1.0, 1e-15);
  const auto d = diff_se_z(*two.hits[0], *two.hits[1], two.n);
  EXPECT_NEAR(*two.z12, d.z, 1e-15);
}

TEST(RepeatTripTable, UsesFirstTwoQualifyingTripsPerGame) {
  const TripTable t({player("A", {{"G1", "HH", 10}, {"G1", "H", 20}, {"G1", "MM", 30},
                                   {"G1", "HM", 40}}),
                     player("B", {{"G1", "HH", 10}, {"G2", "MM", 10}})});
  const auto r = repeat_trip_table(t);
  EXPECT_EQ(r.first.n, 1);
  EXPECT_EQ(r.second.n, 1);
  EXPECT_EQ(r.first.h1, 1);
  EXPECT_EQ(r.first.h2, 1);
  EXPECT_EQ(r.second.h1, 0);
  EXPECT_EQ(r.second.h2, 0);
}

TEST(RepeatTripTable, CrossRowUsesIndependentSamples) {
  std::vector<TripSpec> specs;
  const std::vector<std::string> s1 = {"HH", "MH", "HM", "MM", "HH", "HH"};
  const std::vector<std::string> s2 = {"MH", "MH", "HH", "HM", "MM", "HH"};
  for (std::size_t g = 0; g < s1.size(); ++g) {
    const std::string game = "G" + std::to_string(g);
    specs.push_back({game, s1[g], 10});
    specs.push_back({game, s2[g], 20});
  }
  const TripTable t({player("A", specs)});
  const auto r = repeat_trip_table(t);
  ASSERT_EQ(r.first.n, 6);
  const auto expect = two_sample_diff(r.first.h1, 6, r.second.h1, 6);
  EXPECT_DOUBLE_EQ(r.delta_pct1.diff, expect.diff);
  EXPECT_DOUBLE_EQ(r.delta_pct1.std_err, expect.std_err);
  const double pa = 4.0 / 6, pb = 3.0 / 6;
  EXPECT_NEAR(expect.std_err, std::sqrt(pa * (1 - pa) / 6 + pb * (1 - pb) / 6), 1e-15);
}

TEST(RepeatTripTable, NoQualifyingGames) {
  const TripTable t({player_of("A", {"HH", "HM", "MM"})});
  const auto r = repeat_trip_table(t);
  EXPECT_EQ(r.first.n, 0);
  EXPECT_EQ(r.second.n, 0);
}
