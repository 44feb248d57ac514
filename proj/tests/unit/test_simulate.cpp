#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "builders.hpp"
#include "ftheat/displacement.hpp"
#include "ftheat/error.hpp"
#include "ftheat/simulate.hpp"

using namespace ftheat;
using ftheat::test::profile;
using ftheat::test::shots;

namespace {

std::string serialize(const TripTable& t) {
  std::ostringstream out;
  write_trip_table(out, t);
  return out.str();
}

}  // namespace

TEST(ScheduleSpec, Validation) {
  ScheduleSpec s;
  EXPECT_NO_THROW(s.validate());
  s.players = 0;
  EXPECT_THROW(s.validate(), DomainError);
  s = ScheduleSpec{};
  s.trips_per_game = {0.5, 0.4};
  EXPECT_THROW(s.validate(), DomainError);
  s = ScheduleSpec{};
  s.shots_per_trip = {0.5, 0.25, 0.25, 0.0};
  EXPECT_THROW(s.validate(), DomainError);
  s = ScheduleSpec{};
  s.overtime_probability = 1.5;
  EXPECT_THROW(s.validate(), DomainError);
  EXPECT_EQ(ScheduleSpec::exactly(3), (std::vector<double>{0, 0, 1}));
}

TEST(GenDataset, CertainHitsForHugeLogits) {
  ScheduleSpec s;
  s.players = 5;
  s.games_per_player = 20;
  s.shots_per_trip = {0.2, 0.5, 0.3};
  const auto d = gen_dataset(Mixture::single(profile(800.0, 800.0)), s);
  for (const auto& p : d.trips.players())
    for (const auto& t : p.trips)
      for (bool y : t.outcomes) EXPECT_TRUE(y);
}

TEST(GenDataset, FirstShotRateMatchesPointMass) {
  ScheduleSpec s;
  s.players = 1000;
  s.games_per_player = 1000;
  s.seed = 31;
  const auto d = gen_dataset(Mixture::single(profile(logit(0.75), logit(0.80))), s);
  std::int64_t n = 0, h1 = 0, h2 = 0;
  for (const auto& p : d.trips.players())
    for (const auto& t : p.trips) {
      ++n;
      h1 += t.outcomes[0];
      h2 += t.outcomes[1];
    }
  ASSERT_EQ(n, 1'000'000);
  const double se1 = std::sqrt(0.75 * 0.25 / n), se2 = std::sqrt(0.8 * 0.2 / n);
  EXPECT_LE(std::abs(static_cast<double>(h1) / n - 0.75), 3 * se1);
  EXPECT_LE(std::abs(static_cast<double>(h2) / n - 0.80), 3 * se2);
}

TEST(GenDataset, SameSeedIsByteIdenticalAcrossThreads) {
  Mixture m;
  m.components = {{0.4, profile(0.5, 0.7, 0.3, 0.1, 0.2)}, {0.6, profile(1.5, 1.9, 0.2, 0.1, 0.2)}};
  ScheduleSpec s;
  s.players = 50;
  s.games_per_player = 8;
  s.trips_per_game = {0.3, 0.4, 0.3};
  s.shots_per_trip = {0.2, 0.7, 0.1};
  s.overtime_probability = 0.05;
  s.seed = 12;
  GenerateOptions g;
  g.prior = DisplacementPrior{};
  const auto a = gen_dataset(m, s, g, 1);
  const auto b = gen_dataset(m, s, g, 7);
  EXPECT_EQ(serialize(a.trips), serialize(b.trips));
  EXPECT_EQ(a.components, b.components);
  EXPECT_EQ(a.trip_index_deltas, b.trip_index_deltas);
  s.seed = 13;
  EXPECT_NE(serialize(gen_dataset(m, s, g).trips), serialize(a.trips));
}

TEST(GenDataset, RoundTripsThroughIngest) {
  ScheduleSpec s;
  s.players = 20;
  s.games_per_player = 5;
  s.trips_per_game = {0.2, 0.3, 0.5};
  s.shots_per_trip = {0.3, 0.5, 0.2};
  s.overtime_probability = 0.1;
  const auto d = gen_dataset(Mixture::single(profile(1, 1, 0.2, 0.0, 0.2)), s);
  std::istringstream in(serialize(d.trips));
  EXPECT_EQ(read_trip_table(in), d.trips);
  bool overtime = false;
  for (const auto& p : d.trips.players())
    for (const auto& t : p.trips) overtime |= t.elapsed_seconds >= kRegulationSeconds;
  EXPECT_TRUE(overtime);
}

TEST(GenDataset, TripIndexDeltasApplied) {
  ScheduleSpec s;
  s.players = 200;
  s.games_per_player = 200;
  s.trips_per_game = ScheduleSpec::exactly(2);
  GenerateOptions g;
  g.trip_index_deltas = std::vector<Vec2>{Vec2(-3.0, -3.0), Vec2(3.0, 3.0)};
  const auto d = gen_dataset(Mixture::single(profile(0, 0)), s, g);
  std::int64_t hits[2] = {0, 0}, n[2] = {0, 0};
  for (const auto& p : d.trips.players())
    for (const auto& t : p.trips) {
      hits[t.intra_game_index - 1] += t.outcomes[0];
      ++n[t.intra_game_index - 1];
    }
  EXPECT_NEAR(static_cast<double>(hits[0]) / n[0], logistic(-3.0), 0.005);
  EXPECT_NEAR(static_cast<double>(hits[1]) / n[1], logistic(3.0), 0.005);
}

TEST(GenDataset, PriorDrawsHmaxDeltas) {
  ScheduleSpec s;
  s.players = 3;
  GenerateOptions g;
  g.prior = DisplacementPrior{};
  g.h_max = 6;
  EXPECT_EQ(gen_dataset(Mixture::single(profile(0, 0)), s, g).trip_index_deltas.size(), 6u);
  EXPECT_TRUE(gen_dataset(Mixture::single(profile(0, 0)), s).trip_index_deltas.empty());
}

TEST(McTripLikelihood, PointMassExact) {
  const auto e = mc_trip_likelihood(shots("HH"), profile(0, 0), 1000, 1);
  EXPECT_DOUBLE_EQ(e.value, 0.25);
  EXPECT_DOUBLE_EQ(e.std_err, 0.0);
  EXPECT_THROW(mc_trip_likelihood(shots("HH"), profile(0, 0), 999, 1), DomainError);
}

TEST(McTripLikelihood, StdErrScalesAsRootDraws) {
  const auto p = profile(0.4, 0.9, 1.0, 0.3, 0.8);
  const auto a = mc_trip_likelihood(shots("HM"), p, 200'000, 3);
  const auto b = mc_trip_likelihood(shots("HM"), p, 400'000, 4);
  EXPECT_NEAR(a.std_err / b.std_err, std::sqrt(2.0), 0.05);
  EXPECT_LE(std::abs(a.value - b.value), 3 * std::hypot(a.std_err, b.std_err));
}

TEST(McPairProbabilities, SumToOne) {
  const auto r = mc_pair_probabilities(profile(0.4, 0.9, 1.0, 0.3, 0.8), 10000, 2);
  EXPECT_NEAR(r[0].value + r[1].value + r[2].value + r[3].value, 1.0, 1e-12);
}
