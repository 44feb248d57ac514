#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ftheat/gvt_recovery.hpp"
#include "ftheat/ingest.hpp"

namespace ftheat {

/// Standard error used for a difference of two proportions measured on the
/// same n trips.
enum class SeFormula {
  Independent,  // sqrt(p1 q1 / n + p2 q2 / n)
  McNemar,      // paired: sqrt(b + c - (b - c)^2 / n) / n over discordant pairs
};

SeFormula parse_se_formula(const std::string& name);
const char* to_string(SeFormula f);

struct DiffStat {
  double diff = 0.0;     // p2 - p1
  double std_err = 0.0;
  double z = 0.0;
};

/// Difference h2/n - h1/n with the independent-proportions standard error.
/// z is 0 when both diff and std_err are 0. Throws DomainError for n == 0
/// and NumericalError for a zero standard error with a nonzero difference.
DiffStat diff_se_z(std::int64_t h1, std::int64_t h2, std::int64_t n);

/// Same difference from full 2x2 counts, using the chosen formula.
DiffStat diff_se_z(const RawCounts& pairs, SeFormula formula);

/// Difference p_b - p_a of proportions from two independent samples.
DiffStat two_sample_diff(std::int64_t h_a, std::int64_t n_a, std::int64_t h_b, std::int64_t n_b);

struct PairStatsRow {
  std::string label;
  std::int64_t n = 0;
  std::int64_t h1 = 0;
  std::int64_t h2 = 0;
  double pct1 = 0.0;  // proportions in [0, 1]
  double pct2 = 0.0;
  double diff = 0.0;
  double std_err = 0.0;
  double z = 0.0;  // NaN when std_err is 0 but diff is not
};

enum class Grouping { PerPlayer, Pooled, Both };

/// 2x2 first/second outcome counts over a player's trips with >= 2 shots.
RawCounts pair_counts(const PlayerTrips& player);

/// Per-player rows (players with no qualifying trip omitted) and/or a pooled
/// row labelled "Total". Uses shots 1 and 2 of trips with at least 2 shots.
std::vector<PairStatsRow> pair_stats(const TripTable& trips, Grouping grouping,
                                     SeFormula formula = SeFormula::Independent);

PairStatsRow pair_stats_row(const std::string& label, const RawCounts& pairs, SeFormula formula);

enum class TripClass { ExactlyOne, ExactlyTwo, ThreePlus, Total };
const char* to_string(TripClass c);

struct TripLengthRow {
  TripClass situation = TripClass::Total;
  std::int64_t n = 0;                              // trips in the class
  std::array<std::optional<std::int64_t>, 3> hits;  // H1..H3
  std::array<std::optional<std::int64_t>, 3> attempts;  // trips contributing to Hk
  std::array<std::optional<double>, 3> pct;
  std::optional<double> delta12, delta23;
  std::optional<double> z12, z23;

  std::optional<std::int64_t> misses(std::size_t k) const;
};

/// Single-trip table split by trip length (1, 2, 3+) plus a pooled row where
/// shot index k pools every trip with at least k shots.
std::vector<TripLengthRow> trip_length_table(const TripTable& trips,
                                             SeFormula formula = SeFormula::Independent);

struct RepeatTripTable {
  PairStatsRow first;   // S1: first of 2+ trips of 2+ shots within a game
  PairStatsRow second;  // S2: second such trip
  DiffStat delta_pct1;  // Pct1[S2] - Pct1[S1]
  DiffStat delta_pct2;  // Pct2[S2] - Pct2[S1]
};

/// For every (player, game) with at least two trips of >= 2 shots, pairs the
/// first and second such trips.
RepeatTripTable repeat_trip_table(const TripTable& trips,
                                  SeFormula formula = SeFormula::Independent);

}  // namespace ftheat
