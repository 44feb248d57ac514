#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "ftheat/displacement.hpp"
#include "ftheat/ingest.hpp"
#include "ftheat/mixture.hpp"

namespace ftheat {

/// How many games, trips and shots each synthetic player gets. The two
/// distributions are probability vectors over 1..K trips per game and over
/// 1..3 shots per trip.
struct ScheduleSpec {
  std::size_t players = 100;
  std::size_t games_per_player = 10;
  std::vector<double> trips_per_game{1.0};
  std::vector<double> shots_per_trip{0.0, 1.0, 0.0};
  double overtime_probability = 0.0;
  std::uint64_t seed = 1;

  /// One-hot distribution on n.
  static std::vector<double> exactly(std::size_t n);
  void validate() const;
};

/// Per-(min(h,2), bin) displacements, indexed [h-1][bin-1].
using TimeProfile = std::array<std::array<Vec2, kTimeBins>, 2>;

struct GenerateOptions {
  /// Displacement by trip index, entry h-1 for trip h; later trips reuse the
  /// last entry.
  std::optional<std::vector<Vec2>> trip_index_deltas;
  /// When set (and trip_index_deltas is not), h_max displacements are drawn
  /// once from N(0, sigma_delta).
  std::optional<DisplacementPrior> prior;
  int h_max = 10;
  std::optional<TimeProfile> time_profile;
};

struct GeneratedData {
  TripTable trips;
  std::vector<std::size_t> components;  // profile drawn for each player
  std::vector<Vec2> trip_index_deltas;  // empty when none were applied
};

/// Deterministic in (mixture, schedule, options); each player draws from its
/// own stream keyed by (seed, player index), so thread count is irrelevant.
GeneratedData gen_dataset(const Mixture& mixture, const ScheduleSpec& schedule,
                          const GenerateOptions& options = {}, unsigned threads = 0);

struct McEstimate {
  double value = 0.0;
  double std_err = 0.0;
};

/// Monte-Carlo likelihood of a trip's outcomes (first two shots), averaging
/// the Bernoulli product over draws of X. Requires draws >= 1000.
McEstimate mc_trip_likelihood(const std::vector<bool>& outcomes, const Profile& profile,
                              std::size_t draws, std::uint64_t seed);

/// All four two-shot outcome probabilities from one set of draws, ordered
/// HH, HM, MH, MM.
std::array<McEstimate, 4> mc_pair_probabilities(const Profile& profile, std::size_t draws,
                                                std::uint64_t seed);

/// Monte-Carlo (E[P1 | y1], E[P2 | y1]) as self-normalized ratios with
/// delta-method standard errors.
std::pair<McEstimate, McEstimate> mc_conditional_expectation(const Profile& profile,
                                                             bool first_made, std::size_t draws,
                                                             std::uint64_t seed);

}  // namespace ftheat
