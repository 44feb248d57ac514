#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ftheat/gvt_recovery.hpp"
#include "ftheat/ingest.hpp"
#include "ftheat/mixture.hpp"

namespace ftheat {

/// Per-player first-vs-second-shot association over trips of 2+ shots.
/// Statistics are present only for eligible players: every one of the four
/// outcome pairs must occur at least once.
struct PlayerCorrStats {
  std::string player_id;
  RawCounts pairs;
  bool eligible = false;
  std::optional<double> r_hat;  // unbiased covariance estimate
  std::optional<double> r;      // sample correlation
  std::optional<double> cd;     // P(hit2 | hit1) - P(hit2 | miss1)
  // Plug-in variances used as inverse weights.
  std::optional<double> var_r_hat;  // P1 Q1 P2 Q2 / N
  std::optional<double> var_r;      // 1 / N
  std::optional<double> var_cd;     // P2 Q2 (1/n_miss1 + 1/n_hit1)
};

/// Only the 2x2 table of (1st, 2nd) outcomes matters.
PlayerCorrStats corr_stats_from_counts(const std::string& player_id, const RawCounts& pairs);
PlayerCorrStats player_corr_stats(const PlayerTrips& player);
std::vector<PlayerCorrStats> all_corr_stats(const TripTable& trips);

struct ExpectedCorr {
  double r_hat = 0.0;      // E[Cov(P1, P2)]
  double r = 0.0;          // correlation approximation
  double cd = 0.0;         // delta-method form cov / (p1 (1 - p1))
  double cd_printed = 0.0; // cov / p1
};

/// Expectations for a player drawn from the mixture: each component's
/// within-profile moments plugged into the approximations, then averaged
/// with the mixture weights. `trips` (N, trips of 2+ shots) applies the
/// N / (N - 1) factor to the correlation; omitted means N large.
ExpectedCorr expected_under_mixture(const Mixture& mixture, const QuadratureRule& rule = QuadratureRule(),
                                    std::optional<double> trips = std::nullopt);

enum class CorrStatistic { RHat, R, CD };
enum class Weighting { Uniform, Information };

const char* to_string(CorrStatistic s);
const char* to_string(Weighting w);

struct WeightedSummary {
  std::size_t players = 0;
  double average = 0.0;
  double std_err = 0.0;  // NaN for a uniform summary of one player
  double z = 0.0;
};

/// Averages one statistic over eligible players. Uniform: mean and sd/sqrt(n).
/// Information: weights 1/var, SE (sum w)^-1/2. Throws DomainError with no
/// eligible players or a non-positive variance under information weighting.
WeightedSummary weighted_summary(const std::vector<PlayerCorrStats>& stats, CorrStatistic which,
                                 Weighting weighting);

}  // namespace ftheat
