#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ftheat/ingest.hpp"
#include "ftheat/mixture.hpp"
#include "ftheat/numerics.hpp"

namespace ftheat {

/// A player's likelihood under any profile depends on the trips only through
/// how often each outcome pattern occurred.
struct PatternCounts {
  std::array<std::int64_t, kPatternCount> n{};

  std::int64_t total() const;
  std::int64_t& operator[](Pattern p) { return n[static_cast<std::size_t>(p)]; }
  std::int64_t operator[](Pattern p) const { return n[static_cast<std::size_t>(p)]; }
};

PatternCounts pattern_counts(const PlayerTrips& player);

/// sum_p counts[p] * log probs[p]; patterns that never occur are skipped, so
/// zero-probability patterns only matter when observed.
double pattern_log_likelihood(const PatternCounts& counts, const PatternProbabilities& probs);

struct EmConfig {
  std::size_t components = 8;
  int max_iterations = 500;
  double tolerance = 1e-8;  // relative log-likelihood improvement
  std::uint64_t seed = 1;
  int quadrature_order = QuadratureRule::kDefaultOrder;
  int inner_iterations = 50;
  unsigned threads = 0;

  void validate() const;
};

struct EmResult {
  Mixture mixture;
  int iterations = 0;
  double log_likelihood = 0.0;
  bool converged = false;
  /// Log-likelihood after initialization and after every iteration.
  std::vector<double> history;
  /// Iterations (1-based) at which collapsed components were removed.
  std::vector<int> drop_iterations;
  std::vector<std::string> warnings;

  FitMetadata metadata(const EmConfig& config, const TripTable& trips) const;
};

double log_likelihood(const TripTable& trips, const Mixture& mixture,
                      const QuadratureRule& rule = QuadratureRule());

/// EM from the seeded k-means initialization.
EmResult em_fit(const TripTable& trips, const EmConfig& config);
/// EM from a caller-supplied starting mixture.
EmResult em_fit(const TripTable& trips, const Mixture& start, const EmConfig& config);

struct SelectionRow {
  std::size_t requested = 0;
  std::size_t fitted = 0;  // after collapsed components are dropped
  double log_likelihood = 0.0;
  double bic = 0.0;
  bool converged = false;
};

/// Fits each M and scores it by BIC with 6M - 1 free parameters.
std::vector<SelectionRow> select_components(const TripTable& trips,
                                            const std::vector<std::size_t>& candidates,
                                            const EmConfig& config);

struct PlayerPosterior {
  std::vector<double> weights;
};

PlayerPosterior player_posterior(const PlayerTrips& player, const Mixture& mixture,
                                 const QuadratureRule& rule = QuadratureRule());

/// (E[P1 | y1], E[P2 | y1]) for a fresh trip by this player: each
/// component's conditional expectation weighted by the player's posterior.
std::pair<double, double> conditional_posterior(const PlayerTrips& player,
                                                const Mixture& mixture, bool first_made,
                                                const QuadratureRule& rule = QuadratureRule());

struct PowerConfig {
  Profile null_profile;
  double gap = 0.0;  // P(hit2 | hit1) - P(hit2 | miss1) under the alternative
  double z_threshold = 2.0;
  double target_power = 0.5;
  std::uint64_t seed = 1;
  int replicates = 10000;
  std::int64_t max_trips = 10'000'000;
  int quadrature_order = QuadratureRule::kDefaultOrder;

  void validate() const;
};

struct PowerResult {
  std::int64_t trips = 0;
  double power = 0.0;
  double hit_given_hit = 0.0;
  double hit_given_miss = 0.0;
};

/// Rejection rate of the one-sided conditional-difference test at n trips
/// when first shots hit with probability p1 and second shots with
/// probability a after a hit and b after a miss.
double conditional_test_power(double p1, double a, double b, std::int64_t n, double z_threshold,
                              int replicates, std::uint64_t seed);

/// Normal-approximation trip count for the same test:
/// N = (z + z_power)^2 p2 (1 - p2) / (p1 (1 - p1) gap^2).
double power_trips_normal_approx(const PowerConfig& config);

/// Smallest trip count reaching the target power. Throws NumericalError when
/// the search passes max_trips.
PowerResult power_trips(const PowerConfig& config);

}  // namespace ftheat
