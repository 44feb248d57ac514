#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftheat/ingest.hpp"
#include "ftheat/mixture.hpp"
#include "ftheat/numerics.hpp"

namespace ftheat {

inline constexpr int kTimeBins = 49;  // 48 regulation minutes plus one overtime bin

/// Prior N(0, sigma_delta) shared by every displacement.
struct DisplacementPrior {
  Mat2 sigma_delta = 0.1 * Mat2::Identity();

  /// Throws DomainError unless symmetric positive definite.
  void validate() const;
};

/// One stratum's displacement. Model 2 strata are trip indices h (bin = 0);
/// Model 3 strata are (h in {1,2}, bin in 1..49).
struct DisplacementEstimate {
  int h = 1;
  int bin = 0;
  Vec2 delta = Vec2::Zero();
  Mat2 cov = Mat2::Zero();
  std::int64_t n_trips = 0;
  bool present = true;  // false when the stratum had no data
};

/// 1 + whole minutes elapsed in regulation; every overtime trip lands in bin 49.
int bin_index(double elapsed_seconds);
/// Plotting position in minutes: the middle of the minute, and 50.5 for overtime.
double minute_midpoint(int bin);

struct Model2Config {
  int h_max = 10;
  int max_iterations = 1000;
  double tolerance = 1e-6;  // relative change of sigma_delta
  Mat2 initial_sigma = 0.1 * Mat2::Identity();
  int quadrature_order = QuadratureRule::kDefaultOrder;
  unsigned threads = 0;
};

struct Model2Result {
  DisplacementPrior prior;
  std::vector<DisplacementEstimate> estimates;  // h = 1..h_max
  int iterations = 0;
  bool converged = false;
  /// Data log-likelihood at the final displacements.
  double log_likelihood = 0.0;
  std::vector<std::string> warnings;
};

/// Displacements by intra-game trip index with the mixture held fixed.
/// Each EM round finds the posterior mode of all displacements under the
/// current prior, then refits the prior from the modes and their Laplace
/// covariances. Trips beyond h_max share the top stratum.
Model2Result fit_model2(const TripTable& trips, const Mixture& mixture,
                        const Model2Config& config = {});

/// mahalanobis(delta_b - delta_a, cov_a + cov_b).
double displacement_diff_stat(const std::vector<DisplacementEstimate>& estimates, int h_a,
                              int h_b);

struct Model3Config {
  int quadrature_order = QuadratureRule::kDefaultOrder;
  unsigned threads = 0;
};

/// Posterior-mode displacements for every (min(h, 2), minute bin) cell under
/// a fixed prior. Returns 98 estimates ordered by h then bin; empty cells
/// carry the prior (delta 0, cov sigma_delta) and present = false.
std::vector<DisplacementEstimate> fit_model3(const TripTable& trips, const Mixture& mixture,
                                             const DisplacementPrior& prior,
                                             const Model3Config& config = {});

/// Posterior mode and Laplace covariance of per-stratum displacements.
/// strata[i][j] is the stratum of player i's trip j (or -1 to ignore it).
struct DisplacementMap {
  std::vector<Vec2> delta;
  std::vector<Mat2> cov;
  std::vector<std::int64_t> n_trips;
  double log_likelihood = 0.0;  // data term at the mode
  int iterations = 0;
};
DisplacementMap displacement_map(const TripTable& trips,
                                 const std::vector<std::vector<int>>& strata, int n_strata,
                                 const Mixture& mixture, const Mat2& prior_cov,
                                 const QuadratureRule& rule, unsigned threads,
                                 const std::vector<Vec2>* start = nullptr);

}  // namespace ftheat
