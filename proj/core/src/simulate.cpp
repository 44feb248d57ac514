#include "ftheat/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ftheat/error.hpp"
#include "ftheat/parallel.hpp"

namespace ftheat {

std::vector<double> ScheduleSpec::exactly(std::size_t n) {
  if (n < 1) throw DomainError("count must be at least 1");
  std::vector<double> w(n, 0.0);
  w[n - 1] = 1.0;
  return w;
}

namespace {

void check_distribution(const std::vector<double>& w, const char* what, std::size_t max_len) {
  if (w.empty() || w.size() > max_len)
    throw DomainError(std::string(what) + " distribution has the wrong length");
  double s = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw DomainError(std::string(what) + " weights must be finite and non-negative");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-9) throw DomainError(std::string(what) + " weights must sum to 1");
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t key) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  return std::mt19937_64(seq);
}

// Square root factor that also handles singular covariances.
Mat2 factor(const Mat2& sigma) {
  Eigen::SelfAdjointEigenSolver<Mat2> eig(sigma);
  const Vec2 root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

bool bernoulli(std::mt19937_64& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

std::size_t categorical(std::mt19937_64& rng, const std::vector<double>& w) {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return i;
    u -= w[i];
  }
  // Round-off: fall back to the last category with positive weight.
  for (std::size_t i = w.size(); i-- > 0;)
    if (w[i] > 0.0) return i;
  return 0;
}

Vec2 standard_normal2(std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  const double a = n01(rng);
  const double b = n01(rng);
  return {a, b};
}

constexpr std::uint64_t kDeltaStreamKey = ~std::uint64_t{0};
constexpr double kOvertimeSeconds = 300.0;

}  // namespace

void ScheduleSpec::validate() const {
  if (players < 1) throw DomainError("schedule needs at least one player");
  if (games_per_player < 1) throw DomainError("schedule needs at least one game per player");
  check_distribution(trips_per_game, "trips-per-game", 1000);
  check_distribution(shots_per_trip, "shots-per-trip", 3);
  if (!(overtime_probability >= 0.0 && overtime_probability <= 1.0))
    throw DomainError("overtime probability must lie in [0, 1]");
}

GeneratedData gen_dataset(const Mixture& mixture, const ScheduleSpec& schedule,
                          const GenerateOptions& options, unsigned threads) {
  mixture.validate();
  schedule.validate();
  GeneratedData out;

  if (options.trip_index_deltas) {
    if (options.trip_index_deltas->empty()) throw DomainError("trip-index displacements are empty");
    out.trip_index_deltas = *options.trip_index_deltas;
  } else if (options.prior) {
    options.prior->validate();
    if (options.h_max < 1) throw DomainError("h_max must be at least 1");
    auto rng = substream(schedule.seed, kDeltaStreamKey);
    const Mat2 l = factor(options.prior->sigma_delta);
    for (int h = 0; h < options.h_max; ++h) out.trip_index_deltas.push_back(l * standard_normal2(rng));
  }

  std::vector<double> weights;
  std::vector<Mat2> roots;
  for (const auto& c : mixture.components) {
    weights.push_back(c.weight);
    roots.push_back(factor(c.profile.sigma));
  }

  std::vector<PlayerTrips> players(schedule.players);
  out.components.assign(schedule.players, 0);
  parallel_for(schedule.players, threads, [&](std::size_t p) {
    auto rng = substream(schedule.seed, p);
    const std::size_t m = categorical(rng, weights);
    out.components[p] = m;
    const Profile& prof = mixture.components[m].profile;
    auto& player = players[p];
    player.player_id = "P" + std::to_string(p + 1);
    std::uniform_real_distribution<double> regulation(0.0, kRegulationSeconds);
    std::uniform_real_distribution<double> overtime(kRegulationSeconds,
                                                    kRegulationSeconds + kOvertimeSeconds);
    for (std::size_t g = 0; g < schedule.games_per_player; ++g) {
      const std::string game_id = "S" + std::to_string(p + 1) + "-G" + std::to_string(g + 1);
      const std::size_t k = categorical(rng, schedule.trips_per_game) + 1;
      std::vector<double> times(k);
      for (auto& t : times)
        t = bernoulli(rng, schedule.overtime_probability) ? overtime(rng) : regulation(rng);
      std::sort(times.begin(), times.end());
      for (std::size_t j = 0; j < k; ++j) {
        const int h = static_cast<int>(j + 1);
        Vec2 x = prof.mu + roots[m] * standard_normal2(rng);
        if (!out.trip_index_deltas.empty()) {
          const auto idx = std::min<std::size_t>(j, out.trip_index_deltas.size() - 1);
          x += out.trip_index_deltas[idx];
        }
        if (options.time_profile) {
          const auto hh = static_cast<std::size_t>(std::min(h, 2) - 1);
          x += (*options.time_profile)[hh][static_cast<std::size_t>(bin_index(times[j]) - 1)];
        }
        const std::size_t shots = categorical(rng, schedule.shots_per_trip) + 1;
        Trip trip;
        trip.player_id = player.player_id;
        trip.game_id = game_id;
        trip.intra_game_index = h;
        trip.elapsed_seconds = times[j];
        for (std::size_t s = 0; s < shots; ++s)
          trip.outcomes.push_back(bernoulli(rng, logistic(s == 0 ? x(0) : x(1))));
        player.trips.push_back(std::move(trip));
      }
    }
  });
  out.trips = TripTable(std::move(players));
  return out;
}

McEstimate mc_trip_likelihood(const std::vector<bool>& outcomes, const Profile& profile,
                              std::size_t draws, std::uint64_t seed) {
  if (draws < 1000) throw DomainError("Monte-Carlo likelihood needs at least 1000 draws");
  if (outcomes.empty()) throw DomainError("a trip has at least one shot");
  profile.validate();
  std::mt19937_64 rng(seed);
  const Mat2 l = factor(profile.sigma);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    const Vec2 x = profile.mu + l * standard_normal2(rng);
    double lik = 1.0;
    for (std::size_t k = 0; k < std::min<std::size_t>(outcomes.size(), 2); ++k) {
      const double f = logistic(x(static_cast<int>(k)));
      lik *= outcomes[k] ? f : 1.0 - f;
    }
    sum += lik;
    sum2 += lik * lik;
  }
  const double n = static_cast<double>(draws);
  const double mean = sum / n;
  const double var = std::max(sum2 / n - mean * mean, 0.0) * n / (n - 1);
  return {mean, std::sqrt(var / n)};
}

std::array<McEstimate, 4> mc_pair_probabilities(const Profile& profile, std::size_t draws,
                                                std::uint64_t seed) {
  if (draws < 1000) throw DomainError("Monte-Carlo likelihood needs at least 1000 draws");
  profile.validate();
  std::mt19937_64 rng(seed);
  const Mat2 l = factor(profile.sigma);
  std::array<double, 4> sum{}, sum2{};
  for (std::size_t d = 0; d < draws; ++d) {
    const Vec2 x = profile.mu + l * standard_normal2(rng);
    const double f1 = logistic(x(0)), g1 = logistic(-x(0));
    const double f2 = logistic(x(1)), g2 = logistic(-x(1));
    const std::array<double, 4> v{f1 * f2, f1 * g2, g1 * f2, g1 * g2};
    for (std::size_t k = 0; k < 4; ++k) {
      sum[k] += v[k];
      sum2[k] += v[k] * v[k];
    }
  }
  const double n = static_cast<double>(draws);
  std::array<McEstimate, 4> out;
  for (std::size_t k = 0; k < 4; ++k) {
    const double mean = sum[k] / n;
    const double var = std::max(sum2[k] / n - mean * mean, 0.0) * n / (n - 1);
    out[k] = {mean, std::sqrt(var / n)};
  }
  return out;
}

std::pair<McEstimate, McEstimate> mc_conditional_expectation(const Profile& profile,
                                                             bool first_made, std::size_t draws,
                                                             std::uint64_t seed) {
  if (draws < 1000) throw DomainError("Monte-Carlo expectation needs at least 1000 draws");
  profile.validate();
  std::mt19937_64 rng(seed);
  const Mat2 l = factor(profile.sigma);
  // Ratio estimators E[w f_k] / E[w] with w the first-shot likelihood.
  std::vector<double> w(draws), a(draws), b(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    const Vec2 x = profile.mu + l * standard_normal2(rng);
    const double f1 = logistic(x(0));
    w[d] = first_made ? f1 : logistic(-x(0));
    a[d] = w[d] * f1;
    b[d] = w[d] * logistic(x(1));
  }
  auto ratio = [&](const std::vector<double>& num) {
    const double n = static_cast<double>(draws);
    double sw = 0.0, sn = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
      sw += w[d];
      sn += num[d];
    }
    const double r = sn / sw;
    const double wbar = sw / n;
    double ss = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
      const double e = num[d] - r * w[d];
      ss += e * e;
    }
    return McEstimate{r, std::sqrt(ss / (n - 1) / n) / wbar};
  };
  return {ratio(a), ratio(b)};
}

}  // namespace ftheat
