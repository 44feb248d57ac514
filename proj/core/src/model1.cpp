#include "ftheat/model1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ftheat/error.hpp"
#include "ftheat/parallel.hpp"

namespace ftheat {

std::int64_t PatternCounts::total() const {
  std::int64_t s = 0;
  for (auto c : n) s += c;
  return s;
}

PatternCounts pattern_counts(const PlayerTrips& player) {
  PatternCounts c;
  for (const auto& t : player.trips) c[pattern_of(t.outcomes)] += 1;
  return c;
}

double pattern_log_likelihood(const PatternCounts& counts, const PatternProbabilities& probs) {
  double s = 0.0;
  for (std::size_t k = 0; k < kPatternCount; ++k) {
    if (counts.n[k] == 0) continue;
    if (!(probs[k] > 0.0)) return -std::numeric_limits<double>::infinity();
    s += static_cast<double>(counts.n[k]) * std::log(probs[k]);
  }
  return s;
}

void EmConfig::validate() const {
  if (components < 1) throw DomainError("EM needs at least one component");
  if (!(tolerance > 0.0)) throw DomainError("EM tolerance must be positive");
  if (max_iterations < 1) throw DomainError("EM needs at least one iteration");
  if (inner_iterations < 1) throw DomainError("inner iterations must be positive");
  if (quadrature_order < 2) throw DomainError("quadrature order must be at least 2");
}

FitMetadata EmResult::metadata(const EmConfig& config, const TripTable& trips) const {
  FitMetadata meta;
  meta.requested_components = config.components;
  meta.iterations = iterations;
  meta.log_likelihood = log_likelihood;
  meta.converged = converged;
  meta.seed = config.seed;
  meta.quadrature_order = config.quadrature_order;
  meta.tolerance = config.tolerance;
  meta.players = trips.player_count();
  meta.trips = trips.trip_count();
  meta.warnings = warnings;
  return meta;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogDiagFloor = -20.0;
constexpr double kCollapseWeight = 1e-8;

std::vector<PatternCounts> all_counts(const TripTable& trips) {
  std::vector<PatternCounts> out;
  out.reserve(trips.player_count());
  for (const auto& p : trips.players()) out.push_back(pattern_counts(p));
  return out;
}

double log_sum_exp(const std::vector<double>& v) {
  double top = kNegInf;
  for (double x : v) top = std::max(top, x);
  if (top == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

// (mu1, mu2, log l11, l21, log l22) with sigma = L L'.
using Theta = std::array<double, 5>;

Profile to_profile(const Theta& t) {
  const double l11 = std::exp(std::max(t[2], kLogDiagFloor));
  const double l21 = t[3];
  const double l22 = std::exp(std::max(t[4], kLogDiagFloor));
  Profile p;
  p.mu = Vec2(t[0], t[1]);
  p.sigma << l11 * l11, l11 * l21, l11 * l21, l21 * l21 + l22 * l22;
  return p;
}

Theta from_profile(const Profile& p) {
  const double floor = std::exp(kLogDiagFloor);
  const double l11 = std::sqrt(std::max(p.sigma(0, 0), 0.0));
  const double l21 = l11 > floor ? p.sigma(1, 0) / l11 : 0.0;
  const double l22 = std::sqrt(std::max(p.sigma(1, 1) - l21 * l21, 0.0));
  return {p.mu(0), p.mu(1), std::log(std::max(l11, floor)), l21, std::log(std::max(l22, floor))};
}

struct WeightedCounts {
  std::array<double, kPatternCount> w{};
};

double component_objective(const Theta& t, const WeightedCounts& wc, const QuadratureRule& rule) {
  const auto probs = pattern_probabilities(to_profile(t), rule);
  double s = 0.0;
  for (std::size_t k = 0; k < kPatternCount; ++k) {
    if (wc.w[k] == 0.0) continue;
    if (!(probs[k] > 0.0)) return kNegInf;
    s += wc.w[k] * std::log(probs[k]);
  }
  return s;
}

// Quasi-Newton ascent with finite-difference gradients. Only improving steps
// are taken, so the objective never decreases.
Theta improve_component(const Theta& start, const WeightedCounts& wc, const QuadratureRule& rule,
                        int max_iter) {
  using V = Eigen::Matrix<double, 5, 1>;
  using M = Eigen::Matrix<double, 5, 5>;
  auto f = [&](const V& x) {
    Theta t;
    for (int i = 0; i < 5; ++i) t[static_cast<std::size_t>(i)] = x(i);
    return -component_objective(t, wc, rule);
  };
  auto grad = [&](const V& x) {
    V g;
    for (int i = 0; i < 5; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
      V up = x, dn = x;
      up(i) += h;
      dn(i) -= h;
      g(i) = (f(up) - f(dn)) / (2 * h);
    }
    return g;
  };

  V x;
  for (int i = 0; i < 5; ++i) x(i) = start[static_cast<std::size_t>(i)];
  double fx = f(x);
  if (!std::isfinite(fx)) return start;
  V g = grad(x);
  if (!g.allFinite()) return start;
  M H = M::Identity() / std::max(1.0, g.norm());

  for (int it = 0; it < max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= 1e-9 * std::max(1.0, std::abs(fx))) break;
    V d = -H * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      H = M::Identity() / std::max(1.0, g.norm());
      d = -H * g;
      slope = g.dot(d);
    }
    double step = 1.0;
    bool accepted = false;
    V x_new;
    double f_new = 0.0;
    for (int bt = 0; bt < 40; ++bt, step *= 0.5) {
      x_new = x + step * d;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope && f_new < fx) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const V g_new = grad(x_new);
    if (!g_new.allFinite()) {
      x = x_new;
      fx = f_new;
      break;
    }
    const V s = x_new - x;
    const V y = g_new - g;
    const double improvement = fx - f_new;
    x = x_new;
    fx = f_new;
    g = g_new;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (it == 0) H = M::Identity() * (sy / y.squaredNorm());
      const double rho = 1.0 / sy;
      const M I = M::Identity();
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    if (improvement <= 1e-13 * std::max(1.0, std::abs(fx))) break;
  }
  Theta out;
  for (int i = 0; i < 5; ++i) out[static_cast<std::size_t>(i)] = x(i);
  return out;
}

// Smoothed per-player logits of first- and second-shot accuracy.
std::vector<Vec2> player_features(const TripTable& trips) {
  std::vector<Vec2> out;
  for (const auto& p : trips.players()) {
    double h1 = 0, n1 = 0, h2 = 0, n2 = 0;
    for (const auto& t : p.trips) {
      n1 += 1;
      h1 += t.outcomes[0] ? 1 : 0;
      if (t.shots() >= 2) {
        n2 += 1;
        h2 += t.outcomes[1] ? 1 : 0;
      }
    }
    out.emplace_back(logit((h1 + 0.5) / (n1 + 1)), logit((h2 + 0.5) / (n2 + 1)));
  }
  return out;
}

// Seeded k-means++ followed by Lloyd iterations; returns (centroid, size).
std::vector<std::pair<Vec2, std::size_t>> kmeans(const std::vector<Vec2>& x, std::size_t k,
                                                 std::uint64_t seed) {
  const std::size_t n = x.size();
  std::mt19937_64 rng(seed);
  std::vector<Vec2> centers;
  centers.push_back(x[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> d2(n);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, (x[i] - c).squaredNorm());
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < n; ++pick) {
        if (u < d2[pick]) break;
        u -= d2[pick];
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    centers.push_back(x[pick]);
  }

  std::vector<std::size_t> assign(n, k);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c)
        if ((x[i] - centers[c]).squaredNorm() < (x[i] - centers[best]).squaredNorm()) best = c;
      if (best != assign[i]) {
        assign[i] = best;
        changed = true;
      }
    }
    std::vector<std::size_t> size(k, 0);
    for (auto a : assign) ++size[a];
    // Empty clusters take the point farthest from its own center.
    for (std::size_t c = 0; c < k; ++c) {
      if (size[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (size[assign[i]] <= 1) continue;
        const double d = (x[i] - centers[assign[i]]).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --size[assign[far]];
      assign[far] = c;
      ++size[c];
      changed = true;
    }
    for (std::size_t c = 0; c < k; ++c) {
      Vec2 s = Vec2::Zero();
      for (std::size_t i = 0; i < n; ++i)
        if (assign[i] == c) s += x[i];
      centers[c] = s / static_cast<double>(size[c]);
    }
    if (!changed) break;
  }
  std::vector<std::pair<Vec2, std::size_t>> out;
  std::vector<std::size_t> size(k, 0);
  for (auto a : assign) ++size[a];
  for (std::size_t c = 0; c < k; ++c) out.emplace_back(centers[c], size[c]);
  return out;
}

Mixture initial_mixture(const TripTable& trips, std::size_t m, std::uint64_t seed) {
  const auto features = player_features(trips);
  Mixture mix;
  for (const auto& [center, size] : kmeans(features, m, seed)) {
    MixtureComponent c;
    c.weight = static_cast<double>(size) / static_cast<double>(features.size());
    c.profile.mu = center;
    c.profile.sigma = 0.25 * Mat2::Identity();
    mix.components.push_back(c);
  }
  return mix;
}

struct EStep {
  double log_likelihood = 0.0;
  std::vector<double> resp;  // players x components, row-major
};

EStep e_step(const std::vector<PatternCounts>& counts, const Mixture& mix,
             const QuadratureRule& rule, unsigned threads) {
  const std::size_t m = mix.size();
  std::vector<PatternProbabilities> probs(m);
  parallel_for(m, threads,
               [&](std::size_t c) { probs[c] = pattern_probabilities(mix.components[c].profile, rule); });
  EStep out;
  out.resp.assign(counts.size() * m, 0.0);
  std::vector<double> ll(counts.size());
  parallel_for(counts.size(), threads, [&](std::size_t i) {
    std::vector<double> lw(m);
    for (std::size_t c = 0; c < m; ++c) {
      const double w = mix.components[c].weight;
      lw[c] = w > 0.0 ? std::log(w) + pattern_log_likelihood(counts[i], probs[c]) : kNegInf;
    }
    const double lse = log_sum_exp(lw);
    ll[i] = lse;
    if (lse == kNegInf) return;
    for (std::size_t c = 0; c < m; ++c) out.resp[i * m + c] = std::exp(lw[c] - lse);
  });
  double total = 0.0;
  for (double v : ll) total += v;
  if (!std::isfinite(total))
    throw NumericalError("log-likelihood is not finite: some player has zero probability");
  out.log_likelihood = total;
  return out;
}

}  // namespace

double log_likelihood(const TripTable& trips, const Mixture& mixture, const QuadratureRule& rule) {
  mixture.validate();
  const auto counts = all_counts(trips);
  const std::size_t m = mixture.size();
  std::vector<PatternProbabilities> probs(m);
  for (std::size_t c = 0; c < m; ++c)
    probs[c] = pattern_probabilities(mixture.components[c].profile, rule);
  double total = 0.0;
  std::vector<double> lw(m);
  for (const auto& pc : counts) {
    for (std::size_t c = 0; c < m; ++c) {
      const double w = mixture.components[c].weight;
      lw[c] = w > 0.0 ? std::log(w) + pattern_log_likelihood(pc, probs[c]) : kNegInf;
    }
    total += log_sum_exp(lw);
  }
  return total;
}

EmResult em_fit(const TripTable& trips, const EmConfig& config) {
  config.validate();
  if (trips.player_count() == 0) throw DomainError("EM needs at least one player");
  std::size_t m = config.components;
  std::vector<std::string> warnings;
  if (m > trips.player_count()) {
    m = trips.player_count();
    warnings.push_back("requested " + std::to_string(config.components) +
                       " components but only " + std::to_string(m) + " players; using " +
                       std::to_string(m));
  }
  auto result = em_fit(trips, initial_mixture(trips, m, config.seed), config);
  warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());
  result.warnings = std::move(warnings);
  return result;
}

EmResult em_fit(const TripTable& trips, const Mixture& start, const EmConfig& config) {
  config.validate();
  start.validate();
  for (const auto& p : trips.players())
    if (p.trips.empty()) throw DomainError("player " + p.player_id + " has no trips");
  const QuadratureRule rule(config.quadrature_order);
  const auto counts = all_counts(trips);
  const std::size_t n = counts.size();
  if (n == 0) throw DomainError("EM needs at least one player");

  EmResult res;
  Mixture mix = start;
  EStep es = e_step(counts, mix, rule, config.threads);
  res.history.push_back(es.log_likelihood);

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    const std::size_t m = mix.size();
    std::vector<WeightedCounts> wc(m);
    std::vector<double> resp_total(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < m; ++c) {
        const double r = es.resp[i * m + c];
        resp_total[c] += r;
        for (std::size_t k = 0; k < kPatternCount; ++k)
          wc[c].w[k] += r * static_cast<double>(counts[i].n[k]);
      }
    for (std::size_t c = 0; c < m; ++c)
      mix.components[c].weight = resp_total[c] / static_cast<double>(n);

    parallel_for(m, config.threads, [&](std::size_t c) {
      auto& prof = mix.components[c].profile;
      if (mix.components[c].weight < kCollapseWeight) return;
      prof = to_profile(improve_component(from_profile(prof), wc[c], rule, config.inner_iterations));
    });

    std::vector<MixtureComponent> kept;
    for (std::size_t c = 0; c < m; ++c) {
      if (mix.components[c].weight < kCollapseWeight) {
        std::ostringstream msg;
        msg << "iteration " << iter << ": dropped component " << c << " (weight "
            << mix.components[c].weight << ")";
        res.warnings.push_back(msg.str());
      } else {
        kept.push_back(mix.components[c]);
      }
    }
    if (kept.size() != m) {
      double total = 0.0;
      for (const auto& c : kept) total += c.weight;
      for (auto& c : kept) c.weight /= total;
      mix.components = std::move(kept);
      res.drop_iterations.push_back(iter);
    }
    // Renormalize away round-off so the mixture always validates.
    double wsum = 0.0;
    for (const auto& c : mix.components) wsum += c.weight;
    for (auto& c : mix.components) c.weight /= wsum;

    const double prev = es.log_likelihood;
    es = e_step(counts, mix, rule, config.threads);
    res.history.push_back(es.log_likelihood);
    res.iterations = iter;
    if (es.log_likelihood - prev <= config.tolerance * std::abs(prev)) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged)
    res.warnings.push_back("EM did not converge in " + std::to_string(config.max_iterations) +
                           " iterations");
  res.mixture = std::move(mix);
  res.log_likelihood = es.log_likelihood;
  return res;
}

std::vector<SelectionRow> select_components(const TripTable& trips,
                                            const std::vector<std::size_t>& candidates,
                                            const EmConfig& config) {
  std::vector<SelectionRow> rows;
  const double log_n = std::log(static_cast<double>(std::max<std::size_t>(trips.player_count(), 1)));
  for (auto m : candidates) {
    EmConfig c = config;
    c.components = m;
    const auto fit = em_fit(trips, c);
    SelectionRow row;
    row.requested = m;
    row.fitted = fit.mixture.size();
    row.log_likelihood = fit.log_likelihood;
    row.bic = -2.0 * fit.log_likelihood + static_cast<double>(6 * row.fitted - 1) * log_n;
    row.converged = fit.converged;
    rows.push_back(row);
  }
  return rows;
}

PlayerPosterior player_posterior(const PlayerTrips& player, const Mixture& mixture,
                                 const QuadratureRule& rule) {
  mixture.validate();
  const auto counts = pattern_counts(player);
  const std::size_t m = mixture.size();
  std::vector<double> lw(m);
  for (std::size_t c = 0; c < m; ++c) {
    const double w = mixture.components[c].weight;
    lw[c] = w > 0.0 ? std::log(w) + pattern_log_likelihood(
                                        counts, pattern_probabilities(mixture.components[c].profile, rule))
                    : kNegInf;
  }
  const double lse = log_sum_exp(lw);
  if (lse == kNegInf)
    throw NumericalError("posterior for player " + player.player_id +
                         " cannot be normalized: data impossible under every component");
  PlayerPosterior post;
  for (double v : lw) post.weights.push_back(std::exp(v - lse));
  return post;
}

std::pair<double, double> conditional_posterior(const PlayerTrips& player, const Mixture& mixture,
                                                bool first_made, const QuadratureRule& rule) {
  const auto post = player_posterior(player, mixture, rule);
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t c = 0; c < mixture.size(); ++c) {
    if (post.weights[c] == 0.0) continue;
    const auto [a, b] = conditional_expectation(mixture.components[c].profile, rule, first_made);
    e1 += post.weights[c] * a;
    e2 += post.weights[c] * b;
  }
  return {e1, e2};
}

void PowerConfig::validate() const {
  null_profile.validate();
  if (!(z_threshold > 0.0)) throw DomainError("z threshold must be positive");
  if (!(target_power > 0.0 && target_power < 1.0))
    throw DomainError("target power must lie strictly between 0 and 1");
  if (replicates < 10000) throw DomainError("power needs at least 10000 replicates per trip count");
  if (max_trips < 2) throw DomainError("trip cap must be at least 2");
}

double conditional_test_power(double p1, double a, double b, std::int64_t n, double z_threshold,
                              int replicates, std::uint64_t seed) {
  if (n < 1) return 0.0;
  std::mt19937_64 rng(seed);
  std::int64_t rejections = 0;
  for (int r = 0; r < replicates; ++r) {
    const auto n_hit = std::binomial_distribution<std::int64_t>(n, p1)(rng);
    const auto n_miss = n - n_hit;
    const auto x_hit = std::binomial_distribution<std::int64_t>(n_hit, a)(rng);
    const auto x_miss = std::binomial_distribution<std::int64_t>(n_miss, b)(rng);
    if (n_hit == 0 || n_miss == 0) continue;
    const double p2 = static_cast<double>(x_hit + x_miss) / static_cast<double>(n);
    const double var = p2 * (1 - p2) *
                       (1.0 / static_cast<double>(n_miss) + 1.0 / static_cast<double>(n_hit));
    if (var <= 0.0) continue;
    const double cd = static_cast<double>(x_hit) / static_cast<double>(n_hit) -
                      static_cast<double>(x_miss) / static_cast<double>(n_miss);
    if (cd / std::sqrt(var) >= z_threshold) ++rejections;
  }
  return static_cast<double>(rejections) / static_cast<double>(replicates);
}

double power_trips_normal_approx(const PowerConfig& config) {
  config.validate();
  if (!(config.gap > 0.0)) throw DomainError("normal approximation needs a positive gap");
  const auto [p1, p2] = expected_probs(config.null_profile, QuadratureRule(config.quadrature_order));
  const double k = config.z_threshold + normal_quantile(config.target_power);
  return k * k * p2 * (1 - p2) / (p1 * (1 - p1) * config.gap * config.gap);
}

PowerResult power_trips(const PowerConfig& config) {
  config.validate();
  const QuadratureRule rule(config.quadrature_order);
  const auto [p1, p2] = expected_probs(config.null_profile, rule);
  // Keep the alternative's marginal second-shot rate at p2.
  const double b = p2 - p1 * config.gap;
  const double a = b + config.gap;
  if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0)
    throw DomainError("conditional gap is incompatible with the profile's shooting rates");

  auto power = [&](std::int64_t n) {
    return conditional_test_power(p1, a, b, n, config.z_threshold, config.replicates, config.seed);
  };
  std::int64_t lo = 0;
  std::int64_t hi = 8;
  double hi_power = power(hi);
  while (hi_power < config.target_power) {
    lo = hi;
    hi *= 2;
    if (hi > config.max_trips) {
      hi = config.max_trips;
      hi_power = power(hi);
      if (hi_power < config.target_power || lo >= hi)
        throw NumericalError("target power not reached within " +
                             std::to_string(config.max_trips) + " trips");
      break;
    }
    hi_power = power(hi);
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    const double pw = power(mid);
    if (pw >= config.target_power) {
      hi = mid;
      hi_power = pw;
    } else {
      lo = mid;
    }
  }
  return {hi, hi_power, a, b};
}

}  // namespace ftheat
