#include "ftheat/displacement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ftheat/error.hpp"
#include "ftheat/model1.hpp"
#include "ftheat/parallel.hpp"

namespace ftheat {

void DisplacementPrior::validate() const {
  if (!sigma_delta.allFinite()) throw DomainError("displacement prior has non-finite entries");
  if (std::abs(sigma_delta(0, 1) - sigma_delta(1, 0)) > 1e-12 * std::max(1.0, sigma_delta.norm()))
    throw DomainError("displacement prior must be symmetric");
  Eigen::LLT<Mat2> llt(sigma_delta);
  if (llt.info() != Eigen::Success || sigma_delta.determinant() <= 0.0)
    throw DomainError("displacement prior must be positive definite");
}

int bin_index(double elapsed_seconds) {
  if (!(elapsed_seconds >= 0.0)) throw DomainError("elapsed time must be non-negative");
  if (elapsed_seconds >= kRegulationSeconds) return kTimeBins;
  return 1 + static_cast<int>(std::floor(elapsed_seconds / 60.0));
}

double minute_midpoint(int bin) {
  if (bin < 1 || bin > kTimeBins) throw DomainError("bin must lie in 1..49");
  return bin == kTimeBins ? 50.5 : bin - 0.5;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct PlayerStrata {
  std::vector<std::pair<int, PatternCounts>> cells;  // (active stratum, counts)
};

// Per component and active stratum: log-probabilities and their first and
// second derivatives with respect to the displacement.
struct CellTerms {
  std::array<double, kPatternCount> logp{};
  std::array<Vec2, kPatternCount> dlogp;
  std::array<Mat2, kPatternCount> d2logp;
};

class MapProblem {
public:
  MapProblem(std::vector<PlayerStrata> players, int k, const Mixture& mixture, const Mat2& prior_cov,
             const QuadratureRule& rule, unsigned threads)
      : players_(std::move(players)),
        k_(k),
        mixture_(mixture),
        precision_(prior_cov.inverse()),
        rule_(rule),
        threads_(threads) {}

  int dim() const { return 2 * k_; }

  std::vector<CellTerms> terms(const Eigen::VectorXd& x, bool derivatives) const {
    const std::size_t m = mixture_.size();
    std::vector<CellTerms> out(m * static_cast<std::size_t>(k_));
    parallel_for(out.size(), threads_, [&](std::size_t idx) {
      const std::size_t c = idx / static_cast<std::size_t>(k_);
      const int s = static_cast<int>(idx % static_cast<std::size_t>(k_));
      Profile p = mixture_.components[c].profile;
      p.mu += x.segment<2>(2 * s);
      const GaussianGrid grid(p, rule_);
      auto& t = out[idx];
      if (!derivatives) {
        const auto probs = pattern_probabilities(grid);
        for (std::size_t q = 0; q < kPatternCount; ++q)
          t.logp[q] = probs[q] > 0.0 ? std::log(probs[q]) : kNegInf;
        return;
      }
      const auto d = pattern_derivatives(grid);
      for (std::size_t q = 0; q < kPatternCount; ++q) {
        const double pr = d.prob[q];
        if (!(pr > 0.0)) {
          t.logp[q] = kNegInf;
          t.dlogp[q].setZero();
          t.d2logp[q].setZero();
          continue;
        }
        t.logp[q] = std::log(pr);
        t.dlogp[q] = d.grad[q] / pr;
        t.d2logp[q] = d.hess[q] / pr - t.dlogp[q] * t.dlogp[q].transpose();
      }
    });
    return out;
  }

  double data_log_likelihood(const std::vector<CellTerms>& terms) const {
    std::vector<double> ll(players_.size());
    parallel_for(players_.size(), threads_, [&](std::size_t i) {
      std::vector<double> lw = component_logs(players_[i], terms);
      ll[i] = log_sum_exp(lw);
    });
    double s = 0.0;
    for (double v : ll) s += v;
    return s;
  }

  double prior_term(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (int j = 0; j < k_; ++j) {
      const Vec2 d = x.segment<2>(2 * j);
      s -= 0.5 * d.dot(precision_ * d);
    }
    return s;
  }

  double objective(const Eigen::VectorXd& x) const {
    return data_log_likelihood(terms(x, false)) + prior_term(x);
  }

  // Gradient and Hessian of the full objective. Players are accumulated in
  // fixed blocks and the blocks summed in order, so the result does not
  // depend on the number of threads.
  void derivatives(const Eigen::VectorXd& x, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    const auto t = terms(x, true);
    const int n = dim();
    const std::size_t blocks = std::min<std::size_t>(players_.size(), 32);
    std::vector<Eigen::VectorXd> gb(blocks, Eigen::VectorXd::Zero(n));
    std::vector<Eigen::MatrixXd> hb(blocks, Eigen::MatrixXd::Zero(n, n));
    const std::size_t per = (players_.size() + blocks - 1) / std::max<std::size_t>(blocks, 1);
    parallel_for(blocks, threads_, [&](std::size_t b) {
      const std::size_t end = std::min(players_.size(), (b + 1) * per);
      for (std::size_t i = b * per; i < end; ++i) accumulate(players_[i], t, gb[b], hb[b]);
    });
    grad = Eigen::VectorXd::Zero(n);
    hess = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t b = 0; b < blocks; ++b) {
      grad += gb[b];
      hess += hb[b];
    }
    for (int j = 0; j < k_; ++j) {
      grad.segment<2>(2 * j) -= precision_ * x.segment<2>(2 * j);
      hess.block<2, 2>(2 * j, 2 * j) -= precision_;
    }
  }

private:
  static double log_sum_exp(const std::vector<double>& v) {
    double top = kNegInf;
    for (double x : v) top = std::max(top, x);
    if (top == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : v) s += std::exp(x - top);
    return top + std::log(s);
  }

  std::vector<double> component_logs(const PlayerStrata& p, const std::vector<CellTerms>& t) const {
    const std::size_t m = mixture_.size();
    std::vector<double> lw(m);
    for (std::size_t c = 0; c < m; ++c) {
      const double w = mixture_.components[c].weight;
      if (!(w > 0.0)) {
        lw[c] = kNegInf;
        continue;
      }
      double s = std::log(w);
      for (const auto& [cell, counts] : p.cells) {
        const auto& ct = t[c * static_cast<std::size_t>(k_) + static_cast<std::size_t>(cell)];
        for (std::size_t q = 0; q < kPatternCount; ++q)
          if (counts.n[q] > 0) s += static_cast<double>(counts.n[q]) * ct.logp[q];
      }
      lw[c] = s;
    }
    return lw;
  }

  void accumulate(const PlayerStrata& p, const std::vector<CellTerms>& t, Eigen::VectorXd& grad,
                  Eigen::MatrixXd& hess) const {
    const std::size_t m = mixture_.size();
    const auto lw = component_logs(p, t);
    const double lse = log_sum_exp(lw);
    if (lse == kNegInf) return;
    const int local = 2 * static_cast<int>(p.cells.size());
    Eigen::VectorXd gbar = Eigen::VectorXd::Zero(local);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(local, local);
    Eigen::VectorXd g(local);
    for (std::size_t c = 0; c < m; ++c) {
      const double r = std::exp(lw[c] - lse);
      if (r == 0.0) continue;
      g.setZero();
      for (std::size_t j = 0; j < p.cells.size(); ++j) {
        const auto& [cell, counts] = p.cells[j];
        const auto& ct = t[c * static_cast<std::size_t>(k_) + static_cast<std::size_t>(cell)];
        Mat2 hc = Mat2::Zero();
        for (std::size_t q = 0; q < kPatternCount; ++q) {
          if (counts.n[q] == 0) continue;
          const double cnt = static_cast<double>(counts.n[q]);
          g.segment<2>(2 * static_cast<int>(j)) += cnt * ct.dlogp[q];
          hc += cnt * ct.d2logp[q];
        }
        h.block<2, 2>(2 * static_cast<int>(j), 2 * static_cast<int>(j)) += r * hc;
      }
      gbar += r * g;
      h += r * g * g.transpose();
    }
    h -= gbar * gbar.transpose();
    for (std::size_t a = 0; a < p.cells.size(); ++a) {
      const int ga = 2 * p.cells[a].first;
      grad.segment<2>(ga) += gbar.segment<2>(2 * static_cast<int>(a));
      for (std::size_t b = 0; b < p.cells.size(); ++b) {
        const int gb = 2 * p.cells[b].first;
        hess.block<2, 2>(ga, gb) +=
            h.block<2, 2>(2 * static_cast<int>(a), 2 * static_cast<int>(b));
      }
    }
  }

  std::vector<PlayerStrata> players_;
  int k_;
  const Mixture& mixture_;
  Mat2 precision_;
  const QuadratureRule& rule_;
  unsigned threads_;
};

}  // namespace

DisplacementMap displacement_map(const TripTable& trips,
                                 const std::vector<std::vector<int>>& strata, int n_strata,
                                 const Mixture& mixture, const Mat2& prior_cov,
                                 const QuadratureRule& rule, unsigned threads,
                                 const std::vector<Vec2>* start) {
  mixture.validate();
  DisplacementPrior{prior_cov}.validate();
  if (strata.size() != trips.player_count())
    throw DomainError("stratum assignment does not match the trip table");

  DisplacementMap out;
  out.delta.assign(static_cast<std::size_t>(n_strata), Vec2::Zero());
  out.cov.assign(static_cast<std::size_t>(n_strata), prior_cov);
  out.n_trips.assign(static_cast<std::size_t>(n_strata), 0);

  for (std::size_t i = 0; i < strata.size(); ++i) {
    if (strata[i].size() != trips.players()[i].trips.size())
      throw DomainError("stratum assignment does not match the trip table");
    for (int s : strata[i]) {
      if (s < -1 || s >= n_strata) throw DomainError("stratum index out of range");
      if (s >= 0) ++out.n_trips[static_cast<std::size_t>(s)];
    }
  }
  std::vector<int> active_of(static_cast<std::size_t>(n_strata), -1);
  std::vector<int> stratum_of;
  for (int s = 0; s < n_strata; ++s)
    if (out.n_trips[static_cast<std::size_t>(s)] > 0) {
      active_of[static_cast<std::size_t>(s)] = static_cast<int>(stratum_of.size());
      stratum_of.push_back(s);
    }
  const int k = static_cast<int>(stratum_of.size());

  std::vector<PlayerStrata> players(trips.player_count());
  for (std::size_t i = 0; i < strata.size(); ++i) {
    std::vector<PatternCounts> per(static_cast<std::size_t>(k));
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    const auto& tr = trips.players()[i].trips;
    for (std::size_t j = 0; j < tr.size(); ++j) {
      const int s = strata[i][j];
      if (s < 0) continue;
      const auto a = static_cast<std::size_t>(active_of[static_cast<std::size_t>(s)]);
      per[a][pattern_of(tr[j].outcomes)] += 1;
      seen[a] = true;
    }
    for (int a = 0; a < k; ++a)
      if (seen[static_cast<std::size_t>(a)])
        players[i].cells.emplace_back(a, per[static_cast<std::size_t>(a)]);
  }

  const MapProblem problem(std::move(players), k, mixture, prior_cov, rule, threads);
  if (k == 0) {
    out.log_likelihood = 0.0;
    return out;
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(problem.dim());
  if (start) {
    for (int a = 0; a < k; ++a)
      x.segment<2>(2 * a) = (*start)[static_cast<std::size_t>(stratum_of[static_cast<std::size_t>(a)])];
  }
  double fx = problem.objective(x);
  if (!std::isfinite(fx) && start) {
    x.setZero();
    fx = problem.objective(x);
  }
  if (!std::isfinite(fx)) throw NumericalError("displacement objective is not finite");

  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  int iter = 0;
  for (; iter < 100; ++iter) {
    problem.derivatives(x, grad, hess);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-10) break;
    Eigen::MatrixXd a = -hess;
    Eigen::VectorXd step;
    double lambda = 0.0;
    const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::MatrixXd shifted = a;
      shifted.diagonal().array() += lambda;
      Eigen::LLT<Eigen::MatrixXd> llt(shifted);
      if (llt.info() == Eigen::Success) {
        step = llt.solve(grad);
        if (step.allFinite()) break;
      }
      step.resize(0);
      lambda = lambda == 0.0 ? 1e-8 * scale : lambda * 10.0;
    }
    if (step.size() == 0) throw NumericalError("displacement Newton system is singular");
    double t = 1.0;
    bool accepted = false;
    double f_new = fx;
    Eigen::VectorXd x_new;
    for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
      x_new = x + t * step;
      f_new = problem.objective(x_new);
      if (std::isfinite(f_new) && f_new >= fx) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const double gain = f_new - fx;
    const double moved = (t * step).lpNorm<Eigen::Infinity>();
    x = x_new;
    fx = f_new;
    if (gain <= 1e-14 * std::max(1.0, std::abs(fx)) && moved < 1e-9) break;
  }
  problem.derivatives(x, grad, hess);
  Eigen::LLT<Eigen::MatrixXd> llt(-hess);
  if (llt.info() != Eigen::Success)
    throw NumericalError("displacement posterior curvature is not negative definite");
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(problem.dim(), problem.dim()));

  for (int a = 0; a < k; ++a) {
    const auto s = static_cast<std::size_t>(stratum_of[static_cast<std::size_t>(a)]);
    out.delta[s] = x.segment<2>(2 * a);
    Mat2 c = cov.block<2, 2>(2 * a, 2 * a);
    out.cov[s] = 0.5 * (c + c.transpose());
  }
  out.log_likelihood = fx - problem.prior_term(x);
  out.iterations = iter;
  return out;
}

Model2Result fit_model2(const TripTable& trips, const Mixture& mixture, const Model2Config& config) {
  if (config.h_max < 1) throw DomainError("h_max must be at least 1");
  if (config.max_iterations < 1) throw DomainError("Model 2 needs at least one iteration");
  if (!(config.tolerance > 0.0)) throw DomainError("Model 2 tolerance must be positive");
  DisplacementPrior{config.initial_sigma}.validate();
  const QuadratureRule rule(config.quadrature_order);

  std::vector<std::vector<int>> strata;
  for (const auto& p : trips.players()) {
    std::vector<int> s;
    for (const auto& t : p.trips) s.push_back(std::min(t.intra_game_index, config.h_max) - 1);
    strata.push_back(std::move(s));
  }

  Model2Result res;
  Mat2 sigma = config.initial_sigma;
  DisplacementMap map = displacement_map(trips, strata, config.h_max, mixture, sigma, rule,
                                         config.threads);
  std::size_t non_empty = 0;
  for (auto n : map.n_trips) non_empty += n > 0 ? 1 : 0;

  if (non_empty < 2) {
    res.warnings.push_back("fewer than two trip-index strata have data; the displacement prior "
                           "is not identifiable and was left at its initial value");
  } else {
    for (int iter = 1; iter <= config.max_iterations; ++iter) {
      Mat2 next = Mat2::Zero();
      for (std::size_t s = 0; s < map.delta.size(); ++s) {
        if (map.n_trips[s] == 0) continue;
        next += map.delta[s] * map.delta[s].transpose() + map.cov[s];
      }
      next /= static_cast<double>(non_empty);
      next = 0.5 * (next + next.transpose());
      const double change = (next - sigma).norm() / std::max(sigma.norm(), 1e-300);
      sigma = next;
      map = displacement_map(trips, strata, config.h_max, mixture, sigma, rule, config.threads,
                             &map.delta);
      res.iterations = iter;
      if (change < config.tolerance) {
        res.converged = true;
        break;
      }
    }
    if (!res.converged)
      res.warnings.push_back("displacement prior did not converge in " +
                             std::to_string(config.max_iterations) + " iterations");
  }

  res.prior.sigma_delta = sigma;
  res.log_likelihood = map.log_likelihood;
  for (int h = 1; h <= config.h_max; ++h) {
    const auto s = static_cast<std::size_t>(h - 1);
    DisplacementEstimate e;
    e.h = h;
    e.n_trips = map.n_trips[s];
    e.present = e.n_trips > 0;
    e.delta = map.delta[s];
    e.cov = map.cov[s];
    if (!e.present) res.warnings.push_back("no trips with h = " + std::to_string(h));
    res.estimates.push_back(e);
  }
  return res;
}

double displacement_diff_stat(const std::vector<DisplacementEstimate>& estimates, int h_a,
                              int h_b) {
  auto find = [&](int h) -> const DisplacementEstimate& {
    for (const auto& e : estimates)
      if (e.h == h && e.bin == 0) {
        if (!e.present) throw DomainError("no estimate for h = " + std::to_string(h));
        return e;
      }
    throw DomainError("no estimate for h = " + std::to_string(h));
  };
  const auto& a = find(h_a);
  const auto& b = find(h_b);
  return mahalanobis(b.delta - a.delta, a.cov + b.cov);
}

std::vector<DisplacementEstimate> fit_model3(const TripTable& trips, const Mixture& mixture,
                                             const DisplacementPrior& prior,
                                             const Model3Config& config) {
  prior.validate();
  const QuadratureRule rule(config.quadrature_order);
  std::vector<std::vector<int>> strata;
  for (const auto& p : trips.players()) {
    std::vector<int> s;
    for (const auto& t : p.trips) {
      const int h = std::min(t.intra_game_index, 2);
      s.push_back((h - 1) * kTimeBins + bin_index(t.elapsed_seconds) - 1);
    }
    strata.push_back(std::move(s));
  }
  const auto map = displacement_map(trips, strata, 2 * kTimeBins, mixture, prior.sigma_delta,
                                    rule, config.threads);
  std::vector<DisplacementEstimate> out;
  for (int h = 1; h <= 2; ++h)
    for (int b = 1; b <= kTimeBins; ++b) {
      const auto s = static_cast<std::size_t>((h - 1) * kTimeBins + b - 1);
      DisplacementEstimate e;
      e.h = h;
      e.bin = b;
      e.n_trips = map.n_trips[s];
      e.present = e.n_trips > 0;
      e.delta = map.delta[s];
      e.cov = map.cov[s];
      out.push_back(e);
    }
  return out;
}

}  // namespace ftheat
