#include "ftheat/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ftheat/error.hpp"

namespace ftheat {

void Profile::validate() const {
  if (!mu.allFinite() || !sigma.allFinite())
    throw DomainError("profile parameters must be finite");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if (std::abs(sigma(0, 1) - sigma(1, 0)) > 1e-12 * scale)
    throw DomainError("profile covariance must be symmetric");
  const Eigen::SelfAdjointEigenSolver<Mat2> eig(sigma);
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale)
    throw DomainError("profile covariance must be positive semidefinite");
}

QuadratureRule::QuadratureRule(int order) {
  if (order < 1) throw DomainError("quadrature order must be >= 1");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
  // polynomials: zero diagonal, off-diagonal sqrt(k).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  const auto n = static_cast<std::size_t>(order);
  nodes_.resize(n);
  weights_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes_[i] = eig.eigenvalues()(static_cast<Eigen::Index>(i));
    const double v = eig.eigenvectors()(0, static_cast<Eigen::Index>(i));
    weights_[i] = v * v;
  }
  // Enforce the exact symmetry of the rule.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const std::size_t j = n - 1 - i;
    const double x = 0.5 * (nodes_[j] - nodes_[i]);
    const double w = 0.5 * (weights_[i] + weights_[j]);
    nodes_[i] = -x;
    nodes_[j] = x;
    weights_[i] = weights_[j] = w;
  }
  if (n % 2 == 1) nodes_[n / 2] = 0.0;
  double total = 0.0;
  for (const double w : weights_) total += w;
  for (double& w : weights_) w /= total;
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_logistic(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("logit requires 0 < p < 1");
  return std::log(p / (1.0 - p));
}

Pattern pattern_of(const std::vector<bool>& outcomes) {
  if (outcomes.empty()) throw DomainError("a trip needs at least one outcome");
  if (outcomes.size() == 1) return outcomes[0] ? Pattern::Hit : Pattern::Miss;
  if (outcomes[0]) return outcomes[1] ? Pattern::HitHit : Pattern::HitMiss;
  return outcomes[1] ? Pattern::MissHit : Pattern::MissMiss;
}

bool pattern_first(Pattern p) {
  return p == Pattern::Hit || p == Pattern::HitHit || p == Pattern::HitMiss;
}

bool pattern_is_pair(Pattern p) { return p != Pattern::Hit && p != Pattern::Miss; }

GaussianGrid::GaussianGrid(const Profile& profile, const QuadratureRule& rule) {
  profile.validate();
  const auto& u = rule.nodes();
  const auto& w = rule.weights();
  const Vec2& mu = profile.mu;
  const Mat2& s = profile.sigma;

  // Columns of a square root L with L L' = sigma, restricted to the
  // directions that carry variance.
  std::vector<Vec2> directions;
  if (s(0, 1) == 0.0 && s(1, 0) == 0.0) {
    if (s(0, 0) > 0.0) directions.emplace_back(std::sqrt(s(0, 0)), 0.0);
    if (s(1, 1) > 0.0) directions.emplace_back(0.0, std::sqrt(s(1, 1)));
  } else {
    const Eigen::SelfAdjointEigenSolver<Mat2> eig(s);
    const double top = std::max(eig.eigenvalues().maxCoeff(), 0.0);
    for (int k = 1; k >= 0; --k) {
      const double lambda = eig.eigenvalues()(k);
      if (lambda > 1e-14 * std::max(top, 1.0))
        directions.push_back(eig.eigenvectors().col(k) * std::sqrt(lambda));
    }
  }
  rank_ = static_cast<int>(directions.size());

  if (rank_ == 0) {
    points_.push_back(mu);
    weights_.push_back(1.0);
  } else if (rank_ == 1) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      points_.push_back(mu + u[i] * directions[0]);
      weights_.push_back(w[i]);
    }
  } else {
    points_.reserve(u.size() * u.size());
    weights_.reserve(u.size() * u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < u.size(); ++j) {
        points_.push_back(mu + u[i] * directions[0] + u[j] * directions[1]);
        weights_.push_back(w[i] * w[j]);
      }
  }

  const double sd1 = std::sqrt(std::max(s(0, 0), 0.0));
  if (sd1 > 0.0) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      first_points_.push_back(mu(0) + sd1 * u[i]);
      first_weights_.push_back(w[i]);
    }
  } else {
    first_points_.push_back(mu(0));
    first_weights_.push_back(1.0);
  }
}

double trip_likelihood(const std::vector<bool>& outcomes, const Profile& profile,
                       const QuadratureRule& rule) {
  const GaussianGrid grid(profile, rule);
  return pattern_probabilities(grid)[static_cast<std::size_t>(pattern_of(outcomes))];
}

PatternProbabilities pattern_probabilities(const Profile& profile, const QuadratureRule& rule) {
  return pattern_probabilities(GaussianGrid(profile, rule));
}

PatternProbabilities pattern_probabilities(const GaussianGrid& grid) {
  PatternProbabilities p{};
  const auto& xs = grid.first_points();
  const auto& ws = grid.first_weights();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = logistic(xs[i]);
    p[static_cast<std::size_t>(Pattern::Hit)] += ws[i] * f;
    p[static_cast<std::size_t>(Pattern::Miss)] += ws[i] * logistic(-xs[i]);
  }
  const auto& pts = grid.points();
  const auto& w = grid.weights();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double f1 = logistic(pts[i](0)), g1 = logistic(-pts[i](0));
    const double f2 = logistic(pts[i](1)), g2 = logistic(-pts[i](1));
    p[static_cast<std::size_t>(Pattern::HitHit)] += w[i] * f1 * f2;
    p[static_cast<std::size_t>(Pattern::HitMiss)] += w[i] * f1 * g2;
    p[static_cast<std::size_t>(Pattern::MissHit)] += w[i] * g1 * f2;
    p[static_cast<std::size_t>(Pattern::MissMiss)] += w[i] * g1 * g2;
  }
  return p;
}

PatternDerivatives pattern_derivatives(const GaussianGrid& grid) {
  PatternDerivatives out;
  for (std::size_t k = 0; k < kPatternCount; ++k) {
    out.grad[k].setZero();
    out.hess[k].setZero();
  }
  // For s = f(x) (hit) or 1 - f(x) (miss): d log s / dx = a, d a / dx = -f(1 - f).
  const auto& xs = grid.first_points();
  const auto& ws = grid.first_weights();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = logistic(xs[i]), g = logistic(-xs[i]);
    const double curv = -f * g;
    for (const bool made : {true, false}) {
      const auto k = static_cast<std::size_t>(made ? Pattern::Hit : Pattern::Miss);
      const double s = made ? f : g;
      const double a = made ? g : -f;
      const double ws_s = ws[i] * s;
      out.prob[k] += ws_s;
      out.grad[k](0) += ws_s * a;
      out.hess[k](0, 0) += ws_s * (a * a + curv);
    }
  }
  const auto& pts = grid.points();
  const auto& w = grid.weights();
  constexpr std::array<Pattern, 4> pairs = {Pattern::HitHit, Pattern::HitMiss, Pattern::MissHit,
                                            Pattern::MissMiss};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double f1 = logistic(pts[i](0)), g1 = logistic(-pts[i](0));
    const double f2 = logistic(pts[i](1)), g2 = logistic(-pts[i](1));
    const double c1 = -f1 * g1, c2 = -f2 * g2;
    for (const Pattern pat : pairs) {
      const bool y1 = pat == Pattern::HitHit || pat == Pattern::HitMiss;
      const bool y2 = pat == Pattern::HitHit || pat == Pattern::MissHit;
      const double s = (y1 ? f1 : g1) * (y2 ? f2 : g2);
      const double a1 = y1 ? g1 : -f1;
      const double a2 = y2 ? g2 : -f2;
      const double ws_s = w[i] * s;
      const auto k = static_cast<std::size_t>(pat);
      out.prob[k] += ws_s;
      out.grad[k](0) += ws_s * a1;
      out.grad[k](1) += ws_s * a2;
      out.hess[k](0, 0) += ws_s * (a1 * a1 + c1);
      out.hess[k](1, 1) += ws_s * (a2 * a2 + c2);
      out.hess[k](0, 1) += ws_s * a1 * a2;
    }
  }
  for (auto& h : out.hess) h(1, 0) = h(0, 1);
  return out;
}

std::pair<double, double> expected_probs(const Profile& profile, const QuadratureRule& rule) {
  profile.validate();
  auto marginal = [&](double m, double var) {
    if (var <= 0.0) return logistic(m);
    const double sd = std::sqrt(var);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes().size(); ++i)
      s += rule.weights()[i] * logistic(m + sd * rule.nodes()[i]);
    return s;
  };
  return {marginal(profile.mu(0), profile.sigma(0, 0)),
          marginal(profile.mu(1), profile.sigma(1, 1))};
}

ProfileMoments profile_moments(const Profile& profile, const QuadratureRule& rule) {
  const GaussianGrid grid(profile, rule);
  ProfileMoments m;
  const auto& pts = grid.points();
  const auto& w = grid.weights();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double f1 = logistic(pts[i](0));
    const double f2 = logistic(pts[i](1));
    m.p1 += w[i] * f1;
    m.p2 += w[i] * f2;
    m.p12 += w[i] * f1 * f2;
  }
  return m;
}

std::pair<double, double> conditional_expectation(const Profile& profile,
                                                  const QuadratureRule& rule, bool first_made) {
  const GaussianGrid grid(profile, rule);
  double den = 0.0, num1 = 0.0, num2 = 0.0;
  const auto& pts = grid.points();
  const auto& w = grid.weights();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double f1 = logistic(pts[i](0));
    const double f2 = logistic(pts[i](1));
    const double like = first_made ? f1 : logistic(-pts[i](0));
    den += w[i] * like;
    num1 += w[i] * like * f1;
    num2 += w[i] * like * f2;
  }
  if (!(den > 0.0)) throw NumericalError("first-shot outcome has zero probability under profile");
  return {num1 / den, num2 / den};
}

double mahalanobis_squared(const Eigen::VectorXd& w, const Eigen::MatrixXd& cov) {
  if (cov.rows() != w.size() || cov.cols() != w.size())
    throw DomainError("mahalanobis: dimension mismatch");
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("mahalanobis: covariance is not positive definite");
  const Eigen::VectorXd half = llt.matrixL().solve(w);
  return half.squaredNorm();
}

double mahalanobis(const Eigen::VectorXd& w, const Eigen::MatrixXd& cov) {
  return std::sqrt(mahalanobis_squared(w, cov));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs 0 < p < 1");
  // Rational starting point (Acklam), polished by Newton steps on erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p > 1 - 0.02425) {
    const double q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  }
  for (int i = 0; i < 2; ++i) {
    const double e = normal_cdf(x) - p;
    x -= e * std::sqrt(2 * std::numbers::pi) * std::exp(0.5 * x * x);
  }
  return x;
}

double chi_square2_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
  return -2.0 * std::log1p(-level);
}

double chi_square2_survival(double x) { return x <= 0.0 ? 1.0 : std::exp(-0.5 * x); }

std::vector<Vec2> confidence_region(const Profile& profile, double level, std::size_t points) {
  profile.validate();
  if (points == 0) throw DomainError("confidence_region needs at least one vertex");
  const double radius = std::sqrt(chi_square2_quantile(level));
  const Eigen::SelfAdjointEigenSolver<Mat2> eig(profile.sigma);
  Mat2 root = Mat2::Zero();
  for (int k = 0; k < 2; ++k)
    root.col(k) = eig.eigenvectors().col(k) * std::sqrt(std::max(eig.eigenvalues()(k), 0.0));
  auto to_prob = [](const Vec2& x) { return Vec2(logistic(x(0)), logistic(x(1))); };
  if (root.isZero(0.0)) return {to_prob(profile.mu)};

  std::vector<Vec2> out;
  out.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(points);
    const Vec2 x = profile.mu + radius * (root * Vec2(std::cos(theta), std::sin(theta)));
    out.push_back(to_prob(x));
  }
  return out;
}

}  // namespace ftheat
