#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ftheat {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Bivariate normal over (1st shot, 2nd shot) log-odds for one player type.
/// sigma may be singular: a point mass or a line mass are valid profiles.
struct Profile {
  Vec2 mu = Vec2::Zero();
  Mat2 sigma = Mat2::Zero();

  /// Throws DomainError for non-finite entries, asymmetry or a negative
  /// eigenvalue beyond round-off.
  void validate() const;
};

/// Gauss-Hermite rule for expectations against a standard normal; the 2-D
/// rule is the tensor product. Weights are normalized to sum to 1.
class QuadratureRule {
public:
  static constexpr int kDefaultOrder = 24;

  explicit QuadratureRule(int order = kDefaultOrder);

  int order() const { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Numerically stable e^x / (e^x + 1).
double logistic(double x);
/// log(logistic(x)) without overflow.
double log_logistic(double x);
double logit(double p);

/// Outcome patterns that enter the likelihood: one-shot trips contribute
/// their single outcome, longer trips only their first two shots.
enum class Pattern : std::size_t { Hit = 0, Miss, HitHit, HitMiss, MissHit, MissMiss };
inline constexpr std::size_t kPatternCount = 6;

Pattern pattern_of(const std::vector<bool>& outcomes);
bool pattern_first(Pattern p);
bool pattern_is_pair(Pattern p);

/// Quadrature nodes of N(mu, sigma) after whitening x = mu + L u, with
/// zero-variance directions dropped (rank 0 -> one node, rank 1 -> a line).
class GaussianGrid {
public:
  GaussianGrid(const Profile& profile, const QuadratureRule& rule);

  int rank() const { return rank_; }
  const std::vector<Vec2>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  /// 1-D rule for the first coordinate's marginal N(mu_1, sigma_11).
  const std::vector<double>& first_points() const { return first_points_; }
  const std::vector<double>& first_weights() const { return first_weights_; }

  template <class F>
  double expect(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) s += weights_[i] * f(points_[i]);
    return s;
  }

private:
  int rank_ = 0;
  std::vector<Vec2> points_;
  std::vector<double> weights_;
  std::vector<double> first_points_;
  std::vector<double> first_weights_;
};

/// Probability of a trip's outcomes with the latent log-odds integrated out.
/// Only shots 1 and 2 enter; one-shot trips integrate the first marginal.
double trip_likelihood(const std::vector<bool>& outcomes, const Profile& profile,
                       const QuadratureRule& rule);

using PatternProbabilities = std::array<double, kPatternCount>;

/// Probabilities of all six patterns from one pass over the grid.
PatternProbabilities pattern_probabilities(const Profile& profile, const QuadratureRule& rule);
PatternProbabilities pattern_probabilities(const GaussianGrid& grid);

/// Pattern probabilities with gradient and Hessian with respect to a shift
/// of the profile mean (used by the displacement models).
struct PatternDerivatives {
  PatternProbabilities prob{};
  std::array<Vec2, kPatternCount> grad;
  std::array<Mat2, kPatternCount> hess;
};
PatternDerivatives pattern_derivatives(const GaussianGrid& grid);

/// (E[f(X1)], E[f(X2)]).
std::pair<double, double> expected_probs(const Profile& profile, const QuadratureRule& rule);

/// Within-profile moments of P = f(X).
struct ProfileMoments {
  double p1 = 0.0;   // E[P1]
  double p2 = 0.0;   // E[P2]
  double p12 = 0.0;  // E[P1 P2]
  double cov() const { return p12 - p1 * p2; }
};
ProfileMoments profile_moments(const Profile& profile, const QuadratureRule& rule);

/// (E[P1 | Y1 = y1], E[P2 | Y1 = y1]) for a fresh trip under one profile.
std::pair<double, double> conditional_expectation(const Profile& profile,
                                                  const QuadratureRule& rule, bool first_made);

/// sqrt(w' cov^-1 w). Throws NumericalError when cov is not positive definite.
double mahalanobis(const Eigen::VectorXd& w, const Eigen::MatrixXd& cov);
/// w' cov^-1 w.
double mahalanobis_squared(const Eigen::VectorXd& w, const Eigen::MatrixXd& cov);

/// Standard normal distribution function and its inverse.
double normal_cdf(double x);
double normal_quantile(double p);

/// Quantile of the chi-square distribution with 2 degrees of freedom.
double chi_square2_quantile(double level);
/// Upper tail probability of chi-square with 2 degrees of freedom.
double chi_square2_survival(double x);

/// Boundary of the logit-space ellipse (x-mu)' sigma^-1 (x-mu) = q, q the
/// chi-square(2) quantile at `level`, mapped to probability space. Vertices
/// form a closed polyline; a singular sigma yields a segment (points fold
/// back along it) and a zero sigma a single point.
std::vector<Vec2> confidence_region(const Profile& profile, double level, std::size_t points);

}  // namespace ftheat
