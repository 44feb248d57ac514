#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ftheat/displacement.hpp"

namespace ftheat {

/// Random-walk process noise: a fixed matrix, or q * I with q picked per
/// series by maximizing the innovation log-likelihood over a grid.
struct ProcessNoise {
  std::optional<Mat2> fixed;  // empty means automatic

  static ProcessNoise automatic() { return {}; }
  static ProcessNoise of(const Mat2& q) { return {q}; }
  /// "auto", a scalar q (q * I), or "q11,q12,q22".
  static ProcessNoise parse(const std::string& text);
};

/// Candidate scale factors for automatic process noise: 0 and 10^(k/4) for
/// k = -32..4.
std::vector<double> process_noise_grid();

struct SmoothedPoint {
  int h = 1;
  int bin = 1;
  Vec2 delta = Vec2::Zero();
  Mat2 cov = Mat2::Zero();
};

struct SmoothedChannel {
  int h = 1;
  Mat2 process_noise = Mat2::Zero();
  double innovation_log_likelihood = 0.0;
  std::vector<SmoothedPoint> points;  // bins 1..49
  std::vector<Mat2> gains;            // smoother gains J_b for b = 1..48
};

struct SmoothedSeries {
  std::vector<SmoothedChannel> channels;  // ordered by h

  const SmoothedChannel& channel(int h) const;
  const SmoothedPoint& at(int h, int bin) const;
  /// Smoothed Cov(state at b0, state at b1) for b0 <= b1.
  Mat2 cross_cov(int h, int b0, int b1) const;
};

/// Forward filter and backward smoother over bins 1..49, separately for each
/// h present in `binned` (which must list bins 1..49 in order for each h).
/// The first bin is initialized diffusely from its own observation.
SmoothedSeries kalman_smooth(const std::vector<DisplacementEstimate>& binned,
                             const ProcessNoise& noise);

/// Mahalanobis length of the change from bin b0 to b1 under the smoother's
/// joint covariance of the two states.
double trend_stat(const SmoothedSeries& series, int h, int b0, int b1);

struct TrendWindow {
  std::string label;
  int h = 1;
  int b0 = 1;
  int b1 = 49;
};

/// The rise and fall windows reported for the professional play-by-play
/// corpus, first-trip and later-trip channels.
std::vector<TrendWindow> default_trend_windows();

}  // namespace ftheat
