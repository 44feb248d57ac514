#include "ftheat/kalman.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ftheat/error.hpp"

namespace ftheat {

ProcessNoise ProcessNoise::parse(const std::string& text) {
  if (text == "auto") return automatic();
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw DomainError("");
    } catch (const std::exception&) {
      throw DomainError("bad process noise '" + text + "' (expected auto, q, or q11,q12,q22)");
    }
  }
  Mat2 q;
  if (v.size() == 1) {
    q = v[0] * Mat2::Identity();
  } else if (v.size() == 3) {
    q << v[0], v[1], v[1], v[2];
  } else {
    throw DomainError("bad process noise '" + text + "' (expected auto, q, or q11,q12,q22)");
  }
  Eigen::SelfAdjointEigenSolver<Mat2> eig(q);
  if (!q.allFinite() || eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, q.norm()))
    throw DomainError("process noise must be positive semidefinite");
  return of(q);
}

std::vector<double> process_noise_grid() {
  std::vector<double> g{0.0};
  for (int k = -32; k <= 4; ++k) g.push_back(std::pow(10.0, k / 4.0));
  return g;
}

const SmoothedChannel& SmoothedSeries::channel(int h) const {
  for (const auto& c : channels)
    if (c.h == h) return c;
  throw DomainError("no smoothed series for h = " + std::to_string(h));
}

const SmoothedPoint& SmoothedSeries::at(int h, int bin) const {
  const auto& c = channel(h);
  if (bin < 1 || bin > static_cast<int>(c.points.size())) throw DomainError("bin out of range");
  return c.points[static_cast<std::size_t>(bin - 1)];
}

Mat2 SmoothedSeries::cross_cov(int h, int b0, int b1) const {
  const auto& c = channel(h);
  if (b0 < 1 || b1 > static_cast<int>(c.points.size()) || b0 > b1)
    throw DomainError("bins must satisfy 1 <= b0 <= b1 <= 49");
  Mat2 prod = Mat2::Identity();
  for (int b = b0; b < b1; ++b) prod = prod * c.gains[static_cast<std::size_t>(b - 1)];
  return prod * c.points[static_cast<std::size_t>(b1 - 1)].cov;
}

namespace {

void check_psd(const Mat2& r, int h, int bin) {
  Eigen::SelfAdjointEigenSolver<Mat2> eig(0.5 * (r + r.transpose()));
  if (!r.allFinite() || std::abs(r(0, 1) - r(1, 0)) > 1e-10 * std::max(1.0, r.norm()) ||
      eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, r.norm()))
    throw DomainError("observation covariance for h = " + std::to_string(h) + ", bin " +
                      std::to_string(bin) + " is not positive semidefinite");
}

SmoothedChannel run_channel(int h, const std::vector<const DisplacementEstimate*>& obs,
                            const Mat2& q) {
  const std::size_t n = obs.size();
  std::vector<Vec2> xf(n), xp(n);
  std::vector<Mat2> pf(n), pp(n);
  double ll = 0.0;

  xf[0] = obs[0]->delta;
  pf[0] = obs[0]->cov;
  xp[0] = xf[0];
  pp[0] = pf[0];
  for (std::size_t b = 1; b < n; ++b) {
    xp[b] = xf[b - 1];
    pp[b] = pf[b - 1] + q;
    const Mat2& r = obs[b]->cov;
    const Mat2 s = pp[b] + r;
    Eigen::LLT<Mat2> llt(s);
    if (llt.info() != Eigen::Success)
      throw NumericalError("innovation covariance is singular at h = " + std::to_string(h) +
                           ", bin " + std::to_string(b + 1));
    const Vec2 innov = obs[b]->delta - xp[b];
    const Mat2 k = llt.solve(pp[b]).transpose();  // pp * s^-1
    xf[b] = xp[b] + k * innov;
    const Mat2 ik = Mat2::Identity() - k;
    Mat2 p = ik * pp[b] * ik.transpose() + k * r * k.transpose();
    pf[b] = 0.5 * (p + p.transpose());
    const Mat2 lmat = llt.matrixL();
    const double logdet = 2.0 * std::log(lmat(0, 0) * lmat(1, 1));
    ll += -0.5 * (innov.dot(llt.solve(innov)) + logdet + 2.0 * std::log(2.0 * std::numbers::pi));
  }

  SmoothedChannel ch;
  ch.h = h;
  ch.process_noise = q;
  ch.innovation_log_likelihood = ll;
  ch.points.resize(n);
  ch.gains.assign(n - 1, Mat2::Zero());
  ch.points[n - 1] = {h, static_cast<int>(n), xf[n - 1], pf[n - 1]};
  for (std::size_t b = n - 1; b-- > 0;) {
    // J = P_b|b * P_{b+1|b}^-1; a singular prediction covariance means the
    // two states are pinned together, handled by the pseudo-inverse.
    const Mat2& pred = pp[b + 1];
    Mat2 j;
    Eigen::LLT<Mat2> llt(pred);
    if (llt.info() == Eigen::Success && pred.determinant() > 0.0) {
      j = llt.solve(pf[b]).transpose();
    } else {
      j = pf[b] * pred.completeOrthogonalDecomposition().pseudoInverse();
    }
    ch.gains[b] = j;
    const auto& next = ch.points[b + 1];
    const Vec2 x = xf[b] + j * (next.delta - xp[b + 1]);
    Mat2 p = pf[b] + j * (next.cov - pred) * j.transpose();
    ch.points[b] = {h, static_cast<int>(b + 1), x, 0.5 * (p + p.transpose())};
  }
  return ch;
}

}  // namespace

SmoothedSeries kalman_smooth(const std::vector<DisplacementEstimate>& binned,
                             const ProcessNoise& noise) {
  std::vector<int> hs;
  for (const auto& e : binned)
    if (std::find(hs.begin(), hs.end(), e.h) == hs.end()) hs.push_back(e.h);
  std::sort(hs.begin(), hs.end());
  if (hs.empty()) throw DomainError("no binned estimates to smooth");

  SmoothedSeries out;
  for (int h : hs) {
    std::vector<const DisplacementEstimate*> obs;
    for (const auto& e : binned)
      if (e.h == h) obs.push_back(&e);
    if (obs.size() != static_cast<std::size_t>(kTimeBins))
      throw DomainError("h = " + std::to_string(h) + " must have exactly 49 bins");
    for (std::size_t b = 0; b < obs.size(); ++b) {
      if (obs[b]->bin != static_cast<int>(b + 1))
        throw DomainError("bins for h = " + std::to_string(h) + " must be ordered 1..49");
      check_psd(obs[b]->cov, h, obs[b]->bin);
    }
    if (noise.fixed) {
      out.channels.push_back(run_channel(h, obs, *noise.fixed));
      continue;
    }
    std::optional<SmoothedChannel> best;
    for (double q : process_noise_grid()) {
      auto ch = run_channel(h, obs, q * Mat2::Identity());
      if (!best || ch.innovation_log_likelihood > best->innovation_log_likelihood)
        best = std::move(ch);
    }
    out.channels.push_back(std::move(*best));
  }
  return out;
}

double trend_stat(const SmoothedSeries& series, int h, int b0, int b1) {
  if (b0 < 1 || b1 > kTimeBins || b0 >= b1)
    throw DomainError("trend bins must satisfy 1 <= b0 < b1 <= 49");
  const auto& p0 = series.at(h, b0);
  const auto& p1 = series.at(h, b1);
  const Vec2 d = p1.delta - p0.delta;
  // With no process noise every bin carries the same state; the difference is
  // roundoff.
  const double scale = std::sqrt(p0.cov.trace() + p1.cov.trace());
  if (d.norm() <= 1e-9 * scale || d.isZero(0.0)) return 0.0;
  const Mat2 c = series.cross_cov(h, b0, b1);
  const Mat2 var = p0.cov + p1.cov - c - c.transpose();
  return mahalanobis(d, 0.5 * (var + var.transpose()));
}

std::vector<TrendWindow> default_trend_windows() {
  return {
      {"Decrease", 1, 1, 49},  {"Increase", 1, 1, 5},   {"Decrease", 1, 5, 13},
      {"Increase", 1, 13, 27}, {"Decrease", 1, 27, 49}, {"Decrease", 2, 1, 49},
      {"Increase", 2, 1, 7},   {"Decrease", 2, 7, 25},  {"Increase", 2, 25, 31},
      {"Decrease", 2, 31, 49}, {"Decrease", 2, 31, 39}, {"Increase", 2, 39, 46},
      {"Decrease", 2, 46, 49},
  };
}

}  // namespace ftheat
