#include "ftheat/corr_stats.hpp"

#include <cmath>
#include <limits>

#include "ftheat/classical_stats.hpp"
#include "ftheat/error.hpp"

namespace ftheat {

PlayerCorrStats corr_stats_from_counts(const std::string& player_id, const RawCounts& pairs) {
  PlayerCorrStats s;
  s.player_id = player_id;
  s.pairs = pairs;
  s.eligible = pairs.mm > 0 && pairs.mh > 0 && pairs.hm > 0 && pairs.hh > 0;
  if (!s.eligible) return s;

  const double n = static_cast<double>(pairs.total());
  const double hit1 = static_cast<double>(pairs.hit_first());
  const double miss1 = static_cast<double>(pairs.miss_first());
  const double p1 = hit1 / n;
  const double p2 = static_cast<double>(pairs.hit_second()) / n;
  // sum over trips of (y1 - ybar1)(y2 - ybar2) = HH - N ybar1 ybar2
  const double cross = static_cast<double>(pairs.hh) - n * p1 * p2;
  const double s1 = std::sqrt(p1 * (1 - p1));
  const double s2 = std::sqrt(p2 * (1 - p2));

  s.r_hat = cross / (n - 1);
  s.r = cross / (n * s1 * s2);
  s.cd = static_cast<double>(pairs.hh) / hit1 - static_cast<double>(pairs.mh) / miss1;
  s.var_r_hat = p1 * (1 - p1) * p2 * (1 - p2) / n;
  s.var_r = 1.0 / n;
  s.var_cd = p2 * (1 - p2) * (1.0 / miss1 + 1.0 / hit1);
  return s;
}

PlayerCorrStats player_corr_stats(const PlayerTrips& player) {
  return corr_stats_from_counts(player.player_id, pair_counts(player));
}

std::vector<PlayerCorrStats> all_corr_stats(const TripTable& trips) {
  std::vector<PlayerCorrStats> out;
  for (const auto& p : trips.players()) out.push_back(player_corr_stats(p));
  return out;
}

ExpectedCorr expected_under_mixture(const Mixture& mixture, const QuadratureRule& rule,
                                    std::optional<double> trips) {
  mixture.validate();
  if (trips && !(*trips > 1.0)) throw DomainError("trip count for E[R] must exceed 1");
  const double factor = trips ? *trips / (*trips - 1.0) : 1.0;
  ExpectedCorr e;
  for (const auto& c : mixture.components) {
    if (c.weight == 0.0) continue;
    const auto m = profile_moments(c.profile, rule);
    const double cov = m.cov();
    const double v1 = m.p1 * (1 - m.p1);
    const double v2 = m.p2 * (1 - m.p2);
    e.r_hat += c.weight * cov;
    if (v1 > 0.0 && v2 > 0.0) e.r += c.weight * factor * cov / std::sqrt(v1 * v2);
    if (v1 > 0.0) e.cd += c.weight * cov / v1;
    if (m.p1 > 0.0) e.cd_printed += c.weight * cov / m.p1;
  }
  return e;
}

const char* to_string(CorrStatistic s) {
  switch (s) {
    case CorrStatistic::RHat: return "R_hat";
    case CorrStatistic::R: return "R";
    case CorrStatistic::CD: return "CD";
  }
  return "?";
}

const char* to_string(Weighting w) { return w == Weighting::Uniform ? "uniform" : "information"; }

WeightedSummary weighted_summary(const std::vector<PlayerCorrStats>& stats, CorrStatistic which,
                                 Weighting weighting) {
  std::vector<double> x, v;
  for (const auto& s : stats) {
    if (!s.eligible) continue;
    switch (which) {
      case CorrStatistic::RHat:
        x.push_back(*s.r_hat);
        v.push_back(*s.var_r_hat);
        break;
      case CorrStatistic::R:
        x.push_back(*s.r);
        v.push_back(*s.var_r);
        break;
      case CorrStatistic::CD:
        x.push_back(*s.cd);
        v.push_back(*s.var_cd);
        break;
    }
  }
  if (x.empty()) throw DomainError("no eligible players to summarize");
  WeightedSummary out;
  out.players = x.size();
  const double n = static_cast<double>(x.size());
  if (weighting == Weighting::Uniform) {
    double mean = 0.0;
    for (double xi : x) mean += xi;
    mean /= n;
    out.average = mean;
    if (x.size() < 2) {
      out.std_err = std::numeric_limits<double>::quiet_NaN();
    } else {
      double ss = 0.0;
      for (double xi : x) ss += (xi - mean) * (xi - mean);
      out.std_err = std::sqrt(ss / (n - 1)) / std::sqrt(n);
    }
  } else {
    double sw = 0.0, swx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(v[i] > 0.0)) throw DomainError("information weighting needs positive variances");
      sw += 1.0 / v[i];
      swx += x[i] / v[i];
    }
    out.average = swx / sw;
    out.std_err = 1.0 / std::sqrt(sw);
  }
  out.z = out.average / out.std_err;
  return out;
}

}  // namespace ftheat
