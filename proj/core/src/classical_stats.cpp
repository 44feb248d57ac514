#include "ftheat/classical_stats.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "ftheat/error.hpp"

namespace ftheat {

SeFormula parse_se_formula(const std::string& name) {
  if (name == "independent") return SeFormula::Independent;
  if (name == "mcnemar") return SeFormula::McNemar;
  throw DomainError("unknown SE formula '" + name + "' (expected independent|mcnemar)");
}

const char* to_string(SeFormula f) {
  return f == SeFormula::Independent ? "independent" : "mcnemar";
}

const char* to_string(TripClass c) {
  switch (c) {
    case TripClass::ExactlyOne: return "Exactly 1";
    case TripClass::ExactlyTwo: return "Exactly 2";
    case TripClass::ThreePlus: return "3+";
    case TripClass::Total: return "Total";
  }
  return "?";
}

namespace {

DiffStat finish(double diff, double se) {
  if (se == 0.0) {
    if (diff != 0.0) throw NumericalError("zero standard error with nonzero difference");
    return {0.0, 0.0, 0.0};
  }
  return {diff, se, diff / se};
}

/// Table rows keep a degenerate difference (all hits on one shot, all misses
/// on the other) with a NaN z instead of failing the whole table.
template <class F>
DiffStat tabulated(F&& compute, double diff) {
  try {
    return compute();
  } catch (const NumericalError&) {
    return {diff, 0.0, std::numeric_limits<double>::quiet_NaN()};
  }
}

double share(std::int64_t k, std::int64_t n) {
  return n > 0 ? static_cast<double>(k) / static_cast<double>(n) : 0.0;
}

}  // namespace

DiffStat diff_se_z(std::int64_t h1, std::int64_t h2, std::int64_t n) {
  if (n <= 0) throw DomainError("diff_se_z requires n > 0");
  if (h1 < 0 || h2 < 0 || h1 > n || h2 > n) throw DomainError("hit counts must lie in [0, n]");
  const double nn = static_cast<double>(n);
  const double p1 = static_cast<double>(h1) / nn;
  const double p2 = static_cast<double>(h2) / nn;
  const double se = std::sqrt(p1 * (1 - p1) / nn + p2 * (1 - p2) / nn);
  return finish(p2 - p1, se);
}

DiffStat diff_se_z(const RawCounts& pairs, SeFormula formula) {
  if (formula == SeFormula::Independent)
    return diff_se_z(pairs.hit_first(), pairs.hit_second(), pairs.total());
  const auto n = pairs.total();
  if (n <= 0) throw DomainError("diff_se_z requires n > 0");
  const double nn = static_cast<double>(n);
  const double b = static_cast<double>(pairs.hm);
  const double c = static_cast<double>(pairs.mh);
  const double var = (b + c) - (b - c) * (b - c) / nn;
  return finish((c - b) / nn, std::sqrt(std::max(var, 0.0)) / nn);
}

DiffStat two_sample_diff(std::int64_t h_a, std::int64_t n_a, std::int64_t h_b, std::int64_t n_b) {
  if (n_a <= 0 || n_b <= 0) throw DomainError("two_sample_diff requires positive sample sizes");
  const double pa = static_cast<double>(h_a) / static_cast<double>(n_a);
  const double pb = static_cast<double>(h_b) / static_cast<double>(n_b);
  const double se = std::sqrt(pa * (1 - pa) / static_cast<double>(n_a) +
                              pb * (1 - pb) / static_cast<double>(n_b));
  return finish(pb - pa, se);
}

RawCounts pair_counts(const PlayerTrips& player) {
  RawCounts c;
  for (const auto& t : player.trips) {
    if (t.shots() < 2) continue;
    const bool a = t.outcomes[0];
    const bool b = t.outcomes[1];
    (a ? (b ? c.hh : c.hm) : (b ? c.mh : c.mm)) += 1;
  }
  return c;
}

PairStatsRow pair_stats_row(const std::string& label, const RawCounts& pairs, SeFormula formula) {
  PairStatsRow row;
  row.label = label;
  row.n = pairs.total();
  row.h1 = pairs.hit_first();
  row.h2 = pairs.hit_second();
  if (row.n == 0) throw DomainError("pair statistics need at least one qualifying trip");
  row.pct1 = static_cast<double>(row.h1) / static_cast<double>(row.n);
  row.pct2 = static_cast<double>(row.h2) / static_cast<double>(row.n);
  const auto d = tabulated([&] { return diff_se_z(pairs, formula); }, row.pct2 - row.pct1);
  row.diff = d.diff;
  row.std_err = d.std_err;
  row.z = d.z;
  return row;
}

std::vector<PairStatsRow> pair_stats(const TripTable& trips, Grouping grouping,
                                     SeFormula formula) {
  std::vector<PairStatsRow> rows;
  RawCounts pooled;
  for (const auto& p : trips.players()) {
    const auto c = pair_counts(p);
    pooled.mm += c.mm;
    pooled.mh += c.mh;
    pooled.hm += c.hm;
    pooled.hh += c.hh;
    if (grouping != Grouping::Pooled && c.total() > 0)
      rows.push_back(pair_stats_row(p.player_id, c, formula));
  }
  if (grouping != Grouping::PerPlayer && pooled.total() > 0)
    rows.push_back(pair_stats_row("Total", pooled, formula));
  return rows;
}

std::optional<std::int64_t> TripLengthRow::misses(std::size_t k) const {
  if (k < 1 || k > 3 || !hits[k - 1] || !attempts[k - 1]) return std::nullopt;
  return *attempts[k - 1] - *hits[k - 1];
}

std::vector<TripLengthRow> trip_length_table(const TripTable& trips, SeFormula formula) {
  // Per class: trip count and 2x2 counts for shot pairs (1,2) and (2,3).
  struct Acc {
    std::int64_t n = 0;
    std::array<std::int64_t, 3> hits{};
    RawCounts pair12, pair23;
  };
  std::array<Acc, 3> acc;
  std::array<std::int64_t, 3> total_hits{}, total_attempts{};

  for (const auto& p : trips.players()) {
    for (const auto& t : p.trips) {
      const std::size_t len = t.shots();
      const std::size_t cls = len >= 3 ? 2 : len - 1;
      auto& a = acc[cls];
      ++a.n;
      for (std::size_t k = 0; k < std::min<std::size_t>(len, 3); ++k) {
        a.hits[k] += t.outcomes[k] ? 1 : 0;
        total_hits[k] += t.outcomes[k] ? 1 : 0;
        total_attempts[k] += 1;
      }
      auto tally = [](RawCounts& c, bool x, bool y) {
        (x ? (y ? c.hh : c.hm) : (y ? c.mh : c.mm)) += 1;
      };
      if (len >= 2) tally(a.pair12, t.outcomes[0], t.outcomes[1]);
      if (len >= 3) tally(a.pair23, t.outcomes[1], t.outcomes[2]);
    }
  }

  std::vector<TripLengthRow> rows;
  const std::array<TripClass, 3> classes = {TripClass::ExactlyOne, TripClass::ExactlyTwo,
                                            TripClass::ThreePlus};
  for (std::size_t cls = 0; cls < 3; ++cls) {
    const auto& a = acc[cls];
    TripLengthRow row;
    row.situation = classes[cls];
    row.n = a.n;
    if (a.n > 0) {
      for (std::size_t k = 0; k <= cls; ++k) {
        row.hits[k] = a.hits[k];
        row.attempts[k] = a.n;
        row.pct[k] = static_cast<double>(a.hits[k]) / static_cast<double>(a.n);
      }
      if (cls >= 1) {
        const auto d = tabulated([&] { return diff_se_z(a.pair12, formula); },
                                 share(a.pair12.hit_second(), a.pair12.total()) -
                                     share(a.pair12.hit_first(), a.pair12.total()));
        row.delta12 = d.diff;
        if (!std::isnan(d.z)) row.z12 = d.z;
      }
      if (cls >= 2) {
        const auto d = tabulated([&] { return diff_se_z(a.pair23, formula); },
                                 share(a.pair23.hit_second(), a.pair23.total()) -
                                     share(a.pair23.hit_first(), a.pair23.total()));
        row.delta23 = d.diff;
        if (!std::isnan(d.z)) row.z23 = d.z;
      }
    }
    rows.push_back(row);
  }

  TripLengthRow total;
  total.situation = TripClass::Total;
  total.n = acc[0].n + acc[1].n + acc[2].n;
  for (std::size_t k = 0; k < 3; ++k) {
    if (total_attempts[k] == 0) continue;
    total.hits[k] = total_hits[k];
    total.attempts[k] = total_attempts[k];
    total.pct[k] = static_cast<double>(total_hits[k]) / static_cast<double>(total_attempts[k]);
  }
  if (total.pct[0] && total.pct[1]) total.delta12 = *total.pct[1] - *total.pct[0];
  if (total.pct[1] && total.pct[2]) total.delta23 = *total.pct[2] - *total.pct[1];
  rows.push_back(total);
  return rows;
}

RepeatTripTable repeat_trip_table(const TripTable& trips, SeFormula formula) {
  RawCounts first, second;
  auto tally = [](RawCounts& c, const Trip& t) {
    const bool x = t.outcomes[0];
    const bool y = t.outcomes[1];
    (x ? (y ? c.hh : c.hm) : (y ? c.mh : c.mm)) += 1;
  };
  for (const auto& p : trips.players()) {
    // game -> qualifying trips seen so far, in chronological order
    std::map<std::string, std::pair<const Trip*, const Trip*>> per_game;
    for (const auto& t : p.trips) {
      if (t.shots() < 2) continue;
      auto& slot = per_game[t.game_id];
      if (!slot.first) {
        slot.first = &t;
      } else if (!slot.second) {
        slot.second = &t;
      }
    }
    for (const auto& [game, pair] : per_game) {
      if (!pair.second) continue;
      tally(first, *pair.first);
      tally(second, *pair.second);
    }
  }

  RepeatTripTable table;
  table.first.label = "S1: first of 2+ trips of 2+ shots";
  table.second.label = "S2: second of 2+ trips of 2+ shots";
  if (first.total() == 0) return table;
  table.first = pair_stats_row(table.first.label, first, formula);
  table.second = pair_stats_row(table.second.label, second, formula);
  table.delta_pct1 = tabulated(
      [&] { return two_sample_diff(first.hit_first(), first.total(), second.hit_first(), second.total()); },
      table.second.pct1 - table.first.pct1);
  table.delta_pct2 = tabulated(
      [&] { return two_sample_diff(first.hit_second(), first.total(), second.hit_second(), second.total()); },
      table.second.pct2 - table.first.pct2);
  return table;
}

}  // namespace ftheat
