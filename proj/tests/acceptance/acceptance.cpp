// Acceptance checks: one PASS/FAIL line per criterion, details above it.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "ftheat/corr_stats.hpp"
#include "ftheat/displacement.hpp"
#include "ftheat/gvt_recovery.hpp"
#include "ftheat/kalman.hpp"
#include "ftheat/model1.hpp"
#include "ftheat/numerics.hpp"
#include "ftheat/simulate.hpp"

using namespace ftheat;

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
  bool ok = true;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      std::cout << "    mismatch: " << what << '\n';
    }
  }
};

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = ftheat::cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string pct1(double fraction) {
  char buf[32];
  const double x = fraction * 100.0;
  std::snprintf(buf, sizeof buf, "%.1f", std::copysign(std::floor(std::abs(x) * 10 + 0.5) / 10, x));
  return buf;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Mat2 sym(double a, double b, double c) {
  Mat2 m;
  m << a, b, b, c;
  return m;
}

Profile make_profile(double m1, double m2, double s11, double s12, double s22) {
  Profile p;
  p.mu = Vec2(m1, m2);
  p.sigma = sym(s11, s12, s22);
  return p;
}

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "ftheat_acceptance";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------

struct PrintedRow {
  const char* name;
  std::int64_t n, h1, h2;
  const char *pct1, *pct2, *diff;
  double z;
};

// Per-player rows and the pooled row of the published pair table.
const PrintedRow kPairTable[] = {
    {"Bird", 338, 285, 298, "84.3", "88.2", "3.9", 1.57},
    {"Maxwell", 430, 302, 342, "70.2", "79.5", "9.3", 3.15},
    {"Parish", 318, 213, 241, "67.0", "75.8", "8.8", 2.36},
    {"Archibald", 321, 245, 265, "76.3", "82.6", "6.2", 1.95},
    {"Ford", 73, 51, 53, "69.9", "72.6", "2.7", 0.37},
    {"McHale", 177, 128, 122, "72.3", "68.9", "-3.4", -0.70},
    {"Carr", 83, 57, 60, "68.7", "72.3", "3.6", 0.51},
    {"Robey", 171, 91, 103, "53.2", "60.2", "7.0", 1.31},
    {"Henderson", 138, 101, 106, "73.2", "76.8", "3.6", 0.70},
    {"Total", 2049, 1473, 1590, "71.9", "77.6", "5.7", 4.21},
};

bool criterion1() {
  Check c;
  const auto events = cli({"celtics"});
  c.expect(events.code == 0, "celtics exit code");
  const auto r = cli({"--format", "csv", "pair-stats"}, events.out);
  c.expect(r.code == 0, "pair-stats exit code");
  std::map<std::string, std::vector<std::string>> by_name;
  for (const auto& row : parse_csv(r.out))
    if (!row.empty()) by_name[row[0]] = row;
  for (const auto& want : kPairTable) {
    auto it = by_name.find(want.name);
    if (it == by_name.end() || it->second.size() < 9) {
      c.expect(false, std::string(want.name) + " row missing");
      continue;
    }
    const auto& g = it->second;
    const std::string who = want.name;
    c.expect(std::stoll(g[1]) == want.n, who + " N " + g[1]);
    c.expect(std::stoll(g[2]) == want.h1, who + " H1 " + g[2]);
    c.expect(std::stoll(g[3]) == want.h2, who + " H2 " + g[3]);
    c.expect(pct1(std::stod(g[4])) == want.pct1, who + " Pct1 " + pct1(std::stod(g[4])) + " vs " + want.pct1);
    c.expect(pct1(std::stod(g[5])) == want.pct2, who + " Pct2 " + pct1(std::stod(g[5])) + " vs " + want.pct2);
    c.expect(pct1(std::stod(g[6])) == want.diff, who + " diff " + pct1(std::stod(g[6])) + " vs " + want.diff);
    c.expect(std::abs(std::stod(g[8]) - want.z) <= 0.15, who + " z " + fmt(std::stod(g[8])) + " vs " + fmt(want.z));
  }
  return c.ok;
}

bool criterion2() {
  Check c;
  const RawCounts printed[] = {{5, 48, 34, 250}, {31, 97, 57, 245}, {29, 76, 49, 165},
                               {14, 62, 42, 203}, {5, 17, 15, 36},  {20, 29, 35, 93},
                               {5, 21, 18, 39},   {31, 49, 37, 54}, {8, 29, 24, 77}};
  for (const auto& raw : printed) {
    try {
      c.expect(recover_raw(summarize_raw(raw, 1)) == raw, "round trip of row with N=" + std::to_string(raw.total()));
    } catch (const Error& e) {
      c.expect(false, std::string("row not recovered uniquely: ") + e.what());
    }
  }
  for (const auto& row : celtics_counts())
    c.expect(recover_raw(summarize_raw(row.counts, 1, row.name)) == row.counts, row.name + " fixture round trip");

  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<std::int64_t> total(1, 500);
  int false_recoveries = 0, recovered = 0, ambiguous = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const auto n = total(rng);
    std::uniform_int_distribution<std::int64_t> cut(0, n);
    std::array<std::int64_t, 3> s{cut(rng), cut(rng), cut(rng)};
    std::sort(s.begin(), s.end());
    const RawCounts raw{s[0], s[1] - s[0], s[2] - s[1], n - s[2]};
    try {
      if (recover_raw(summarize_raw(raw, 1)) == raw)
        ++recovered;
      else
        ++false_recoveries;
    } catch (const AmbiguousSummary&) {
      ++ambiguous;
    }
  }
  std::cout << "    property: " << recovered << " recovered, " << ambiguous << " ambiguous, "
            << false_recoveries << " false\n";
  c.expect(false_recoveries == 0, "false recoveries");
  return c.ok;
}

bool criterion3() {
  Check c;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mu(-1.0, 3.0), sd(0.1, 1.0), rho(-0.9, 0.9);
  const QuadratureRule q24(24), q48(48);
  const std::size_t idx[4] = {static_cast<std::size_t>(Pattern::HitHit), static_cast<std::size_t>(Pattern::HitMiss),
                              static_cast<std::size_t>(Pattern::MissHit), static_cast<std::size_t>(Pattern::MissMiss)};
  double worst_z = 0.0, worst_conv = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double s1 = sd(rng), s2 = sd(rng), r = rho(rng);
    const auto p = make_profile(mu(rng), mu(rng), s1 * s1, r * s1 * s2, s2 * s2);
    const auto a = pattern_probabilities(p, q24);
    const auto b = pattern_probabilities(p, q48);
    const auto mc = mc_pair_probabilities(p, 1'000'000, 1000 + static_cast<std::uint64_t>(k));
    for (int j = 0; j < 4; ++j) {
      const double conv = std::abs(a[idx[j]] - b[idx[j]]);
      const double z = std::abs(a[idx[j]] - mc[j].value) / mc[j].std_err;
      worst_conv = std::max(worst_conv, conv);
      worst_z = std::max(worst_z, z);
      c.expect(conv <= 1e-8, "self-convergence " + fmt(conv) + " on profile " + std::to_string(k));
      c.expect(z <= 3.0, "MC deviation " + fmt(z) + " SE on profile " + std::to_string(k));
    }
  }
  std::cout << "    worst |MC - quad| / SE = " << fmt(worst_z) << ", worst |24 - 48| = " << fmt(worst_conv) << '\n';
  return c.ok;
}

Mixture three_component_truth() {
  Mixture m;
  const Mat2 s = sym(0.25, 0.15, 0.25);
  m.components = {{0.5, Profile{Vec2(0.2, 0.405), s}},
                  {0.3, Profile{Vec2(1.1, 1.386), s}},
                  {0.2, Profile{Vec2(2.0, 2.44), s}}};
  return m;
}

Mixture fitted_for_c8;

bool criterion4() {
  Check c;
  const auto truth = three_component_truth();
  ScheduleSpec s;
  s.players = 300;
  s.games_per_player = 200;
  s.seed = 4;
  const auto data = gen_dataset(truth, s);
  EmConfig cfg;
  cfg.components = 3;
  cfg.max_iterations = 2000;
  const auto fit = em_fit(data.trips, cfg);
  c.expect(fit.converged, "EM converged");
  c.expect(fit.mixture.size() == 3, "three components kept");
  for (std::size_t i = 1; i < fit.history.size(); ++i)
    c.expect(fit.history[i] >= fit.history[i - 1] - 1e-9,
             "log-likelihood fell at iteration " + std::to_string(i));
  if (fit.mixture.size() == 3) {
    std::array<int, 3> perm{0, 1, 2}, best{};
    double best_cost = INFINITY;
    do {
      double cost = 0;
      for (int k = 0; k < 3; ++k)
        cost += (fit.mixture.components[perm[k]].profile.mu - truth.components[k].profile.mu).squaredNorm();
      if (cost < best_cost) {
        best_cost = cost;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (int k = 0; k < 3; ++k) {
      const auto& f = fit.mixture.components[best[k]];
      const auto& t = truth.components[k];
      std::cout << "    component " << k + 1 << ": weight " << fmt(f.weight) << " (" << t.weight << "), mu ("
                << fmt(f.profile.mu(0)) << ", " << fmt(f.profile.mu(1)) << ") vs (" << t.profile.mu(0) << ", "
                << t.profile.mu(1) << ")\n";
      c.expect(std::abs(f.weight - t.weight) <= 0.05, "weight of component " + std::to_string(k + 1));
      c.expect((f.profile.mu - t.profile.mu).cwiseAbs().maxCoeff() <= 0.1, "mu of component " + std::to_string(k + 1));
    }
  }
  fitted_for_c8 = fit.mixture;
  return c.ok;
}

bool criterion5() {
  Check c;
  const QuadratureRule rule;
  Mixture positive;
  positive.components = {{0.4, make_profile(0.3, 0.6, 0.3, 0.1, 0.25)},
                         {0.35, make_profile(1.2, 1.5, 0.2, 0.15, 0.2)},
                         {0.25, make_profile(2.2, 2.4, 0.5, 0.05, 0.4)}};
  Mixture diagonal = positive;
  for (auto& comp : diagonal.components) comp.profile.sigma(0, 1) = comp.profile.sigma(1, 0) = 0.0;

  ScheduleSpec s;
  s.players = 400;
  s.games_per_player = 30;
  s.trips_per_game = {0.5, 0.3, 0.2};
  s.shots_per_trip = {0.3, 0.6, 0.1};
  s.seed = 5;
  double min_gap = INFINITY, max_diag = 0.0;
  for (const auto* mix : {&positive, &diagonal}) {
    const auto data = gen_dataset(*mix, s);
    for (const auto& p : data.trips.players()) {
      const double gap = conditional_posterior(p, *mix, true, rule).second -
                         conditional_posterior(p, *mix, false, rule).second;
      if (mix == &positive) {
        min_gap = std::min(min_gap, gap);
        c.expect(gap > 0.0, p.player_id + " has non-positive gap " + fmt(gap));
      } else {
        max_diag = std::max(max_diag, std::abs(gap));
        c.expect(std::abs(gap) <= 1e-10, p.player_id + " diagonal gap " + fmt(gap));
      }
    }
  }
  std::cout << "    smallest gap (positive covariance) " << fmt(min_gap) << ", largest |gap| (diagonal) "
            << fmt(max_diag) << '\n';
  return c.ok;
}

bool criterion6() {
  Check c;
  const auto mix = Mixture::single(make_profile(1.0, 1.3, 0.25, 0.1, 0.25));
  ScheduleSpec s;
  s.players = 300;
  s.games_per_player = 100;
  s.trips_per_game = ScheduleSpec::exactly(2);
  s.seed = 6;
  GenerateOptions g;
  g.trip_index_deltas = std::vector<Vec2>{Vec2(-0.1, -0.1), Vec2(0.1, 0.1)};
  const auto data = gen_dataset(mix, s, g);
  Model2Config cfg;
  cfg.h_max = 2;
  const auto r = fit_model2(data.trips, mix, cfg);
  c.expect(r.converged, "Model 2 converged");
  for (int h = 0; h < 2; ++h) {
    const Vec2 err = r.estimates[h].delta - (*g.trip_index_deltas)[h];
    std::cout << "    delta_" << h + 1 << " = (" << fmt(r.estimates[h].delta(0)) << ", "
              << fmt(r.estimates[h].delta(1)) << ")\n";
    c.expect(err.cwiseAbs().maxCoeff() <= 0.05, "delta_" + std::to_string(h + 1));
  }
  // The generating deltas are the only two draws; their second moment is the
  // reference for sigma_delta.
  Mat2 second = Mat2::Zero();
  for (const auto& d : *g.trip_index_deltas) second += d * d.transpose() / 2.0;
  std::cout << "    sigma_delta = [[" << fmt(r.prior.sigma_delta(0, 0)) << ", " << fmt(r.prior.sigma_delta(0, 1))
            << "], [" << fmt(r.prior.sigma_delta(1, 0)) << ", " << fmt(r.prior.sigma_delta(1, 1)) << "]]\n";
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double ratio = r.prior.sigma_delta(i, j) / second(i, j);
      c.expect(ratio >= 0.5 && ratio <= 2.0, "sigma_delta entry ratio " + fmt(ratio));
    }

  double prev = 0.0;
  for (std::size_t games : {25, 100, 400}) {
    ScheduleSpec t = s;
    t.players = 100;
    t.games_per_player = games;
    t.seed = 60;
    const auto d = gen_dataset(mix, t, g);
    const auto fit = fit_model2(d.trips, mix, cfg);
    const double stat = displacement_diff_stat(fit.estimates, 1, 2);
    std::cout << "    diff stat at " << games << " games: " << fmt(stat) << '\n';
    c.expect(stat > prev, "diff stat not increasing at " + std::to_string(games) + " games");
    prev = stat;
  }
  return c.ok;
}

bool criterion7() {
  Check c;
  const auto mix = Mixture::single(make_profile(1.0, 1.3, 0.1, 0.05, 0.1));
  const DisplacementPrior prior{sym(0.0402, 0.008, 0.0346)};
  const double q95 = chi_square2_quantile(0.95);
  int exceed = 0, cells = 0;
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    ScheduleSpec s;
    s.players = 200;
    s.games_per_player = 200;
    s.trips_per_game = ScheduleSpec::exactly(rep % 2 ? 2 : 1);
    s.overtime_probability = 1.0 / kTimeBins;
    s.seed = 7000 + rep;
    const auto data = gen_dataset(mix, s);
    for (const auto& e : fit_model3(data.trips, mix, prior)) {
      if (!e.present) continue;
      Eigen::VectorXd w(2);
      w << e.delta(0), e.delta(1);
      exceed += mahalanobis_squared(w, e.cov) > q95 ? 1 : 0;
      ++cells;
    }
  }
  const double frac = static_cast<double>(exceed) / cells;
  std::cout << "    " << exceed << " of " << cells << " cells beyond the 95% threshold (" << fmt(100 * frac)
            << "%)\n";
  c.expect(frac >= 0.01 && frac <= 0.10, "exceedance fraction " + fmt(frac));

  std::mt19937_64 rng(77);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<DisplacementEstimate> binned;
  Mat2 info = Mat2::Zero();
  Vec2 score = Vec2::Zero();
  for (int b = 1; b <= kTimeBins; ++b) {
    DisplacementEstimate e;
    e.h = 1;
    e.bin = b;
    e.delta = Vec2(0.1 * n01(rng), 0.1 * n01(rng));
    const double v = 0.01 * u(rng);
    e.cov = sym(v, 0.3 * v, 1.2 * v);
    e.n_trips = 10;
    info += e.cov.inverse();
    score += e.cov.inverse() * e.delta;
    binned.push_back(e);
  }
  const Vec2 pooled = info.inverse() * score;
  const auto flat = kalman_smooth(binned, ProcessNoise::of(Mat2::Zero()));
  double worst_flat = 0.0, worst_raw = 0.0;
  for (int b = 1; b <= kTimeBins; ++b) worst_flat = std::max(worst_flat, (flat.at(1, b).delta - pooled).norm());
  const auto loose = kalman_smooth(binned, ProcessNoise::of(1e9 * Mat2::Identity()));
  for (int b = 1; b <= kTimeBins; ++b)
    worst_raw = std::max(worst_raw, (loose.at(1, b).delta - binned[b - 1].delta).norm());
  std::cout << "    Q=0 vs pooled mean " << fmt(worst_flat) << ", Q=1e9 vs raw " << fmt(worst_raw) << '\n';
  c.expect(worst_flat <= 1e-12, "Q=0 smoother");
  c.expect(worst_raw <= 1e-6, "large-Q smoother");
  return c.ok;
}

bool criterion8() {
  Check c;
  const QuadratureRule rule;
  const Mixture& mix = fitted_for_c8.size() ? fitted_for_c8 : three_component_truth();
  ScheduleSpec s;
  s.players = 1000;
  s.games_per_player = 1000;
  s.seed = 8;
  const auto data = gen_dataset(mix, s);
  const auto stats = all_corr_stats(data.trips);
  const auto expected = expected_under_mixture(mix, rule, 1000.0);
  const std::pair<CorrStatistic, double> targets[] = {
      {CorrStatistic::RHat, expected.r_hat}, {CorrStatistic::R, expected.r}, {CorrStatistic::CD, expected.cd}};
  for (const auto& [which, want] : targets) {
    const auto got = weighted_summary(stats, which, Weighting::Uniform);
    const double dev = std::abs(got.average - want) / got.std_err;
    std::cout << "    " << to_string(which) << ": average " << fmt(got.average) << " over " << got.players
              << " players, expected " << fmt(want) << " (" << fmt(dev) << " SE)\n";
    c.expect(dev <= 3.0, std::string(to_string(which)) + " off by " + fmt(dev) + " SE");
  }

  const std::pair<RawCounts, bool> edges[] = {
      {{1, 1, 1, 1}, true},  {{0, 1, 1, 1}, false}, {{1, 0, 1, 1}, false}, {{1, 1, 0, 1}, false},
      {{1, 1, 1, 0}, false}, {{0, 0, 0, 9}, false}, {{50, 1, 1, 50}, true}, {{0, 0, 0, 0}, false}};
  for (const auto& [counts, eligible] : edges) {
    const auto st = corr_stats_from_counts("edge", counts);
    c.expect(st.eligible == eligible && st.r_hat.has_value() == eligible && st.cd.has_value() == eligible,
             "eligibility of (" + std::to_string(counts.mm) + "," + std::to_string(counts.mh) + "," +
                 std::to_string(counts.hm) + "," + std::to_string(counts.hh) + ")");
  }
  return c.ok;
}

bool criterion9() {
  Check c;
  const auto readme = slurp(std::filesystem::path(FTHEAT_SOURCE_DIR) / "README.md");
  c.expect(!readme.empty(), "README.md present");
  for (const char* sub : {"celtics", "recover-gvt", "pair-stats", "trip-table", "repeat-trips", "fit-model1",
                          "posterior", "power", "fit-model2", "fit-model3", "smooth", "trends", "corr-stats"})
    c.expect(readme.find(std::string("ftheat ") + sub) != std::string::npos ||
                 readme.find(std::string(" ") + sub + " ") != std::string::npos,
             std::string("README documents ") + sub);
  for (const char* ref : {"46.56", "1487", "12.378", "0.0402"})
    c.expect(readme.find(ref) != std::string::npos, std::string("README lists reference value ") + ref);
  return c.ok;
}

bool criterion10() {
  Check c;
  const auto dir = scratch_dir();
  auto same = [&](const std::vector<std::string>& args, const std::string& input, const std::string& label) {
    const auto a = cli(args, input), b = cli(args, input);
    c.expect(a.code == 0, label + " exit code " + std::to_string(a.code) + ": " + a.err);
    c.expect(a.out == b.out, label + " rerun differs");
    return a.out;
  };

  const std::vector<std::string> sim = {"simulate", "--mu", "1.0,1.3", "--sigma", "0.3,0.1,0.3",
                                        "--players", "60", "--games", "30", "--trips-per-game", "0.5,0.3,0.2",
                                        "--shots", "0.3,0.6,0.1", "--overtime", "0.05", "--sigma-delta",
                                        "0.04,0.008,0.035"};
  auto with_threads = [](std::vector<std::string> args, int t) {
    args.insert(args.begin(), {"--seed", "10", "--threads", std::to_string(t)});
    return args;
  };
  const auto events = same(with_threads(sim, 1), "", "simulate");
  c.expect(events == cli(with_threads(sim, 4)).out, "simulate differs across thread counts");

  same({"celtics"}, "", "celtics");
  same({"--format", "csv", "pair-stats"}, events, "pair-stats");
  same({"--format", "csv", "trip-table"}, events, "trip-table");
  same({"--format", "csv", "repeat-trips"}, events, "repeat-trips");
  same({"--format", "csv", "recover-gvt", "--celtics"}, "", "recover-gvt");
  same({"--threads", "2", "--format", "csv", "power", "--p1", "0.7", "--p2", "0.8", "--gap", "0.1"}, "", "power");

  std::map<int, std::string> fits;
  for (int t : {1, 4}) {
    const auto model = dir / ("model_t" + std::to_string(t) + ".json");
    const auto out = same(with_threads({"--format", "json", "fit-model1", "--m", "2", "--max-iter", "2000", "-o",
                                        model.string()},
                                       t),
                          events, "fit-model1 threads=" + std::to_string(t));
    fits[t] = slurp(model);
    const auto m = model.string();
    const auto m2 = dir / ("m2_t" + std::to_string(t) + ".json");
    const auto m3 = dir / ("m3_t" + std::to_string(t) + ".csv");
    const auto post = same(with_threads({"--format", "csv", "posterior", "--model", m}, t), events, "posterior");
    const auto corr = same(with_threads({"--format", "csv", "corr-stats", "--model", m}, t), events, "corr-stats");
    same(with_threads({"fit-model2", "--model", m, "--h-max", "3", "-o", m2.string()}, t), events, "fit-model2");
    same(with_threads({"fit-model3", "--model", m, "--prior", m2.string(), "-o", m3.string()}, t), events,
         "fit-model3");
    const auto smooth = same(with_threads({"--format", "csv", "smooth", "-i", m3.string()}, t), "", "smooth");
    const auto trends = same(with_threads({"--format", "csv", "trends", "-i", m3.string()}, t), "", "trends");
    fits[t] += out + post + corr + slurp(m2) + slurp(m3) + smooth + trends;
  }
  c.expect(fits[1] == fits[4], "fit outputs differ between 1 and 4 threads");
  std::filesystem::remove_all(dir);
  return c.ok;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<bool()> run;
    double limit_seconds;  // 0: no limit
  };
  const Criterion criteria[] = {
      {1, "Celtics pair tables", criterion1, 1.0},
      {2, "rounded-percentage recovery", criterion2, 10.0},
      {3, "quadrature vs Monte Carlo", criterion3, 120.0},
      {4, "Model 1 EM recovery", criterion4, 600.0},
      {5, "conditional posterior sign", criterion5, 0.0},
      {6, "Model 2 recovery", criterion6, 0.0},
      {7, "Model 3 calibration and smoother limits", criterion7, 0.0},
      {8, "correlation statistics vs mixture expectations", criterion8, 0.0},
      {9, "reference values documented", criterion9, 0.0},
      {10, "determinism", criterion10, 0.0},
  };
  int failures = 0;
  for (const auto& cr : criteria) {
    std::cout << "criterion " << cr.id << ": " << cr.title << '\n';
    const auto t0 = Clock::now();
    bool ok = false;
    try {
      ok = cr.run();
    } catch (const std::exception& e) {
      std::cout << "    exception: " << e.what() << '\n';
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (cr.limit_seconds > 0 && secs > cr.limit_seconds) {
      std::cout << "    runtime " << fmt(secs) << " s exceeds " << cr.limit_seconds << " s\n";
      ok = false;
    }
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << cr.id << " (" << cr.title << ") [" << fmt(secs)
              << " s]\n"
              << std::flush;
    failures += ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
