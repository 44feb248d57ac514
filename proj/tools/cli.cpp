#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ftheat/classical_stats.hpp"
#include "ftheat/corr_stats.hpp"
#include "ftheat/displacement.hpp"
#include "ftheat/error.hpp"
#include "ftheat/gvt_recovery.hpp"
#include "ftheat/ingest.hpp"
#include "ftheat/kalman.hpp"
#include "ftheat/mixture.hpp"
#include "ftheat/model1.hpp"
#include "ftheat/simulate.hpp"
#include "table.hpp"

namespace ftheat::cli {
namespace {

using nlohmann::ordered_json;

/// Bad option value or combination detected after parsing.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

/// Opens `path` for reading, "-" meaning the standard input stream.
class Input {
public:
  Input(const std::string& path, std::istream& stdin_stream) {
    if (path == "-") {
      stream_ = &stdin_stream;
      return;
    }
    file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*file_) throw DataError("cannot open " + path);
    stream_ = file_.get();
  }
  std::istream& get() { return *stream_; }

private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* stream_ = nullptr;
};

class Output {
public:
  Output(const std::string& path, std::ostream& stdout_stream) {
    if (path == "-") {
      stream_ = &stdout_stream;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw DataError("cannot write " + path);
    stream_ = file_.get();
  }
  std::ostream& get() { return *stream_; }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("bad number '" + part + "' in " + what);
    }
  }
  return v;
}

Vec2 parse_vec2(const std::string& text, const std::string& what) {
  const auto v = parse_numbers(text, what);
  if (v.size() != 2) throw UsageError(what + " expects two comma-separated numbers");
  return {v[0], v[1]};
}

Mat2 parse_sym2(const std::string& text, const std::string& what) {
  const auto v = parse_numbers(text, what);
  Mat2 m;
  if (v.size() == 3) {
    m << v[0], v[1], v[1], v[2];
  } else if (v.size() == 1) {
    m = v[0] * Mat2::Identity();
  } else {
    throw UsageError(what + " expects s11,s12,s22 or a single variance");
  }
  return m;
}

std::vector<double> parse_distribution(const std::string& text, const std::string& what) {
  auto v = parse_numbers(text, what);
  // A single integer is shorthand for "exactly that many".
  if (v.size() == 1 && v[0] >= 1 && std::floor(v[0]) == v[0])
    return ScheduleSpec::exactly(static_cast<std::size_t>(v[0]));
  double s = 0.0;
  for (double x : v) s += x;
  if (!(s > 0.0)) throw UsageError(what + " weights must have a positive sum");
  for (double& x : v) x /= s;
  return v;
}

TripTable load_trips(const std::string& path, std::istream& in) {
  Input input(path, in);
  return read_trip_table(input.get());
}

Mixture load_mixture(const std::string& path, std::istream& in) {
  Input input(path, in);
  return read_mixture(input.get());
}

std::string matrix_text(const Mat2& m) {
  std::ostringstream s;
  s << "[[" << format_double(m(0, 0)) << ", " << format_double(m(0, 1)) << "], ["
    << format_double(m(1, 0)) << ", " << format_double(m(1, 1)) << "]]";
  return s.str();
}

ordered_json mat_json(const Mat2& m) {
  return ordered_json::array({ordered_json::array({m(0, 0), m(0, 1)}),
                              ordered_json::array({m(1, 0), m(1, 1)})});
}

Mat2 mat_from_json(const ordered_json& j) {
  Mat2 m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      m(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
  return m;
}

// Binned displacement files: one row per (h, bin).
const std::vector<std::string> kEstimateColumns = {
    "h", "bin", "minute_midpoint", "n_trips", "present", "delta1", "delta2", "cov11", "cov12",
    "cov22"};

Table estimates_table(const std::vector<DisplacementEstimate>& est) {
  Table t;
  t.columns = kEstimateColumns;
  for (const auto& e : est)
    t.add({e.h, e.bin, e.bin > 0 ? Cell(minute_midpoint(e.bin), 1) : Cell(), e.n_trips, e.present,
           Cell(e.delta(0), 4), Cell(e.delta(1), 4), Cell(e.cov(0, 0), 6), Cell(e.cov(0, 1), 6),
           Cell(e.cov(1, 1), 6)});
  return t;
}

std::vector<DisplacementEstimate> read_estimates(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("binned estimate file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) header.push_back(f);
  }
  if (header != kEstimateColumns)
    throw DataError("binned estimate file must have header " +
                    [] {
                      std::string s;
                      for (const auto& c : kEstimateColumns) s += (s.empty() ? "" : ",") + c;
                      return s;
                    }());
  std::vector<DisplacementEstimate> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string part;
    while (std::getline(ss, part, ',')) f.push_back(part);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != kEstimateColumns.size())
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(kEstimateColumns.size()) + " fields");
    try {
      DisplacementEstimate e;
      e.h = std::stoi(f[0]);
      e.bin = std::stoi(f[1]);
      e.n_trips = std::stoll(f[3]);
      e.present = f[4] == "true";
      e.delta = Vec2(std::stod(f[5]), std::stod(f[6]));
      e.cov << std::stod(f[7]), std::stod(f[8]), std::stod(f[8]), std::stod(f[9]);
      out.push_back(e);
    } catch (const std::exception&) {
      throw DataError("line " + std::to_string(lineno) + ": unparsable number");
    }
  }
  return out;
}

void warn_all(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "ftheat: warning: " << w << '\n';
}

// ---------------------------------------------------------------------------

struct Options {
  std::string format = "text";
  unsigned threads = 0;
  std::uint64_t seed = 1;
  std::string input = "-";
  std::string output = "-";
  std::string model;
  std::string se_formula = "independent";
  bool pooled = false;
  bool per_player = false;
  int quad_order = QuadratureRule::kDefaultOrder;

  // recover-gvt
  bool from_celtics = false;
  int precision = 1;

  // fit-model1
  std::size_t components = 8;
  int max_iter = 500;
  double tol = 1e-8;
  int inner_iter = 50;
  std::string select_m;

  // posterior
  int component = -1;
  std::size_t top = 0;
  std::string player;

  // power
  double p1 = -1.0, p2 = -1.0;
  std::string mu, sigma;
  double gap = 0.022;
  double z = 2.0;
  double power = 0.5;
  int replicates = 10000;
  std::int64_t max_trips = 10'000'000;

  // model 2 / 3 / smoothing
  int h_max = 10;
  int m2_max_iter = 1000;
  double m2_tol = 1e-6;
  std::string prior;
  std::string sigma_delta;
  std::string q = "auto";
  std::vector<std::string> windows;

  // simulate
  std::size_t players = 100;
  std::size_t games = 10;
  std::string trips_per_game = "1";
  std::string shots = "0,1,0";
  double overtime = 0.0;
  std::string deltas;
};

Format fmt(const Options& o) { return parse_format(o.format); }

// ---------------------------------------------------------------------------

int cmd_ingest_check(const Options& o, Io io) {
  const auto trips = load_trips(o.input, io.in);
  Table t;
  t.title = "Ingest summary";
  t.columns = {"quantity", "value"};
  std::int64_t games = 0;
  {
    std::vector<std::string> seen;
    for (const auto& p : trips.players())
      for (const auto& tr : p.trips) seen.push_back(tr.game_id);
    std::sort(seen.begin(), seen.end());
    games = std::unique(seen.begin(), seen.end()) - seen.begin();
  }
  std::int64_t len[3] = {0, 0, 0};
  for (const auto& p : trips.players())
    for (const auto& tr : p.trips) ++len[std::min<std::size_t>(tr.shots(), 3) - 1];
  t.add({"players", trips.player_count()});
  t.add({"games", games});
  t.add({"trips", trips.trip_count()});
  t.add({"shots", trips.shot_count()});
  t.add({"trips with 1 shot", len[0]});
  t.add({"trips with 2 shots", len[1]});
  t.add({"trips with 3+ shots", len[2]});
  t.add({"trips with h >= 2", trips.trips_with_at_least(2)});
  render(io.out, t, fmt(o));
  return kOk;
}

int cmd_celtics(const Options& o, Io io) {
  Output out(o.output, io.out);
  write_trip_table(out.get(), celtics_dataset());
  return kOk;
}

int cmd_recover_gvt(const Options& o, Io io) {
  std::vector<SummaryRow> rows;
  if (o.from_celtics) {
    for (const auto& c : celtics_counts()) rows.push_back(summarize_raw(c.counts, o.precision, c.name));
  } else {
    Input in(o.input, io.in);
    rows = read_summary_rows(in.get());
  }
  Table t;
  t.title = "Recovered 2x2 counts";
  t.columns = {"label", "n_miss1", "n_hit1", "pct_hit2_given_miss1", "pct_hit2_given_hit1",
               "status", "mm", "mh", "hm", "hh", "detail"};
  bool all_ok = true;
  for (const auto& r : rows) {
    std::vector<Cell> line{r.label, r.n_miss1, r.n_hit1,
                           r.pct_hit2_given_miss1 ? Cell(r.pct_hit2_given_miss1->to_string()) : Cell(),
                           r.pct_hit2_given_hit1 ? Cell(r.pct_hit2_given_hit1->to_string()) : Cell()};
    try {
      const auto raw = recover_raw(r);
      line.insert(line.end(), {"unique", raw.mm, raw.mh, raw.hm, raw.hh, ""});
    } catch (const AmbiguousSummary& e) {
      all_ok = false;
      line.insert(line.end(), {"ambiguous", Cell(), Cell(), Cell(), Cell(), e.what()});
    } catch (const DataError& e) {
      all_ok = false;
      line.insert(line.end(), {"inconsistent", Cell(), Cell(), Cell(), Cell(), e.what()});
    }
    t.add(std::move(line));
  }
  render(io.out, t, fmt(o));
  return all_ok ? kOk : kDataError;
}

SeFormula se_formula(const Options& o) { return parse_se_formula(o.se_formula); }

int cmd_pair_stats(const Options& o, Io io) {
  const auto trips = load_trips(o.input, io.in);
  Grouping g = Grouping::Both;
  if (o.pooled && !o.per_player) g = Grouping::Pooled;
  if (o.per_player && !o.pooled) g = Grouping::PerPlayer;
  Table t;
  t.title = std::string("Pairs of free throws in trips of 2+ shots (SE: ") +
            to_string(se_formula(o)) + ")";
  t.columns = {"Player", "N", "H1", "H2", "Pct1", "Pct2", "Pct2-Pct1", "StdErr", "z"};
  for (const auto& r : pair_stats(trips, g, se_formula(o)))
    t.add({r.label, r.n, r.h1, r.h2, Cell::pct(r.pct1), Cell::pct(r.pct2), Cell::pct(r.diff),
           Cell::pct(r.std_err), Cell(r.z, 2)});
  render(io.out, t, fmt(o));
  return kOk;
}

int cmd_trip_table(const Options& o, Io io) {
  const auto trips = load_trips(o.input, io.in);
  Table t;
  t.title = "Single trips to the line by length";
  t.columns = {"Situation", "N",      "H1",     "H2",     "H3",     "Pct1",
               "Pct2",      "Pct3",   "d(1,2)", "d(2,3)", "Z(1,2)", "Z(2,3)"};
  for (const auto& r : trip_length_table(trips, se_formula(o))) {
    const bool total = r.situation == TripClass::Total;
    t.add({to_string(r.situation), total ? Cell() : Cell(r.n),
           total ? Cell() : Cell::maybe(r.hits[0]), total ? Cell() : Cell::maybe(r.hits[1]),
           total ? Cell() : Cell::maybe(r.hits[2]), Cell::maybe(r.pct[0], 1, true),
           Cell::maybe(r.pct[1], 1, true), Cell::maybe(r.pct[2], 1, true),
           Cell::maybe(r.delta12, 1, true), Cell::maybe(r.delta23, 1, true),
           Cell::maybe(r.z12, 2), Cell::maybe(r.z23, 2)});
  }
  render(io.out, t, fmt(o));
  return kOk;
}

int cmd_repeat_trips(const Options& o, Io io) {
  const auto trips = load_trips(o.input, io.in);
  const auto r = repeat_trip_table(trips, se_formula(o));
  Table t;
  t.title = "First and second trips of 2+ shots within a game";
  t.columns = {"Situation", "N", "H1", "H2", "Pct1", "Pct2", "Pct2-Pct1", "z"};
  if (r.first.n == 0) {
    t.notes.push_back("no player-game has two trips of 2+ shots");
    render(io.out, t, fmt(o));
    return kOk;
  }
  for (const auto* row : {&r.first, &r.second})
    t.add({row->label, row->n, row->h1, row->h2, Cell::pct(row->pct1), Cell::pct(row->pct2),
           Cell::pct(row->diff), Cell(row->z, 3)});
  t.add({"Pctk[S2]-Pctk[S1]", Cell(), Cell(), Cell(), Cell::pct(r.delta_pct1.diff),
         Cell::pct(r.delta_pct2.diff), Cell(), Cell()});
  t.add({"Classical Standard Error", Cell(), Cell(), Cell(), Cell::pct(r.delta_pct1.std_err),
         Cell::pct(r.delta_pct2.std_err), Cell(), Cell()});
  t.add({"Classical Standard Score", Cell(), Cell(), Cell(), Cell(r.delta_pct1.z, 3),
         Cell(r.delta_pct2.z, 3), Cell(), Cell()});
  render(io.out, t, fmt(o));
  return kOk;
}

EmConfig em_config(const Options& o) {
  EmConfig c;
  c.components = o.components;
  c.max_iterations = o.max_iter;
  c.tolerance = o.tol;
  c.seed = o.seed;
  c.quadrature_order = o.quad_order;
  c.inner_iterations = o.inner_iter;
  c.threads = o.threads;
  return c;
}

int cmd_fit_model1(const Options& o, Io io) {
  const auto trips = load_trips(o.input, io.in);
  const auto config = em_config(o);
  if (!o.select_m.empty()) {
    std::vector<std::size_t> ms;
    for (double v : parse_numbers(o.select_m, "--select-m")) {
      if (v < 1 || std::floor(v) != v) throw UsageError("--select-m takes positive integers");
      ms.push_back(static_cast<std::size_t>(v));
    }
    Table t;
    t.title = "Component-count sweep";
    t.columns = {"M", "fitted", "log_likelihood", "BIC", "converged"};
    for (const auto& r : select_components(trips, ms, config))
      t.add({r.requested, r.fitted, Cell(r.log_likelihood, 3), Cell(r.bic, 3), r.converged});
    render(io.out, t, fmt(o));
    return kOk;
  }
  const auto fit = em_fit(trips, config);
  warn_all(io.err, fit.warnings);
  {
    Output out(o.output, io.out);
    write_mixture(out.get(), fit.mixture, fit.metadata(config, trips));
  }
  io.err << "ftheat: fit-model1: " << fit.mixture.size() << " components, "
         << fit.iterations << " iterations, log-likelihood " << format_double(fit.log_likelihood)
         << (fit.converged ? "" : " (not converged)") << '\n';
  return fit.converged ? kOk : kDataError;
}

int cmd_posterior(const Options& o, Io io) {
  if (o.model.empty()) throw UsageError("posterior needs --model");
  const auto trips = load_trips(o.input, io.in);
  const auto mix = load_mixture(o.model, io.in);
  const QuadratureRule rule(o.quad_order);
  const std::size_t comp =
      o.component < 0 ? mix.modal_component() : static_cast<std::size_t>(o.component);
  if (comp >= mix.size()) throw UsageError("--component is out of range");

  struct Row {
    const PlayerTrips* p;
    double w;
    std::pair<double, double> hit, miss;
  };
  std::vector<Row> rows;
  for (const auto& p : trips.players()) {
    if (!o.player.empty() && p.player_id != o.player) continue;
    const auto post = player_posterior(p, mix, rule);
    rows.push_back({&p, post.weights[comp], conditional_posterior(p, mix, true, rule),
                    conditional_posterior(p, mix, false, rule)});
  }
  if (!o.player.empty() && rows.empty()) throw DataError("no player " + o.player);
  if (o.top > 0) {
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.w > b.w; });
    if (rows.size() > o.top) rows.resize(o.top);
  }
  Table t;
  t.title = "Posterior weight on component " + std::to_string(comp) +
            " and conditional expectations for a fresh trip";
  t.columns = {"Player", "trips", "Pr[component]", "E[P1|hit]", "E[P2|hit]",
               "E[P1|miss]", "E[P2|miss]", "E[P2|hit]-E[P2|miss]"};
  for (const auto& r : rows)
    t.add({r.p->player_id, r.p->trips.size(), Cell(r.w, 3), Cell::pct(r.hit.first),
           Cell::pct(r.hit.second), Cell::pct(r.miss.first), Cell::pct(r.miss.second),
           Cell::pct(r.hit.second - r.miss.second, 2)});
  render(io.out, t, fmt(o));
  return kOk;
}

Profile profile_from_options(const Options& o, std::istream& in) {
  const int sources = (o.p1 >= 0 || o.p2 >= 0) + !o.mu.empty() + !o.model.empty();
  if (sources != 1) throw UsageError("give exactly one of --p1/--p2, --mu/--sigma, or --model");
  Profile p;
  if (o.p1 >= 0 || o.p2 >= 0) {
    if (!(o.p1 > 0 && o.p1 < 1 && o.p2 > 0 && o.p2 < 1))
      throw UsageError("--p1 and --p2 must both lie strictly between 0 and 1");
    p.mu = Vec2(logit(o.p1), logit(o.p2));
  } else if (!o.mu.empty()) {
    p.mu = parse_vec2(o.mu, "--mu");
    if (!o.sigma.empty()) p.sigma = parse_sym2(o.sigma, "--sigma");
  } else {
    const auto mix = load_mixture(o.model, in);
    const std::size_t c =
        o.component < 0 ? mix.modal_component() : static_cast<std::size_t>(o.component);
    if (c >= mix.size()) throw UsageError("--component is out of range");
    p = mix.components[c].profile;
  }
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  return p;
}

int cmd_power(const Options& o, Io io) {
  PowerConfig c;
  c.null_profile = profile_from_options(o, io.in);
  c.gap = o.gap;
  c.z_threshold = o.z;
  c.target_power = o.power;
  c.seed = o.seed;
  c.replicates = o.replicates;
  c.max_trips = o.max_trips;
  c.quadrature_order = o.quad_order;
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  const auto [p1, p2] = expected_probs(c.null_profile, QuadratureRule(o.quad_order));
  const auto r = power_trips(c);
  Table t;
  t.title = "Trips needed to detect a conditional difference";
  t.columns = {"p1", "p2", "P(hit2|hit1)", "P(hit2|miss1)", "z", "target_power", "replicates",
               "trips", "power_at_trips", "normal_approx_trips"};
  t.add({Cell::pct(p1, 2), Cell::pct(p2, 2), Cell::pct(r.hit_given_hit, 2),
         Cell::pct(r.hit_given_miss, 2), Cell(c.z_threshold, 2), Cell(c.target_power, 2),
         c.replicates, r.trips, Cell(r.power, 4),
         o.gap > 0 ? Cell(power_trips_normal_approx(c), 0) : Cell()});
  render(io.out, t, fmt(o));
  return kOk;
}

ordered_json model2_json(const Model2Result& r, std::optional<double> diff) {
  ordered_json doc;
  doc["format"] = "ftheat-model2";
  doc["version"] = 1;
  doc["sigma_delta"] = mat_json(r.prior.sigma_delta);
  doc["converged"] = r.converged;
  doc["iterations"] = r.iterations;
  doc["log_likelihood"] = r.log_likelihood;
  doc["diff_stat_h1_h2"] = diff ? ordered_json(*diff) : ordered_json(nullptr);
  auto est = ordered_json::array();
  for (const auto& e : r.estimates)
    est.push_back({{"h", e.h},
                   {"n_trips", e.n_trips},
                   {"present", e.present},
                   {"delta", {e.delta(0), e.delta(1)}},
                   {"cov", mat_json(e.cov)}});
  doc["estimates"] = std::move(est);
  doc["warnings"] = r.warnings;
  return doc;
}

int cmd_fit_model2(const Options& o, Io io) {
  if (o.model.empty()) throw UsageError("fit-model2 needs --model (a fitted mixture)");
  const auto trips = load_trips(o.input, io.in);
  const auto mix = load_mixture(o.model, io.in);
  Model2Config c;
  c.h_max = o.h_max;
  c.max_iterations = o.m2_max_iter;
  c.tolerance = o.m2_tol;
  c.quadrature_order = o.quad_order;
  c.threads = o.threads;
  const auto r = fit_model2(trips, mix, c);
  warn_all(io.err, r.warnings);
  std::optional<double> diff;
  if (r.estimates.size() >= 2 && r.estimates[0].present && r.estimates[1].present)
    diff = displacement_diff_stat(r.estimates, 1, 2);
  if (o.output != "-") {
    Output out(o.output, io.out);
    out.get() << model2_json(r, diff).dump(2) << '\n';
  }
  Table t;
  t.title = "Displacement by intra-game trip index";
  t.columns = {"h", "n_trips", "delta1", "delta2", "sd1", "sd2", "corr"};
  for (const auto& e : r.estimates) {
    if (!e.present) {
      t.add({e.h, e.n_trips});
      continue;
    }
    const double s1 = std::sqrt(e.cov(0, 0)), s2 = std::sqrt(e.cov(1, 1));
    t.add({e.h, e.n_trips, Cell(e.delta(0), 4), Cell(e.delta(1), 4), Cell(s1, 4), Cell(s2, 4),
           Cell(e.cov(0, 1) / (s1 * s2), 3)});
  }
  t.notes.push_back("sigma_delta = " + matrix_text(r.prior.sigma_delta) +
                    (r.converged ? "" : " (not converged)"));
  if (diff) t.notes.push_back("Mahalanobis distance, h=2 vs h=1: " + format_double(*diff));
  render(io.out, t, fmt(o));
  return r.converged ? kOk : kDataError;
}

DisplacementPrior prior_from_options(const Options& o, std::istream& in) {
  if (o.prior.empty() == o.sigma_delta.empty())
    throw UsageError("give exactly one of --prior (fit-model2 output) or --sigma-delta");
  DisplacementPrior p;
  if (!o.sigma_delta.empty()) {
    p.sigma_delta = parse_sym2(o.sigma_delta, "--sigma-delta");
    try {
      p.validate();
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
    return p;
  }
  Input input(o.prior, in);
  try {
    const auto doc = ordered_json::parse(input.get());
    if (doc.value("format", "") != "ftheat-model2") throw DataError("not a fit-model2 document");
    p.sigma_delta = mat_from_json(doc.at("sigma_delta"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed fit-model2 document: ") + e.what());
  }
  p.validate();
  return p;
}

int cmd_fit_model3(const Options& o, Io io) {
  if (o.model.empty()) throw UsageError("fit-model3 needs --model (a fitted mixture)");
  const auto prior = prior_from_options(o, io.in);
  const auto trips = load_trips(o.input, io.in);
  const auto mix = load_mixture(o.model, io.in);
  Model3Config c;
  c.quadrature_order = o.quad_order;
  c.threads = o.threads;
  const auto est = fit_model3(trips, mix, prior, c);
  std::size_t empty = 0;
  for (const auto& e : est) empty += e.present ? 0 : 1;
  if (empty > 0)
    io.err << "ftheat: warning: " << empty << " of " << est.size()
           << " (h, bin) cells have no trips and carry the prior\n";
  Output out(o.output, io.out);
  render(out.get(), estimates_table(est), Format::Csv);
  return kOk;
}

SmoothedSeries smooth_from_options(const Options& o, std::istream& in) {
  Input input(o.input, in);
  const auto est = read_estimates(input.get());
  ProcessNoise q;
  try {
    q = ProcessNoise::parse(o.q);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  return kalman_smooth(est, q);
}

int cmd_smooth(const Options& o, Io io) {
  const auto s = smooth_from_options(o, io.in);
  Table t;
  t.title = "Smoothed displacement by minute";
  t.columns = {"h", "bin", "minute_midpoint", "delta1", "delta2", "cov11", "cov12", "cov22"};
  for (const auto& ch : s.channels) {
    io.err << "ftheat: smooth: h=" << ch.h << " process noise " << matrix_text(ch.process_noise)
           << '\n';
    for (const auto& p : ch.points)
      t.add({p.h, p.bin, Cell(minute_midpoint(p.bin), 1), Cell(p.delta(0), 4),
             Cell(p.delta(1), 4), Cell(p.cov(0, 0), 6), Cell(p.cov(0, 1), 6), Cell(p.cov(1, 1), 6)});
  }
  Output out(o.output, io.out);
  render(out.get(), t, fmt(o));
  return kOk;
}

int cmd_trends(const Options& o, Io io) {
  const auto s = smooth_from_options(o, io.in);
  std::vector<TrendWindow> windows;
  if (o.windows.empty()) {
    windows = default_trend_windows();
  } else {
    for (const auto& w : o.windows) {
      std::vector<int> v;
      std::stringstream ss(w);
      std::string part;
      try {
        while (std::getline(ss, part, ':')) v.push_back(std::stoi(part));
      } catch (const std::exception&) {
        throw UsageError("bad --window '" + w + "' (expected h:b0:b1)");
      }
      if (v.size() != 3) throw UsageError("bad --window '" + w + "' (expected h:b0:b1)");
      windows.push_back({"", v[0], v[1], v[2]});
    }
  }
  Table t;
  t.title = "Trend statistics within the smoothed displacement";
  t.columns = {"Trend", "h", "B0", "B1", "change1", "change2", "Mahalanobis"};
  for (auto w : windows) {
    if (w.b0 < 1 || w.b1 > kTimeBins || w.b0 >= w.b1)
      throw UsageError("trend window needs 1 <= b0 < b1 <= 49");
    const Vec2 d = s.at(w.h, w.b1).delta - s.at(w.h, w.b0).delta;
    if (w.label.empty()) w.label = d.sum() < 0 ? "Decrease" : "Increase";
    Cell stat;
    try {
      stat = Cell(trend_stat(s, w.h, w.b0, w.b1), 3);
    } catch (const NumericalError&) {
      // Zero process noise pins every bin to one value: no trend is testable.
    }
    t.add({w.label, w.h, w.b0, w.b1, Cell(d(0), 4), Cell(d(1), 4), stat});
  }
  render(io.out, t, fmt(o));
  return kOk;
}

int cmd_corr_stats(const Options& o, Io io) {
  const auto trips = load_trips(o.input, io.in);
  const auto stats = all_corr_stats(trips);
  std::optional<ExpectedCorr> expected;
  std::size_t eligible = 0;
  double mean_n = 0.0;
  for (const auto& s : stats)
    if (s.eligible) {
      ++eligible;
      mean_n += static_cast<double>(s.pairs.total());
    }
  if (eligible == 0) throw DataError("no player has all four outcome pairs");
  mean_n /= static_cast<double>(eligible);
  if (!o.model.empty())
    expected = expected_under_mixture(load_mixture(o.model, io.in), QuadratureRule(o.quad_order),
                                      mean_n);

  std::vector<Table> tables;
  if (o.per_player) {
    Table p;
    p.title = "Per-player statistics";
    p.columns = {"Player", "N", "eligible", "R_hat", "R", "CD", "var_R_hat", "var_R", "var_CD"};
    for (const auto& s : stats)
      p.add({s.player_id, s.pairs.total(), s.eligible, Cell::maybe(s.r_hat, 4),
             Cell::maybe(s.r, 3), Cell::maybe(s.cd, 2, true), Cell::maybe(s.var_r_hat, 6),
             Cell::maybe(s.var_r, 6), Cell::maybe(s.var_cd, 6)});
    tables.push_back(std::move(p));
  }
  Table t;
  t.title = "Correlation statistics";
  t.columns = {"phi", "E(phi|mixture)", "Average", "StdErr", "z", "Wtd Avg", "Wtd StdErr", "Wtd z"};
  const std::array<CorrStatistic, 3> which = {CorrStatistic::RHat, CorrStatistic::R,
                                              CorrStatistic::CD};
  for (auto w : which) {
    const auto u = weighted_summary(stats, w, Weighting::Uniform);
    const auto iw = weighted_summary(stats, w, Weighting::Information);
    const bool pct = w == CorrStatistic::CD;
    const int d = w == CorrStatistic::RHat ? 4 : (pct ? 2 : 3);
    Cell e;
    if (expected)
      e = Cell(w == CorrStatistic::RHat ? expected->r_hat
                                        : (w == CorrStatistic::R ? expected->r : expected->cd),
               d, pct);
    t.add({to_string(w), e, Cell(u.average, d, pct), Cell(u.std_err, d, pct), Cell(u.z, 3),
           Cell(iw.average, d, pct), Cell(iw.std_err, d, pct), Cell(iw.z, 3)});
  }
  t.notes.push_back(std::to_string(eligible) + " eligible players of " +
                    std::to_string(stats.size()));
  t.notes.push_back("weights: R_hat uses P1 Q1 P2 Q2 / N; R uses 1/N; CD uses "
                    "P2 Q2 (1/n_miss1 + 1/n_hit1) (plug-in variances)");
  if (expected)
    t.notes.push_back("E[CD] is cov/(p1 (1 - p1)); the cov/p1 form gives " +
                      format_double(expected->cd_printed));
  tables.push_back(std::move(t));
  render(io.out, tables, fmt(o));
  return kOk;
}

int cmd_simulate(const Options& o, Io io) {
  Mixture mix;
  if (!o.model.empty()) {
    if (o.p1 >= 0 || o.p2 >= 0 || !o.mu.empty())
      throw UsageError("give either --model or a single profile, not both");
    mix = load_mixture(o.model, io.in);
  } else {
    mix = Mixture::single(profile_from_options(o, io.in));
  }
  ScheduleSpec s;
  s.players = o.players;
  s.games_per_player = o.games;
  s.trips_per_game = parse_distribution(o.trips_per_game, "--trips-per-game");
  s.shots_per_trip = parse_distribution(o.shots, "--shots");
  s.overtime_probability = o.overtime;
  s.seed = o.seed;
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  GenerateOptions g;
  g.h_max = o.h_max;
  if (!o.deltas.empty()) {
    std::vector<Vec2> d;
    std::stringstream ss(o.deltas);
    std::string part;
    while (std::getline(ss, part, ';')) d.push_back(parse_vec2(part, "--deltas"));
    g.trip_index_deltas = d;
  } else if (!o.sigma_delta.empty()) {
    g.prior = DisplacementPrior{parse_sym2(o.sigma_delta, "--sigma-delta")};
  }
  const auto data = gen_dataset(mix, s, g, o.threads);
  for (std::size_t h = 0; h < data.trip_index_deltas.size(); ++h)
    io.err << "ftheat: simulate: delta[h=" << h + 1 << "] = ("
           << format_double(data.trip_index_deltas[h](0)) << ", "
           << format_double(data.trip_index_deltas[h](1)) << ")\n";
  Output out(o.output, io.out);
  write_trip_table(out.get(), data.trips);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Free-throw repetition and interruption toolkit", "ftheat"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Options o;

  app.add_option("--format", o.format, "Output format for tables")
      ->check(CLI::IsMember({"text", "csv", "json"}))
      ->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.set_config("--config", "", "Read option defaults from a TOML/INI file")
      ->envname("FTHEAT_CONFIG");

  auto input_opt = [&](CLI::App* sub, const char* help = "Event file (CSV, - for stdin)") {
    sub->add_option("-i,--input", o.input, help)->capture_default_str();
  };
  auto output_opt = [&](CLI::App* sub, const char* help = "Output path (- for stdout)") {
    sub->add_option("-o,--output", o.output, help)->capture_default_str();
  };
  auto se_opt = [&](CLI::App* sub) {
    sub->add_option("--se-formula", o.se_formula, "Standard error of Pct2-Pct1")
        ->check(CLI::IsMember({"independent", "mcnemar"}))
        ->capture_default_str();
  };
  auto quad_opt = [&](CLI::App* sub) {
    sub->add_option("--quad-order", o.quad_order, "Gauss-Hermite nodes per dimension")
        ->check(CLI::Range(2, 200))
        ->capture_default_str();
  };
  auto model_opt = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--model", o.model, "Fitted mixture (JSON from fit-model1)");
    if (required) opt->required();
  };
  auto profile_opts = [&](CLI::App* sub) {
    sub->add_option("--p1", o.p1, "First-shot probability of a point-mass profile");
    sub->add_option("--p2", o.p2, "Second-shot probability of a point-mass profile");
    sub->add_option("--mu", o.mu, "Profile mean in log-odds: mu1,mu2");
    sub->add_option("--sigma", o.sigma, "Profile covariance: s11,s12,s22");
    sub->add_option("--component", o.component, "Mixture component (default: highest weight)");
  };

  std::map<std::string, std::function<int(const Options&, Io)>> handlers;

  auto* s = app.add_subcommand("ingest-check", "Validate an event file and summarize it");
  input_opt(s);
  handlers[s->get_name()] = cmd_ingest_check;

  s = app.add_subcommand("celtics", "Write the nine-player Celtics pairs as an event file");
  output_opt(s);
  handlers[s->get_name()] = cmd_celtics;

  s = app.add_subcommand("recover-gvt", "Recover 2x2 counts from rounded conditional percentages");
  input_opt(s, "Summary CSV: label,n_miss1,n_hit1,pct_hit2_given_miss1,pct_hit2_given_hit1,precision");
  s->add_flag("--celtics", o.from_celtics, "Round-trip the built-in Celtics counts");
  s->add_option("--precision", o.precision, "Decimals when summarizing --celtics")
      ->check(CLI::Range(0, 6))
      ->capture_default_str();
  handlers[s->get_name()] = cmd_recover_gvt;

  s = app.add_subcommand("pair-stats", "First vs second shot in trips of 2+ shots");
  input_opt(s);
  se_opt(s);
  s->add_flag("--pooled", o.pooled, "Only the pooled row");
  s->add_flag("--per-player", o.per_player, "Only per-player rows");
  handlers[s->get_name()] = cmd_pair_stats;

  s = app.add_subcommand("trip-table", "Shot percentages by trip length");
  input_opt(s);
  se_opt(s);
  handlers[s->get_name()] = cmd_trip_table;

  s = app.add_subcommand("repeat-trips", "First vs second trip of 2+ shots within a game");
  input_opt(s);
  se_opt(s);
  handlers[s->get_name()] = cmd_repeat_trips;

  s = app.add_subcommand("fit-model1", "Fit the profile mixture by EM");
  input_opt(s);
  output_opt(s, "Mixture JSON (- for stdout)");
  quad_opt(s);
  s->add_option("--m", o.components, "Mixture components")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--max-iter", o.max_iter, "EM iterations")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--tol", o.tol, "Relative log-likelihood tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--inner-iter", o.inner_iter, "Quasi-Newton steps per M-step")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--select-m", o.select_m, "Comma-separated M values to compare by BIC");
  handlers[s->get_name()] = cmd_fit_model1;

  s = app.add_subcommand("posterior", "Per-player posterior weights and conditional expectations");
  input_opt(s);
  model_opt(s, true);
  quad_opt(s);
  s->add_option("--component", o.component, "Component to report (default: highest weight)");
  s->add_option("--top", o.top, "Only the N players with the highest weight");
  s->add_option("--player", o.player, "Only this player");
  handlers[s->get_name()] = cmd_posterior;

  s = app.add_subcommand("power", "Trips needed to detect a conditional difference");
  model_opt(s, false);
  profile_opts(s);
  quad_opt(s);
  s->add_option("--gap", o.gap, "P(hit2|hit1) - P(hit2|miss1) under the alternative")->capture_default_str();
  s->add_option("--z", o.z, "One-sided z threshold")->capture_default_str();
  s->add_option("--power", o.power, "Target power")->capture_default_str();
  s->add_option("--replicates", o.replicates, "Simulations per trip count")->check(CLI::Range(10000, 100000000))->capture_default_str();
  s->add_option("--max-trips", o.max_trips, "Search cap")->capture_default_str();
  handlers[s->get_name()] = cmd_power;

  s = app.add_subcommand("fit-model2", "Displacements by intra-game trip index");
  input_opt(s);
  output_opt(s, "Write the fit as JSON here");
  model_opt(s, true);
  quad_opt(s);
  s->add_option("--h-max", o.h_max, "Top trip-index stratum")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--max-iter", o.m2_max_iter, "EM iterations for sigma_delta")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--tol", o.m2_tol, "Relative change tolerance for sigma_delta")->check(CLI::PositiveNumber)->capture_default_str();
  handlers[s->get_name()] = cmd_fit_model2;

  s = app.add_subcommand("fit-model3", "Displacements by minute bin (CSV)");
  input_opt(s);
  output_opt(s, "Binned estimates CSV (- for stdout)");
  model_opt(s, true);
  quad_opt(s);
  s->add_option("--prior", o.prior, "fit-model2 JSON supplying sigma_delta");
  s->add_option("--sigma-delta", o.sigma_delta, "Prior covariance: s11,s12,s22");
  handlers[s->get_name()] = cmd_fit_model3;

  s = app.add_subcommand("smooth", "Kalman-smooth binned estimates");
  input_opt(s, "Binned estimates CSV from fit-model3");
  output_opt(s);
  s->add_option("--q", o.q, "Process noise: auto, q, or q11,q12,q22")->capture_default_str();
  handlers[s->get_name()] = cmd_smooth;

  s = app.add_subcommand("trends", "Mahalanobis trend statistics on the smoothed series");
  input_opt(s, "Binned estimates CSV from fit-model3");
  s->add_option("--q", o.q, "Process noise: auto, q, or q11,q12,q22")->capture_default_str();
  s->add_option("--window", o.windows, "h:b0:b1 (repeatable; default: the standard windows)");
  handlers[s->get_name()] = cmd_trends;

  s = app.add_subcommand("corr-stats", "Serial correlation and conditional difference summaries");
  input_opt(s);
  model_opt(s, false);
  quad_opt(s);
  s->add_flag("--per-player", o.per_player, "Also print per-player rows");
  handlers[s->get_name()] = cmd_corr_stats;

  s = app.add_subcommand("simulate", "Generate a synthetic event file");
  output_opt(s);
  model_opt(s, false);
  profile_opts(s);
  s->add_option("--players", o.players, "Players")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--games", o.games, "Games per player")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--trips-per-game", o.trips_per_game, "Count, or weights over 1..K")->capture_default_str();
  s->add_option("--shots", o.shots, "Count, or weights over 1..3 shots per trip")->capture_default_str();
  s->add_option("--overtime", o.overtime, "Probability a trip falls in overtime")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  s->add_option("--deltas", o.deltas, "Trip-index displacements: d11,d12;d21,d22;...");
  s->add_option("--sigma-delta", o.sigma_delta, "Draw trip-index displacements from N(0, S)");
  s->add_option("--h-max", o.h_max, "Displacements drawn with --sigma-delta")->check(CLI::PositiveNumber)->capture_default_str();
  handlers[s->get_name()] = cmd_simulate;

  std::vector<std::string> argv_store{"ftheat"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  err << "ftheat: " << name << " resolved configuration:\n";
  for (const CLI::App* scope : {static_cast<const CLI::App*>(&app), static_cast<const CLI::App*>(sub)}) {
    for (const CLI::Option* opt : scope->get_options()) {
      const std::string lname = opt->get_single_name();
      if (lname == "help" || lname == "config") continue;
      std::string value;
      if (opt->count() > 0) {
        for (const auto& r : opt->results()) value += (value.empty() ? "" : " ") + r;
      } else {
        value = opt->get_default_str();
        if (value.empty() && opt->get_expected_max() == 0) value = "false";
      }
      err << "  " << (scope == sub ? name + "." : "") << lname << " = " << value << '\n';
    }
  }

  try {
    return handlers.at(name)(o, Io{in, out, err});
  } catch (const UsageError& e) {
    err << "ftheat: " << name << ": " << e.what() << "\nRun with --help for more information.\n";
    return kUsage;
  } catch (const Error& e) {
    err << "ftheat: " << name << ": error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "ftheat: " << name << ": error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace ftheat::cli
