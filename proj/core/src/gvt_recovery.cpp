#include "ftheat/gvt_recovery.hpp"

#include <charconv>
#include <istream>
#include <sstream>

namespace ftheat {

namespace {

constexpr int kMaxPrecision = 6;

std::int64_t pow10(int p) {
  std::int64_t v = 1;
  for (int i = 0; i < p; ++i) v *= 10;
  return v;
}

void check_precision(int precision) {
  if (precision < 0 || precision > kMaxPrecision)
    throw DomainError("precision must be in [0, " + std::to_string(kMaxPrecision) + "]");
}

std::string join(const std::vector<std::int64_t>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(values[i]);
  }
  return s;
}

std::int64_t unique_count(std::int64_t n, const std::optional<RoundedPercent>& pct,
                          const std::string& label, const char* condition) {
  if (n == 0) return 0;
  if (!pct)
    throw DataError("inconsistent summary" + (label.empty() ? "" : " for '" + label + "'") +
                    ": " + condition + " percentage missing with " + std::to_string(n) +
                    " trips");
  const auto candidates = matching_counts(n, *pct);
  const std::string where = (label.empty() ? "" : " for '" + label + "'");
  if (candidates.empty())
    throw DataError("inconsistent summary" + where + ": no count out of " + std::to_string(n) +
                    " rounds to " + pct->to_string() + "% (" + condition + ")");
  if (candidates.size() > 1)
    throw AmbiguousSummary("ambiguous summary" + where + ": counts {" + join(candidates) +
                               "} out of " + std::to_string(n) + " all round to " +
                               pct->to_string() + "% (" + condition + ")",
                           candidates);
  return candidates.front();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

double RoundedPercent::value() const {
  return static_cast<double>(units) / static_cast<double>(pow10(precision));
}

std::string RoundedPercent::to_string() const {
  const auto scale = pow10(precision);
  std::string s = std::to_string(units / scale);
  if (precision > 0) {
    std::string frac = std::to_string(units % scale);
    s += '.';
    s += std::string(static_cast<std::size_t>(precision) - frac.size(), '0') + frac;
  }
  return s;
}

RoundedPercent RoundedPercent::parse(const std::string& text, int precision) {
  check_precision(precision);
  const auto t = trim(text);
  const auto dot = t.find('.');
  const auto whole = t.substr(0, dot);
  const auto frac = dot == std::string_view::npos ? std::string_view{} : t.substr(dot + 1);
  auto bad = [&] { return DataError("unparsable percentage '" + text + "'"); };
  if (whole.empty() && frac.empty()) throw bad();
  if (static_cast<int>(frac.size()) > precision)
    throw DataError("percentage '" + text + "' has more than " + std::to_string(precision) +
                    " decimals");
  std::int64_t w = 0;
  if (!whole.empty()) {
    const auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
    if (ec != std::errc{} || p != whole.data() + whole.size() || w < 0) throw bad();
  }
  std::int64_t f = 0;
  if (!frac.empty()) {
    const auto [p, ec] = std::from_chars(frac.data(), frac.data() + frac.size(), f);
    if (ec != std::errc{} || p != frac.data() + frac.size() || f < 0) throw bad();
    f *= pow10(precision - static_cast<int>(frac.size()));
  }
  RoundedPercent r{w * pow10(precision) + f, precision};
  if (r.units > 100 * pow10(precision)) throw DataError("percentage '" + text + "' exceeds 100");
  return r;
}

RoundedPercent round_percent(std::int64_t k, std::int64_t n, int precision) {
  check_precision(precision);
  if (n <= 0 || k < 0 || k > n) throw DomainError("round_percent requires 0 <= k <= n, n > 0");
  const std::int64_t num = 100 * pow10(precision) * k;
  return {(2 * num + n) / (2 * n), precision};
}

std::vector<std::int64_t> matching_counts(std::int64_t n, const RoundedPercent& pct) {
  std::vector<std::int64_t> out;
  for (std::int64_t k = 0; k <= n; ++k)
    if (round_percent(k, n, pct.precision) == pct) out.push_back(k);
  return out;
}

RawCounts recover_raw(const SummaryRow& s) {
  if (s.n_miss1 < 0 || s.n_hit1 < 0) throw DomainError("condition sizes must be non-negative");
  auto normalized = [&](const std::optional<RoundedPercent>& pct) -> std::optional<RoundedPercent> {
    if (!pct) return pct;
    if (pct->precision != s.precision)
      return RoundedPercent::parse(pct->to_string(), s.precision);
    return pct;
  };
  const auto mh = unique_count(s.n_miss1, normalized(s.pct_hit2_given_miss1), s.label,
                               "hit 2nd given miss 1st");
  const auto hh = unique_count(s.n_hit1, normalized(s.pct_hit2_given_hit1), s.label,
                               "hit 2nd given hit 1st");
  return RawCounts{s.n_miss1 - mh, mh, s.n_hit1 - hh, hh};
}

SummaryRow summarize_raw(const RawCounts& raw, int precision, std::string label) {
  if (raw.mm < 0 || raw.mh < 0 || raw.hm < 0 || raw.hh < 0)
    throw DomainError("raw counts must be non-negative");
  SummaryRow s;
  s.label = std::move(label);
  s.precision = precision;
  s.n_miss1 = raw.miss_first();
  s.n_hit1 = raw.hit_first();
  if (s.n_miss1 > 0) s.pct_hit2_given_miss1 = round_percent(raw.mh, s.n_miss1, precision);
  if (s.n_hit1 > 0) s.pct_hit2_given_hit1 = round_percent(raw.hh, s.n_hit1, precision);
  return s;
}

const std::vector<CelticsRow>& celtics_counts() {
  static const std::vector<CelticsRow> rows = {
      {"Bird", {5, 48, 35, 250}},      {"Maxwell", {31, 97, 57, 245}},
      {"Parish", {29, 76, 48, 165}},   {"Archibald", {14, 62, 42, 203}},
      {"Ford", {5, 17, 15, 36}},       {"McHale", {20, 29, 35, 93}},
      {"Carr", {5, 21, 18, 39}},       {"Robey", {31, 49, 37, 54}},
      {"Henderson", {8, 29, 24, 77}},
  };
  return rows;
}

TripTable celtics_dataset() {
  std::vector<PlayerTrips> players;
  for (const auto& row : celtics_counts()) {
    PlayerTrips p{row.name, {}};
    const std::string game = "GVT-" + row.name;
    auto emit = [&](std::int64_t count, bool first, bool second) {
      for (std::int64_t i = 0; i < count; ++i) {
        const int h = static_cast<int>(p.trips.size()) + 1;
        p.trips.push_back(Trip{row.name, game, {first, second}, h, static_cast<double>(h - 1)});
      }
    };
    emit(row.counts.mm, false, false);
    emit(row.counts.mh, false, true);
    emit(row.counts.hm, true, false);
    emit(row.counts.hh, true, true);
    players.push_back(std::move(p));
  }
  return TripTable(std::move(players));
}

std::vector<SummaryRow> read_summary_rows(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<SummaryRow> rows;
  if (!std::getline(in, line)) return rows;
  ++line_no;
  const std::string expected =
      "label,n_miss1,n_hit1,pct_hit2_given_miss1,pct_hit2_given_hit1,precision";
  if (std::string(trim(line)) != expected)
    throw DataError("line 1: expected header '" + expected + "'");
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string row(trim(line));
    std::vector<std::string> f;
    std::stringstream ss(row);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.emplace_back(trim(cell));
    if (row.back() == ',') f.emplace_back();
    if (f.size() != 6)
      throw DataError("line " + std::to_string(line_no) + ": expected 6 fields, got " +
                      std::to_string(f.size()));
    try {
      SummaryRow s;
      s.label = f[0];
      s.n_miss1 = std::stoll(f[1]);
      s.n_hit1 = std::stoll(f[2]);
      s.precision = std::stoi(f[5]);
      if (!f[3].empty()) s.pct_hit2_given_miss1 = RoundedPercent::parse(f[3], s.precision);
      if (!f[4].empty()) s.pct_hit2_given_hit1 = RoundedPercent::parse(f[4], s.precision);
      rows.push_back(std::move(s));
    } catch (const std::logic_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace ftheat
