#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ftheat/error.hpp"
#include "ftheat/ingest.hpp"

namespace ftheat {

/// Outcome counts of two-shot trips: first letter is shot 1, second shot 2.
struct RawCounts {
  std::int64_t mm = 0;
  std::int64_t mh = 0;
  std::int64_t hm = 0;
  std::int64_t hh = 0;

  std::int64_t total() const { return mm + mh + hm + hh; }
  std::int64_t miss_first() const { return mm + mh; }
  std::int64_t hit_first() const { return hm + hh; }
  std::int64_t hit_second() const { return mh + hh; }

  friend bool operator==(const RawCounts&, const RawCounts&) = default;
};

/// A percentage rounded to `precision` decimals, held exactly as an integer
/// number of 10^-precision percent units (75.8 at precision 1 -> 758).
struct RoundedPercent {
  std::int64_t units = 0;
  int precision = 1;

  double value() const;
  std::string to_string() const;
  /// Parses "75.8" (any number of decimals up to `precision`) exactly.
  static RoundedPercent parse(const std::string& text, int precision);

  friend bool operator==(const RoundedPercent&, const RoundedPercent&) = default;
};

/// Published conditional summary of one player's two-shot trips.
struct SummaryRow {
  std::string label;
  std::int64_t n_miss1 = 0;
  std::int64_t n_hit1 = 0;
  std::optional<RoundedPercent> pct_hit2_given_miss1;  // absent when n_miss1 == 0
  std::optional<RoundedPercent> pct_hit2_given_hit1;   // absent when n_hit1 == 0
  int precision = 1;
};

/// Thrown when more than one integer count matches a rounded percentage.
class AmbiguousSummary : public DataError {
public:
  AmbiguousSummary(const std::string& what, std::vector<std::int64_t> candidates)
      : DataError(what), candidates_(std::move(candidates)) {}
  const std::vector<std::int64_t>& candidates() const { return candidates_; }

private:
  std::vector<std::int64_t> candidates_;
};

/// round-half-away-from-zero of 100*k/n at `precision` decimals, exact.
RoundedPercent round_percent(std::int64_t k, std::int64_t n, int precision);

/// Every k in [0, n] whose rounded percentage equals `pct`.
std::vector<std::int64_t> matching_counts(std::int64_t n, const RoundedPercent& pct);

/// Recovers the unique raw counts behind a summary row, verifying uniqueness
/// by full enumeration. Throws DataError ("inconsistent summary") when no
/// count matches and AmbiguousSummary when several do.
RawCounts recover_raw(const SummaryRow& summary);

/// Inverse direction: rounds the two conditional percentages.
SummaryRow summarize_raw(const RawCounts& raw, int precision, std::string label = {});

/// One row of the nine-player Boston Celtics pair table.
struct CelticsRow {
  std::string name;
  RawCounts counts;
};

/// The recovered 2x2 counts for the nine Celtics players (1980-82). Bird's
/// and Parish's hit-then-miss cells carry the values implied by their
/// published N, H1 and H2 (35 and 48); see README.
const std::vector<CelticsRow>& celtics_counts();

/// Expands celtics_counts() into trips: one synthetic game per player,
/// trips ordered MM, MH, HM, HH, one second apart.
TripTable celtics_dataset();

/// Reads summary rows from "label,n_miss1,n_hit1,pct_hit2_given_miss1,
/// pct_hit2_given_hit1,precision" CSV (empty pct field = absent).
std::vector<SummaryRow> read_summary_rows(std::istream& in);

}  // namespace ftheat
