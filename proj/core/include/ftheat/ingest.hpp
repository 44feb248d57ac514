#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace ftheat {

/// Seconds in regulation (four 12-minute quarters); later times are overtime.
inline constexpr double kRegulationSeconds = 2880.0;

/// One free throw as it appears in a play-by-play event file.
struct FreeThrowEvent {
  std::string game_id;
  std::string player_id;
  double elapsed_seconds = 0.0;
  int shot_in_trip = 1;
  int shots_in_trip = 1;
  bool made = false;

  friend bool operator==(const FreeThrowEvent&, const FreeThrowEvent&) = default;
};

/// One visit to the line: the ordered outcomes of consecutive free throws.
struct Trip {
  std::string player_id;
  std::string game_id;
  std::vector<bool> outcomes;
  int intra_game_index = 1;    // h: 1 + earlier trips by this player in this game
  double elapsed_seconds = 0;  // time of the first shot

  std::size_t shots() const { return outcomes.size(); }
  friend bool operator==(const Trip&, const Trip&) = default;
};

struct PlayerTrips {
  std::string player_id;
  std::vector<Trip> trips;  // chronological

  /// N_ih: trips with at least `h` shots.
  std::size_t trips_with_at_least(std::size_t h) const;
  friend bool operator==(const PlayerTrips&, const PlayerTrips&) = default;
};

/// Trips grouped by player, players in order of first appearance.
/// Immutable once built; share freely across readers.
class TripTable {
public:
  TripTable() = default;
  explicit TripTable(std::vector<PlayerTrips> players);

  const std::vector<PlayerTrips>& players() const { return players_; }
  std::size_t player_count() const { return players_.size(); }
  std::size_t trip_count() const;
  std::size_t shot_count() const;
  /// Sum over players of N_ih.
  std::size_t trips_with_at_least(std::size_t h) const;

  const PlayerTrips* find(const std::string& player_id) const;

  friend bool operator==(const TripTable&, const TripTable&) = default;

private:
  std::vector<PlayerTrips> players_;
};

/// Column names of the event file, in canonical order.
inline constexpr std::array<const char*, 6> kEventColumns = {
    "game_id", "player_id", "elapsed_seconds", "shot_in_trip", "shots_in_trip", "made"};

/// Parses a comma-delimited event file. Rows must already be ordered: each
/// game is one contiguous block and times never decrease inside it.
/// Throws DataError naming the offending line.
std::vector<FreeThrowEvent> parse_events(std::istream& in);

/// Groups ordered events into trips and assigns intra-game trip indices.
/// Throws DataError on incomplete trips, duplicates, or ordering problems.
TripTable derive_trips(const std::vector<FreeThrowEvent>& events);

/// Flattens a table back to events, ordered by game (first appearance),
/// then time, then player. derive_trips(to_events(t)) == t.
std::vector<FreeThrowEvent> to_events(const TripTable& table);

/// Writes events in the canonical file format (header + LF rows).
void write_events(std::ostream& out, const std::vector<FreeThrowEvent>& events);

/// Convenience: parse + derive.
TripTable read_trip_table(std::istream& in);
void write_trip_table(std::ostream& out, const TripTable& table);

}  // namespace ftheat
