#include "ftheat/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "ftheat/error.hpp"

namespace ftheat {

std::size_t PlayerTrips::trips_with_at_least(std::size_t h) const {
  return static_cast<std::size_t>(std::count_if(
      trips.begin(), trips.end(), [h](const Trip& t) { return t.shots() >= h; }));
}

TripTable::TripTable(std::vector<PlayerTrips> players) : players_(std::move(players)) {}

std::size_t TripTable::trip_count() const {
  std::size_t n = 0;
  for (const auto& p : players_) n += p.trips.size();
  return n;
}

std::size_t TripTable::shot_count() const {
  std::size_t n = 0;
  for (const auto& p : players_)
    for (const auto& t : p.trips) n += t.shots();
  return n;
}

std::size_t TripTable::trips_with_at_least(std::size_t h) const {
  std::size_t n = 0;
  for (const auto& p : players_) n += p.trips_with_at_least(h);
  return n;
}

const PlayerTrips* TripTable::find(const std::string& player_id) const {
  for (const auto& p : players_)
    if (p.player_id == player_id) return &p;
  return nullptr;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

int parse_int(std::string_view text, std::size_t line, const char* column) {
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty())
    fail_at(line, std::string("unparsable ") + column + " '" + std::string(text) + "'");
  return value;
}

double parse_double(std::string_view text, std::size_t line, const char* column) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty() || !std::isfinite(value))
    fail_at(line, std::string("unparsable ") + column + " '" + std::string(text) + "'");
  return value;
}

// Tracks game contiguity and time monotonicity over an event stream.
class OrderChecker {
public:
  // Returns an empty string when `e` may follow the events seen so far.
  std::string check(const FreeThrowEvent& e) {
    if (!current_game_ || *current_game_ != e.game_id) {
      if (closed_games_.count(e.game_id))
        return "game '" + e.game_id + "' reappears after its block ended (input must be grouped by game)";
      if (current_game_) closed_games_.insert(*current_game_);
      current_game_ = e.game_id;
      last_time_ = e.elapsed_seconds;
      return {};
    }
    if (e.elapsed_seconds < last_time_) {
      std::ostringstream msg;
      msg << "out-of-order row: elapsed_seconds " << e.elapsed_seconds << " precedes "
          << last_time_ << " in game '" << e.game_id << "'";
      return msg.str();
    }
    last_time_ = e.elapsed_seconds;
    return {};
  }

private:
  std::optional<std::string> current_game_;
  std::unordered_set<std::string> closed_games_;
  double last_time_ = 0.0;
};

std::string describe(const FreeThrowEvent& e) {
  std::ostringstream s;
  s << "player '" << e.player_id << "' game '" << e.game_id << "' at " << e.elapsed_seconds
    << "s";
  return s.str();
}

void append_double(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

std::vector<FreeThrowEvent> parse_events(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("line 1: missing header row");
  ++line_no;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = split(line);
  if (header.size() != kEventColumns.size())
    fail_at(line_no, "header must name exactly the six columns game_id,player_id,"
                     "elapsed_seconds,shot_in_trip,shots_in_trip,made");
  std::array<std::size_t, 6> column_of{};
  for (std::size_t c = 0; c < kEventColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), std::string_view(kEventColumns[c]));
    if (it == header.end())
      fail_at(line_no, std::string("header lacks column '") + kEventColumns[c] + "'");
    column_of[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<FreeThrowEvent> events;
  OrderChecker order;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != kEventColumns.size())
      fail_at(line_no, "expected 6 fields, got " + std::to_string(fields.size()));

    FreeThrowEvent e;
    e.game_id = std::string(fields[column_of[0]]);
    e.player_id = std::string(fields[column_of[1]]);
    if (e.game_id.empty()) fail_at(line_no, "empty game_id");
    if (e.player_id.empty()) fail_at(line_no, "empty player_id");
    e.elapsed_seconds = parse_double(fields[column_of[2]], line_no, "elapsed_seconds");
    e.shot_in_trip = parse_int(fields[column_of[3]], line_no, "shot_in_trip");
    e.shots_in_trip = parse_int(fields[column_of[4]], line_no, "shots_in_trip");
    const auto made = fields[column_of[5]];
    if (made == "1") {
      e.made = true;
    } else if (made == "0") {
      e.made = false;
    } else {
      fail_at(line_no, "made must be 0 or 1, got '" + std::string(made) + "'");
    }

    if (e.elapsed_seconds < 0) fail_at(line_no, "negative elapsed_seconds");
    if (e.shots_in_trip < 1) fail_at(line_no, "shots_in_trip must be >= 1");
    if (e.shot_in_trip < 1) fail_at(line_no, "shot_in_trip must be >= 1");
    if (e.shot_in_trip > e.shots_in_trip)
      fail_at(line_no, "shot_in_trip " + std::to_string(e.shot_in_trip) +
                           " exceeds shots_in_trip " + std::to_string(e.shots_in_trip));
    if (auto problem = order.check(e); !problem.empty()) fail_at(line_no, problem);
    events.push_back(std::move(e));
  }
  return events;
}

TripTable derive_trips(const std::vector<FreeThrowEvent>& events) {
  std::vector<PlayerTrips> players;
  std::unordered_map<std::string, std::size_t> player_index;
  std::map<std::pair<std::string, std::string>, int> trips_in_game;  // (player, game) -> count
  std::set<std::tuple<std::string, std::string, double, int>> seen;
  OrderChecker order;

  std::optional<Trip> open;
  const FreeThrowEvent* open_first = nullptr;
  int open_expected = 0;
  int open_total = 0;

  auto close_trip = [&] {
    auto [it, inserted] = player_index.try_emplace(open->player_id, players.size());
    if (inserted) players.push_back(PlayerTrips{open->player_id, {}});
    int& count = trips_in_game[{open->player_id, open->game_id}];
    open->intra_game_index = ++count;
    players[it->second].trips.push_back(std::move(*open));
    open.reset();
    open_first = nullptr;
  };

  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.shot_in_trip < 1 || e.shots_in_trip < 1 || e.shot_in_trip > e.shots_in_trip)
      throw DataError("event " + std::to_string(i + 1) + ": invalid shot index for " + describe(e));
    if (auto problem = order.check(e); !problem.empty())
      throw DataError("event " + std::to_string(i + 1) + ": " + problem);
    if (!seen.emplace(e.game_id, e.player_id, e.elapsed_seconds, e.shot_in_trip).second)
      throw DataError("duplicate event: shot " + std::to_string(e.shot_in_trip) + " for " +
                      describe(e));

    if (open) {
      const bool continues = e.game_id == open->game_id && e.player_id == open->player_id &&
                             e.shots_in_trip == open_total && e.shot_in_trip == open_expected;
      if (!continues)
        throw DataError("incomplete trip: " + describe(*open_first) + " is missing shot " +
                        std::to_string(open_expected) + " of " + std::to_string(open_total));
      open->outcomes.push_back(e.made);
      ++open_expected;
    } else {
      if (e.shot_in_trip != 1)
        throw DataError("incomplete trip: " + describe(e) + " starts at shot " +
                        std::to_string(e.shot_in_trip) + " of " +
                        std::to_string(e.shots_in_trip) + " (shot 1 missing)");
      open = Trip{e.player_id, e.game_id, {e.made}, 0, e.elapsed_seconds};
      open_first = &e;
      open_expected = 2;
      open_total = e.shots_in_trip;
    }
    if (open && open_expected > open_total) close_trip();
  }
  if (open)
    throw DataError("incomplete trip: " + describe(*open_first) + " is missing shot " +
                    std::to_string(open_expected) + " of " + std::to_string(open_total));
  return TripTable(std::move(players));
}

std::vector<FreeThrowEvent> to_events(const TripTable& table) {
  // Order games so every player's trip sequence stays chronological: a
  // topological sort of "game A precedes game B for some player", breaking
  // ties by first encounter.
  std::unordered_map<std::string, std::size_t> game_ordinal;
  std::vector<std::string> games;
  for (const auto& p : table.players())
    for (const auto& t : p.trips)
      if (game_ordinal.try_emplace(t.game_id, games.size()).second) games.push_back(t.game_id);

  std::vector<std::set<std::size_t>> successors(games.size());
  std::vector<std::size_t> indegree(games.size(), 0);
  for (const auto& p : table.players()) {
    for (std::size_t j = 1; j < p.trips.size(); ++j) {
      const auto a = game_ordinal[p.trips[j - 1].game_id];
      const auto b = game_ordinal[p.trips[j].game_id];
      if (a != b && successors[a].insert(b).second) ++indegree[b];
    }
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t g = 0; g < games.size(); ++g)
    if (indegree[g] == 0) ready.push(g);
  std::vector<std::size_t> game_rank(games.size());
  std::size_t rank = 0;
  while (!ready.empty()) {
    const auto g = ready.top();
    ready.pop();
    game_rank[g] = rank++;
    for (const auto s : successors[g])
      if (--indegree[s] == 0) ready.push(s);
  }
  if (rank != games.size())
    throw DataError("trip table has no consistent game ordering (a player revisits a game)");

  struct Ref {
    std::size_t game_rank;
    double time;
    std::size_t player;
    int h;
    const Trip* trip;
  };
  std::vector<Ref> refs;
  for (std::size_t pi = 0; pi < table.players().size(); ++pi)
    for (const auto& t : table.players()[pi].trips)
      refs.push_back({game_rank[game_ordinal[t.game_id]], t.elapsed_seconds, pi,
                      t.intra_game_index, &t});
  std::stable_sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) {
    return std::tie(a.game_rank, a.time, a.player, a.h) <
           std::tie(b.game_rank, b.time, b.player, b.h);
  });

  std::vector<FreeThrowEvent> events;
  events.reserve(table.shot_count());
  for (const auto& r : refs) {
    const int n = static_cast<int>(r.trip->shots());
    for (int k = 0; k < n; ++k)
      events.push_back({r.trip->game_id, r.trip->player_id, r.trip->elapsed_seconds, k + 1, n,
                        static_cast<bool>(r.trip->outcomes[static_cast<std::size_t>(k)])});
  }
  return events;
}

void write_events(std::ostream& out, const std::vector<FreeThrowEvent>& events) {
  std::string buffer = "game_id,player_id,elapsed_seconds,shot_in_trip,shots_in_trip,made\n";
  for (const auto& e : events) {
    buffer += e.game_id;
    buffer += ',';
    buffer += e.player_id;
    buffer += ',';
    append_double(buffer, e.elapsed_seconds);
    buffer += ',';
    buffer += std::to_string(e.shot_in_trip);
    buffer += ',';
    buffer += std::to_string(e.shots_in_trip);
    buffer += e.made ? ",1\n" : ",0\n";
    if (buffer.size() > (1u << 16)) {
      out << buffer;
      buffer.clear();
    }
  }
  out << buffer;
}

TripTable read_trip_table(std::istream& in) { return derive_trips(parse_events(in)); }

void write_trip_table(std::ostream& out, const TripTable& table) {
  write_events(out, to_events(table));
}

}  // namespace ftheat
