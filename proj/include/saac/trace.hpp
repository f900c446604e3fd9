#pragma once

#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "saac/auction.hpp"

namespace saac {

// Line-oriented auction trace.
//
//   saac-trace 1 <n_bidders> <m_items> <epsilon>
//   <round>\t<price ticks>\t<winners>\t<eligibility>\t<bids>
//
// Each list is comma separated. Winners are bidder indices or '-' for the
// auctioneer; bids are item bitmasks in decimal (bit j = item j). One line is
// written per resolved round, describing the state after resolution together
// with the bids submitted in that round.
struct AuctionTrace {
  AuctionConfig config;
  std::vector<RoundRecord> rounds;

  bool operator==(const AuctionTrace& o) const {
    return config.n_bidders == o.config.n_bidders && config.m_items == o.config.m_items &&
           config.epsilon == o.config.epsilon && rounds == o.rounds;
  }
};

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T, class Fmt>
void write_list(std::string& out, const std::vector<T>& xs, Fmt fmt) {
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (k) out += ',';
    out += fmt(xs[k]);
  }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

template <class T>
T parse_number(const std::string& s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw TraceFormatError("bad number in trace: '" + s + "'");
  return value;
}

}  // namespace detail

inline std::string format_money(Money x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string write_trace(const AuctionTrace& trace) {
  std::string out = "saac-trace 1 " + std::to_string(trace.config.n_bidders) + " " +
                    std::to_string(trace.config.m_items) + " " + format_money(trace.config.epsilon) + "\n";
  for (const auto& r : trace.rounds) {
    out += std::to_string(r.round);
    out += '\t';
    detail::write_list(out, r.prices, [](Ticks t) { return std::to_string(t); });
    out += '\t';
    detail::write_list(out, r.winners, [](int w) { return w == kAuctioneer ? std::string("-") : std::to_string(w); });
    out += '\t';
    detail::write_list(out, r.eligibility, [](int e) { return std::to_string(e); });
    out += '\t';
    detail::write_list(out, r.bids, [](ItemSet b) { return std::to_string(b); });
    out += '\n';
  }
  return out;
}

inline AuctionTrace parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw TraceFormatError("empty trace");
  AuctionTrace trace;
  {
    std::istringstream hdr(line);
    std::string magic;
    int version = 0;
    if (!(hdr >> magic >> version >> trace.config.n_bidders >> trace.config.m_items >> trace.config.epsilon) ||
        magic != "saac-trace" || version != 1)
      throw TraceFormatError("bad trace header");
  }
  const auto n = static_cast<std::size_t>(trace.config.n_bidders);
  const auto m = static_cast<std::size_t>(trace.config.m_items);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 5) throw TraceFormatError("trace record needs 5 fields");
    RoundRecord r;
    r.round = detail::parse_number<int>(fields[0]);
    for (const auto& s : detail::split(fields[1], ',')) r.prices.push_back(detail::parse_number<Ticks>(s));
    for (const auto& s : detail::split(fields[2], ','))
      r.winners.push_back(s == "-" ? kAuctioneer : detail::parse_number<int>(s));
    for (const auto& s : detail::split(fields[3], ',')) r.eligibility.push_back(detail::parse_number<int>(s));
    for (const auto& s : detail::split(fields[4], ',')) r.bids.push_back(detail::parse_number<ItemSet>(s));
    if (r.prices.size() != m || r.winners.size() != m || r.eligibility.size() != n || r.bids.size() != n)
      throw TraceFormatError("trace record has wrong list lengths");
    trace.rounds.push_back(std::move(r));
  }
  return trace;
}

// Re-applies the recorded bids with the recorded winners and checks every
// record against the recomputed state. Returns the final state.
inline AuctionState replay_trace(const AuctionTrace& trace, std::span<const BidderProfile> profiles) {
  AuctionState state = AuctionState::initial(trace.config);
  for (const auto& r : trace.rounds) {
    validate_joint_bid(state, r.bids, profiles);
    detail::resolve_round(state, r.bids, [&](int item, const int* cand, int count) {
      for (int k = 0; k < count; ++k)
        if (cand[k] == r.winners[item]) return k;
      throw TraceFormatError("recorded winner did not bid on item " + std::to_string(item));
    });
    if (state.round != r.round || state.prices != r.prices || state.winner != r.winners)
      throw TraceFormatError("trace record " + std::to_string(r.round) + " does not match replay");
    if (!state.terminal && state.eligibility != r.eligibility)
      throw TraceFormatError("trace record " + std::to_string(r.round) + " eligibility mismatch");
  }
  return state;
}

}  // namespace saac
