#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The Priority Pass Simulator Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "ppass/error.hpp"
#include "ppass/netgrid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <utility>
#include <vector>

namespace ppass {

enum class SignalEventKind : std::uint8_t
{
  green_start,
  transition_start,
};

constexpr std::string_view to_string(SignalEventKind k)
{
  return k == SignalEventKind::green_start ? "green_start" : "transition_start";
}

/// For transition_start, `phase` is the phase being transitioned to.
struct SignalEvent
{
  long clock{};
  int intersection{};
  SignalEventKind kind{};
  int phase{};

  friend bool operator==(SignalEvent const &, SignalEvent const &) = default;
};

struct SignalState
{
  int phase{};
  bool green{};
};

/// Vehicle counts on the incoming links of one intersection, attributed to
/// the phase of each vehicle's next movement.
struct PhaseObservation
{
  std::array<int, kPhaseCount> n{};
  std::array<int, kPhaseCount> e{};
};

inline double compute_bid(PhaseObservation const &obs, int phase, double tau)
{
  auto const p = static_cast<std::size_t>(phase);
  return (1.0 - tau) * obs.n[p] + tau * obs.e[p];
}

struct AuctionParams
{
  double tau{0.0};
  int min_green{10};         // seconds
  int auction_interval{5};   // seconds
  int max_red{120};          // seconds
  int transition{3};         // seconds
};

inline void validate(AuctionParams const &p)
{
  if (!(p.tau >= 0.0 && p.tau <= 1.0))
  {
    throw Error(ErrorKind::invalid_argument, "tau must lie in [0, 1]");
  }
  if (p.min_green <= 0 || p.auction_interval <= 0 || p.max_red <= 0 || p.transition <= 0)
  {
    throw Error(ErrorKind::invalid_argument, "auction durations must be positive");
  }
}

struct FixedCycleParams
{
  int through_left_green{20};
  int right_green{10};
  int transition{3};
  std::array<int, kPhaseCount> order{0, 1, 2, 3};

  int green_of(int phase) const
  {
    return (phase % 2 == 0) ? through_left_green : right_green;
  }

  int cycle_length() const
  {
    int c = 0;
    for (int p : order)
    {
      c += green_of(p) + transition;
    }
    return c;
  }
};

inline void validate(FixedCycleParams const &p)
{
  if (p.through_left_green <= 0 || p.right_green <= 0 || p.transition < 0)
  {
    throw Error(ErrorKind::invalid_argument, "fixed-cycle durations must be positive");
  }
}

/// Offset of the half-cycle shift used on alternate cells of the grid.
inline int chessboard_offset(int row, int col, FixedCycleParams const &p)
{
  return ((row + col) % 2 == 1) ? (p.through_left_green + p.right_green) / 2 : 0;
}

enum class PhaseStatus : std::uint8_t
{
  green,
  transition,
};

struct ControllerState
{
  int current_phase{0};
  PhaseStatus status{PhaseStatus::green};
  int green_elapsed{0};
  int transition_remaining{0};
  std::array<int, kPhaseCount> red_elapsed{};
  int target_phase{0};
};

/// Raised when more than one phase is at risk of exceeding the maximum red
/// time at a switching decision; only one of them can be served next.
struct ContentionEvent
{
  long clock{};
  int intersection{};
  std::uint8_t phases{};  // bit mask of at-risk phases
};

enum class BidRule : std::uint8_t
{
  max_pressure,   // bid = vehicle count
  priority_pass,  // bid = (1 - tau) n + tau e
};

/// Auction-driven signal controller. Max-Pressure and Priority Pass share the
/// timing logic and differ only in how bids are formed.
class AuctionController
{
public:
  AuctionController(int intersection, BidRule rule, AuctionParams params)
    : intersection_(intersection)
    , rule_(rule)
    , params_(params)
  {
    validate(params_);
  }

  /// Called once per simulated second with the clock at the start of the step;
  /// the returned state holds for that step.
  SignalState tick(long clock, PhaseObservation const &obs, std::vector<SignalEvent> &log)
  {
    if (!started_)
    {
      started_ = true;
      log.push_back({clock, intersection_, SignalEventKind::green_start, st_.current_phase});
      return signal();
    }

    if (st_.status == PhaseStatus::transition)
    {
      --st_.transition_remaining;
      for (int q = 0; q < kPhaseCount; ++q)
      {
        if (q != st_.target_phase)
        {
          ++red(q);
        }
      }
      if (st_.transition_remaining <= 0)
      {
        st_.status        = PhaseStatus::green;
        st_.current_phase = st_.target_phase;
        st_.green_elapsed = 0;
        red(st_.current_phase) = 0;
        log.push_back({clock, intersection_, SignalEventKind::green_start, st_.current_phase});
      }
      return signal();
    }

    ++st_.green_elapsed;
    for (int q = 0; q < kPhaseCount; ++q)
    {
      if (q != st_.current_phase)
      {
        ++red(q);
      }
    }
    if (st_.green_elapsed < params_.min_green)
    {
      return signal();
    }

    bool violation = false;
    for (int q = 0; q < kPhaseCount; ++q)
    {
      violation = violation || (q != st_.current_phase && red(q) >= params_.max_red);
    }
    if (violation)
    {
      ++max_red_switches_;
      begin_transition(clock, guarded_target(clock, most_overdue(params_.max_red)), log);
      return signal();
    }

    if ((st_.green_elapsed - params_.min_green) % params_.auction_interval == 0)
    {
      ++auctions_;
      if (trace_auctions_)
      {
        auction_marks_.push_back(st_.green_elapsed);
      }
      int const winner = auction(obs);
      if (winner != st_.current_phase)
      {
        begin_transition(clock, guarded_target(clock, winner), log);
      }
    }
    return signal();
  }

  SignalState signal() const
  {
    return st_.status == PhaseStatus::green ? SignalState{st_.current_phase, true}
                                            : SignalState{st_.target_phase, false};
  }

  double bid(PhaseObservation const &obs, int phase) const
  {
    if (rule_ == BidRule::max_pressure)
    {
      return static_cast<double>(obs.n[static_cast<std::size_t>(phase)]);
    }
    return compute_bid(obs, phase, params_.tau);
  }

  /// First-price auction over all phases. Equal bids are compared on the
  /// plain vehicle count; the current phase keeps the green on a full tie;
  /// full ties among challengers go to the longest red, then the lowest index.
  /// Bids within a relative 1e-9 count as equal, so rescaling the counts does
  /// not change the winner through rounding.
  int auction(PhaseObservation const &obs) const
  {
    std::array<double, kPhaseCount> bids{};
    for (int q = 0; q < kPhaseCount; ++q)
    {
      bids[static_cast<std::size_t>(q)] = bid(obs, q);
    }
    // -1, 0 or 1 as phase a's key is below, equal to or above phase b's.
    auto cmp = [&](int a, int b) {
      double const x = bids[static_cast<std::size_t>(a)];
      double const y = bids[static_cast<std::size_t>(b)];
      if (std::abs(x - y) > 1e-9 * std::max({1.0, std::abs(x), std::abs(y)}))
      {
        return x < y ? -1 : 1;
      }
      int const na = obs.n[static_cast<std::size_t>(a)];
      int const nb = obs.n[static_cast<std::size_t>(b)];
      return na < nb ? -1 : (na > nb ? 1 : 0);
    };
    int winner = -1;
    for (int q = 0; q < kPhaseCount; ++q)
    {
      if (q == st_.current_phase)
      {
        continue;
      }
      int const c = winner < 0 ? 1 : cmp(q, winner);
      if (c > 0 || (c == 0 && red(q) > red(winner)))
      {
        winner = q;
      }
    }
    if (winner < 0 || cmp(winner, st_.current_phase) <= 0)
    {
      return st_.current_phase;
    }
    return winner;
  }

  ControllerState const &state() const
  {
    return st_;
  }

  AuctionParams const &params() const
  {
    return params_;
  }

  void trace_auctions(bool on)
  {
    trace_auctions_ = on;
  }

  std::vector<int> const &auction_marks() const
  {
    return auction_marks_;
  }

  long auctions() const
  {
    return auctions_;
  }

  long max_red_switches() const
  {
    return max_red_switches_;
  }

  long guard_overrides() const
  {
    return guard_overrides_;
  }

  std::vector<ContentionEvent> const &contentions() const
  {
    return contentions_;
  }

private:
  int &red(int q)
  {
    return st_.red_elapsed[static_cast<std::size_t>(q)];
  }

  int red(int q) const
  {
    return st_.red_elapsed[static_cast<std::size_t>(q)];
  }

  /// Phase with the longest red among those with red >= threshold.
  int most_overdue(int threshold) const
  {
    int pick = -1;
    for (int q = 0; q < kPhaseCount; ++q)
    {
      if (q != st_.current_phase && red(q) >= threshold && (pick < 0 || red(q) > red(pick)))
      {
        pick = q;
      }
    }
    return pick;
  }

  /// A phase whose red would pass max_red before the next phase finishes its
  /// minimum green is served first.
  int guarded_target(long clock, int target)
  {
    int const risk = params_.max_red - params_.transition - params_.min_green + 1;
    std::uint8_t mask = 0;
    int count         = 0;
    for (int q = 0; q < kPhaseCount; ++q)
    {
      if (q != st_.current_phase && red(q) >= risk)
      {
        mask = static_cast<std::uint8_t>(mask | (1u << q));
        ++count;
      }
    }
    if (count == 0)
    {
      return target;
    }
    if (count > 1)
    {
      contentions_.push_back({clock, intersection_, mask});
    }
    int const pick = most_overdue(risk);
    if (pick != target)
    {
      ++guard_overrides_;
    }
    return pick;
  }

  void begin_transition(long clock, int target, std::vector<SignalEvent> &log)
  {
    st_.status               = PhaseStatus::transition;
    st_.transition_remaining = params_.transition;
    st_.target_phase         = target;
    st_.green_elapsed        = 0;
    log.push_back({clock, intersection_, SignalEventKind::transition_start, target});
  }

  int intersection_;
  BidRule rule_;
  AuctionParams params_;
  ControllerState st_{};
  bool started_{false};
  bool trace_auctions_{false};
  std::vector<int> auction_marks_;
  std::vector<ContentionEvent> contentions_;
  long auctions_{0};
  long max_red_switches_{0};
  long guard_overrides_{0};
};

/// Fixed-time plan: P1, P2, P3, P4 with a transition after each, shifted by a
/// per-intersection offset.
class FixedCycleController
{
public:
  FixedCycleController(int intersection, FixedCycleParams params, int offset)
    : intersection_(intersection)
    , params_(params)
    , offset_(offset)
  {
    validate(params_);
  }

  SignalState tick(long clock, PhaseObservation const & /*obs*/, std::vector<SignalEvent> &log)
  {
    auto [state, since] = at(clock);
    if (!started_ || state.phase != last_.phase || state.green != last_.green)
    {
      long const start = started_ ? clock : clock - since;
      log.push_back({start, intersection_,
                     state.green ? SignalEventKind::green_start : SignalEventKind::transition_start,
                     state.phase});
    }
    started_ = true;
    last_    = state;
    return state;
  }

  /// Signal at `clock` and seconds since that signal began.
  std::pair<SignalState, long> at(long clock) const
  {
    long const cycle = params_.cycle_length();
    long pos         = (clock - offset_) % cycle;
    if (pos < 0)
    {
      pos += cycle;
    }
    long start = 0;
    for (std::size_t k = 0; k < params_.order.size(); ++k)
    {
      int const phase = params_.order[k];
      long const g    = params_.green_of(phase);
      if (pos < start + g)
      {
        return {{phase, true}, pos - start};
      }
      start += g;
      if (pos < start + params_.transition)
      {
        return {{params_.order[(k + 1) % params_.order.size()], false}, pos - start};
      }
      start += params_.transition;
    }
    return {{params_.order[0], true}, 0};
  }

  FixedCycleParams const &params() const
  {
    return params_;
  }

  int offset() const
  {
    return offset_;
  }

private:
  int intersection_;
  FixedCycleParams params_;
  int offset_;
  bool started_{false};
  SignalState last_{};
};

enum class ControllerKind : std::uint8_t
{
  fixed_cycle,
  max_pressure,
  priority_pass,
};

constexpr std::string_view to_string(ControllerKind k)
{
  switch (k)
  {
  case ControllerKind::fixed_cycle:
    return "fixed_cycle";
  case ControllerKind::max_pressure:
    return "max_pressure";
  case ControllerKind::priority_pass:
    return "priority_pass";
  }
  return "?";
}

struct ControllerSpec
{
  ControllerKind kind{ControllerKind::max_pressure};
  FixedCycleParams fixed{};
  bool chessboard_offsets{true};
  AuctionParams auction{};
};

using Controller = std::variant<FixedCycleController, AuctionController>;

inline std::vector<Controller> make_controllers(Network const &net, ControllerSpec const &spec)
{
  std::vector<Controller> out;
  out.reserve(net.intersections.size());
  for (auto const &in : net.intersections)
  {
    switch (spec.kind)
    {
    case ControllerKind::fixed_cycle:
      out.emplace_back(std::in_place_type<FixedCycleController>, in.node, spec.fixed,
                       spec.chessboard_offsets ? chessboard_offset(in.row, in.col, spec.fixed) : 0);
      break;
    case ControllerKind::max_pressure:
      out.emplace_back(std::in_place_type<AuctionController>, in.node, BidRule::max_pressure,
                       spec.auction);
      break;
    case ControllerKind::priority_pass:
      out.emplace_back(std::in_place_type<AuctionController>, in.node, BidRule::priority_pass,
                       spec.auction);
      break;
    }
  }
  return out;
}

}  // namespace ppass
