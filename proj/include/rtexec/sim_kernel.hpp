// Copyright 2026 The rtexec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RTEXEC__SIM_KERNEL_HPP_
#define RTEXEC__SIM_KERNEL_HPP_

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "rtexec/errors.hpp"
#include "rtexec/time.hpp"

namespace rtexec
{

struct ThreadId
{
  std::uint32_t value{0};
  auto operator<=>(const ThreadId &) const = default;
};

struct LockId
{
  std::uint32_t value{0};
  auto operator<=>(const LockId &) const = default;
};

/// A middleware message.
/**
 * `origin_time` is the publish time of the request that ultimately caused
 * this message; replies inherit it so round-trip latency can be measured.
 */
struct Message
{
  std::string topic;
  std::uint64_t seq{0};
  TimeNs publish_time;
  TimeNs origin_time;

  bool operator==(const Message &) const = default;
};

namespace event
{
struct Replenishment
{
  ThreadId thread;
  TimeNs amount;
};
struct BudgetExhaustion
{
  ThreadId thread;
};
struct LockRelease
{
  LockId lock;
};
/// End of a CPU burst requested by a thread (callback work or middleware cost).
struct CallbackCompletion
{
  ThreadId thread;
};
/// Wake-up of a blocked thread: executor wait timeout or callback sleep.
struct Timer
{
  ThreadId thread;
};
struct MessageArrival
{
  Message message;
};
struct SimulationEnd
{
};
}  // namespace event

/// Event payload. The alternative index is the kind rank used to order
/// simultaneous events, so the declaration order below is load-bearing:
/// Replenishment < BudgetExhaustion < LockRelease < CallbackCompletion
/// < Timer < MessageArrival < SimulationEnd.
using EventKind = std::variant<
  event::Replenishment,
  event::BudgetExhaustion,
  event::LockRelease,
  event::CallbackCompletion,
  event::Timer,
  event::MessageArrival,
  event::SimulationEnd>;

inline std::size_t kind_rank(const EventKind & kind) {return kind.index();}

struct Event
{
  TimeNs due;
  std::uint64_t seq{0};
  EventKind kind;
};

struct EventHandle
{
  std::uint64_t seq{0};
  auto operator<=>(const EventHandle &) const = default;
};

enum class CancelResult { Confirmed, AlreadyFired };

/// Totally ordered pending-event set keyed by (due, kind rank, seq).
class EventQueue
{
public:
  EventHandle push(TimeNs due, EventKind kind)
  {
    const auto seq = next_seq_++;
    Key key{due, kind_rank(kind), seq};
    events_.emplace(key, Event{due, seq, std::move(kind)});
    index_.emplace(seq, key);
    return EventHandle{seq};
  }

  CancelResult cancel(EventHandle handle)
  {
    auto it = index_.find(handle.seq);
    if (it == index_.end()) {
      return CancelResult::AlreadyFired;
    }
    events_.erase(it->second);
    index_.erase(it);
    return CancelResult::Confirmed;
  }

  bool contains(EventHandle handle) const {return index_.count(handle.seq) != 0;}
  bool empty() const {return events_.empty();}
  std::size_t size() const {return events_.size();}
  const Event & top() const {return events_.begin()->second;}

  Event pop()
  {
    auto node = events_.extract(events_.begin());
    index_.erase(node.mapped().seq);
    return std::move(node.mapped());
  }

private:
  using Key = std::tuple<TimeNs, std::size_t, std::uint64_t>;
  std::map<Key, Event> events_;
  std::unordered_map<std::uint64_t, Key> index_;
  std::uint64_t next_seq_{0};
};

namespace tag
{
// Core record tags.
inline constexpr std::string_view kArrive = "ARRIVE";
inline constexpr std::string_view kTake = "TAKE";
inline constexpr std::string_view kSignal = "SIGNAL";
inline constexpr std::string_view kCbStart = "CB_START";
inline constexpr std::string_view kCbEnd = "CB_END";
inline constexpr std::string_view kPublish = "PUBLISH";
inline constexpr std::string_view kExhaust = "EXHAUST";
inline constexpr std::string_view kReplenish = "REPLENISH";
inline constexpr std::string_view kPrioDrop = "PRIO_DROP";
inline constexpr std::string_view kPrioRestore = "PRIO_RESTORE";
inline constexpr std::string_view kLock = "LOCK";
inline constexpr std::string_view kUnlock = "UNLOCK";
inline constexpr std::string_view kSkipBusy = "SKIP_BUSY";
inline constexpr std::string_view kDropMsg = "DROP_MSG";
// CPU state transitions and declarations; these make a trace self-contained
// for post hoc checking.
inline constexpr std::string_view kThread = "THREAD";
inline constexpr std::string_view kTopic = "TOPIC";
inline constexpr std::string_view kReady = "READY";
inline constexpr std::string_view kDispatch = "DISPATCH";
inline constexpr std::string_view kPreempt = "PREEMPT";
inline constexpr std::string_view kBlock = "BLOCK";
inline constexpr std::string_view kEnd = "END";
}  // namespace tag

struct TraceRecord
{
  TimeNs time;
  std::string thread;
  std::string tag;
  std::string detail;

  bool operator==(const TraceRecord &) const = default;
};

/// `<time_ns> <thread_name> <tag> <detail>`; the detail part is omitted when empty.
inline std::string format_record(const TraceRecord & r)
{
  std::string line = std::to_string(r.time.count());
  line += ' ';
  line += r.thread;
  line += ' ';
  line += r.tag;
  if (!r.detail.empty()) {
    line += ' ';
    line += r.detail;
  }
  return line;
}

class Trace
{
public:
  void add(TraceRecord record)
  {
    if (!records_.empty() && record.time < records_.back().time) {
      throw InvalidState("trace record out of order");
    }
    records_.push_back(std::move(record));
  }

  const std::vector<TraceRecord> & records() const {return records_;}
  std::size_t size() const {return records_.size();}
  bool empty() const {return records_.empty();}

  std::size_t count(std::string_view tag) const
  {
    std::size_t n = 0;
    for (const auto & r : records_) {
      n += (r.tag == tag) ? 1 : 0;
    }
    return n;
  }

  void write(std::ostream & os) const
  {
    for (const auto & r : records_) {
      os << format_record(r) << '\n';
    }
  }

  std::string to_text() const
  {
    std::ostringstream os;
    write(os);
    return os.str();
  }

private:
  std::vector<TraceRecord> records_;
};

/// Deterministic discrete-event engine: virtual clock, event queue, trace.
/**
 * Single-threaded by contract. Components register events with schedule();
 * run_until() pops them in (due, kind rank, seq) order and hands each one to
 * the dispatcher installed by the owner of the simulation. An optional
 * observer sees every event after the dispatcher has handled it.
 */
class Kernel
{
public:
  using Dispatcher = std::function<void (const Event &)>;
  using Observer = std::function<void (const Event &)>;

  TimeNs now() const {return now_;}

  void set_dispatcher(Dispatcher d) {dispatcher_ = std::move(d);}
  void set_observer(Observer o) {observer_ = std::move(o);}

  EventHandle schedule(TimeNs due, EventKind kind)
  {
    if (due < now_) {
      throw PastDue(
              "event due at " + std::to_string(due.count()) + " before now " +
              std::to_string(now_.count()));
    }
    return queue_.push(due, std::move(kind));
  }

  EventHandle schedule_after(TimeNs delay, EventKind kind)
  {
    return schedule(now_ + delay, std::move(kind));
  }

  CancelResult cancel(EventHandle handle) {return queue_.cancel(handle);}
  bool pending(EventHandle handle) const {return queue_.contains(handle);}
  std::size_t pending_count() const {return queue_.size();}

  /// Process every event due at or before `end`, then leave the clock at `end`.
  const Trace & run_until(TimeNs end)
  {
    if (end < now_) {
      throw PastDue("run_until target precedes current time");
    }
    // SimulationEnd ranks last, so everything else due at `end` is handled first.
    const auto end_handle = queue_.push(end, event::SimulationEnd{});
    while (!queue_.empty()) {
      Event ev = queue_.pop();
      now_ = ev.due;
      if (dispatcher_) {
        dispatcher_(ev);
      }
      if (observer_) {
        observer_(ev);
      }
      if (ev.seq == end_handle.seq) {
        break;
      }
    }
    now_ = end;
    return trace_;
  }

  void record(std::string_view thread, std::string_view tag, std::string detail = {})
  {
    trace_.add(TraceRecord{now_, std::string(thread), std::string(tag), std::move(detail)});
  }

  const Trace & trace() const {return trace_;}

private:
  TimeNs now_;
  EventQueue queue_;
  Trace trace_;
  Dispatcher dispatcher_;
  Observer observer_;
};

}  // namespace rtexec

#endif  // RTEXEC__SIM_KERNEL_HPP_
