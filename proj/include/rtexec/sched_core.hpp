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

#ifndef RTEXEC__SCHED_CORE_HPP_
#define RTEXEC__SCHED_CORE_HPP_

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rtexec/errors.hpp"
#include "rtexec/sim_kernel.hpp"
#include "rtexec/time.hpp"

namespace rtexec
{

/// Scheduling policy of a simulated thread.
enum class Policy { Fifo, Sporadic };

inline const char * to_string(Policy p)
{
  return p == Policy::Fifo ? "SCHED_FIFO" : "SCHED_SPORADIC";
}

/// Per-thread scheduling parameters.
/**
 * Priorities are plain integers where a larger number is more urgent
 * (an executor at 110 beats a worker at 60, which beats one at 50).
 * The sporadic fields mirror the POSIX `sched_ss_*` members and are ignored
 * for FIFO threads.
 */
struct SchedParams
{
  Policy policy{Policy::Fifo};
  int priority{0};
  int low_priority{0};
  TimeNs init_budget;
  TimeNs repl_period;
  std::uint32_t max_repl{0};

  static SchedParams fifo(int priority)
  {
    SchedParams p;
    p.policy = Policy::Fifo;
    p.priority = priority;
    return p;
  }

  static SchedParams sporadic(
    int priority, int low_priority, TimeNs init_budget, TimeNs repl_period,
    std::uint32_t max_repl)
  {
    SchedParams p;
    p.policy = Policy::Sporadic;
    p.priority = priority;
    p.low_priority = low_priority;
    p.init_budget = init_budget;
    p.repl_period = repl_period;
    p.max_repl = max_repl;
    return p;
  }

  /// Throws InvalidParams naming the first offending field.
  void validate() const
  {
    if (policy != Policy::Sporadic) {
      return;
    }
    if (low_priority >= priority) {
      throw InvalidParams("low_priority", "low_priority must be below priority");
    }
    if (init_budget.is_zero() || init_budget > repl_period) {
      throw InvalidParams("init_budget", "init_budget must be > 0 and <= repl_period");
    }
    if (max_repl < 1) {
      throw InvalidParams("max_repl", "max_repl must be at least 1");
    }
  }

  bool operator==(const SchedParams &) const = default;
};

enum class ThreadState { Ready, Running, Blocked };

/// Future credit of `amount` budget at `due`.
struct ReplenishmentOp
{
  TimeNs amount;
  TimeNs due;
  EventHandle event;
};

struct ThreadStats
{
  TimeNs normal_prio_cpu;  // FIFO threads count all CPU here
  TimeNs low_prio_cpu;
  std::uint64_t exhaustions{0};
  std::uint64_t replenishments{0};
};

struct SimThread
{
  ThreadId id;
  std::string name;
  SchedParams params;
  ThreadState state{ThreadState::Blocked};
  TimeNs ready_since;
  int effective_priority{0};
  bool dropped{false};

  // Sporadic accounting. The activation start is the t_x of the current
  // run slice at normal priority; consumed time is charged lazily.
  TimeNs remaining_budget;
  std::optional<TimeNs> activation_start;
  TimeNs activation_consumed;
  std::deque<ReplenishmentOp> pending_repls;
  std::optional<EventHandle> exhaustion_event;

  // Outstanding CPU burst. Empty means the body runs next time the thread is on CPU.
  std::optional<TimeNs> work_remaining;
  std::optional<EventHandle> completion_event;
  TimeNs slice_start;

  std::function<void()> body;
  ThreadStats stats;

  bool sporadic() const {return params.policy == Policy::Sporadic;}

  TimeNs pending_total() const
  {
    TimeNs sum;
    for (const auto & op : pending_repls) {
      sum += op.amount;
    }
    return sum;
  }
};

/// Single-CPU fixed-priority preemptive scheduler with FIFO and sporadic policies.
/**
 * Threads are driven by a body callback. Whenever a thread is on the CPU with
 * no outstanding burst the scheduler invokes its body, which must either
 * request CPU time with consume() or give up the CPU with block(). Zero-length
 * bursts run the body again at the same instant.
 *
 * Sporadic budget rules:
 *  - an activation starts when the thread is dispatched at normal priority
 *    (or is restored to normal priority while running) and ends when it
 *    blocks, is preempted, or exhausts its budget;
 *  - budget b consumed by an activation starting at t_x is credited back at
 *    t_x + repl_period;
 *  - with max_repl operations already pending, the new amount is merged into
 *    the latest pending operation, whose due time moves to the new due time.
 */
class CpuScheduler
{
public:
  enum class DispatchDecision { NoPreemption, Preempt };

  explicit CpuScheduler(Kernel & kernel)
  : kernel_(kernel) {}

  CpuScheduler(const CpuScheduler &) = delete;
  CpuScheduler & operator=(const CpuScheduler &) = delete;

  ThreadId add_thread(std::string name, SchedParams params, std::function<void()> body)
  {
    params.validate();
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
      throw InvalidParams("name", "thread name must be a non-empty token: '" + name + "'");
    }
    for (const auto & t : threads_) {
      if (t.name == name) {
        throw InvalidParams("name", "duplicate thread name: " + name);
      }
    }
    if (!body) {
      throw InvalidParams("body", "thread body required");
    }
    SimThread t;
    t.id = ThreadId{static_cast<std::uint32_t>(threads_.size())};
    t.name = std::move(name);
    t.params = params;
    t.effective_priority = params.priority;
    t.remaining_budget = t.sporadic() ? params.init_budget : TimeNs::zero();
    t.body = std::move(body);
    threads_.push_back(std::move(t));
    const auto & added = threads_.back();
    kernel_.record(added.name, tag::kThread, describe(added.params));
    return added.id;
  }

  const SimThread & thread(ThreadId id) const {return threads_.at(id.value);}
  const std::vector<SimThread> & threads() const {return threads_;}
  std::optional<ThreadId> running() const {return running_;}

  /// Blocked -> Ready. The returned decision is applied by the next settle().
  DispatchDecision make_ready(ThreadId id)
  {
    auto & t = at(id);
    if (t.state != ThreadState::Blocked) {
      throw InvalidState("make_ready: thread " + t.name + " is not blocked");
    }
    t.state = ThreadState::Ready;
    t.ready_since = kernel_.now();
    kernel_.record(t.name, tag::kReady);
    if (running_ && t.effective_priority > at(*running_).effective_priority) {
      return DispatchDecision::Preempt;
    }
    return DispatchDecision::NoPreemption;
  }

  /// Highest effective priority, then earliest ready instant, then lowest id.
  std::optional<ThreadId> pick_next() const
  {
    const SimThread * best = nullptr;
    for (const auto & t : threads_) {
      if (t.state != ThreadState::Ready) {
        continue;
      }
      if (best == nullptr ||
        t.effective_priority > best->effective_priority ||
        (t.effective_priority == best->effective_priority && t.ready_since < best->ready_since))
      {
        best = &t;
      }
    }
    if (best == nullptr) {
      return std::nullopt;
    }
    return best->id;
  }

  void dispatch(ThreadId id)
  {
    auto & t = at(id);
    if (t.state != ThreadState::Ready || running_) {
      throw InvalidState("dispatch: " + t.name + " not ready or CPU busy");
    }
    const auto now = kernel_.now();
    t.state = ThreadState::Running;
    running_ = id;
    t.slice_start = now;
    kernel_.record(t.name, tag::kDispatch, "prio=" + std::to_string(t.effective_priority));
    if (t.sporadic() && !t.dropped) {
      start_activation(t);
    }
    if (t.work_remaining) {
      if (t.work_remaining->is_zero()) {
        t.work_remaining.reset();
      } else {
        t.completion_event = kernel_.schedule(
          now + *t.work_remaining, event::CallbackCompletion{id});
      }
    }
  }

  /// Account CPU time of the running thread up to `upto`.
  void charge(ThreadId id, TimeNs upto)
  {
    auto & t = at(id);
    if (running_ != id) {
      throw InvalidState("charge: " + t.name + " is not running");
    }
    if (upto < t.slice_start) {
      throw InvalidState("charge: time moved backwards for " + t.name);
    }
    const auto elapsed = upto - t.slice_start;
    t.slice_start = upto;
    if (t.sporadic() && !t.dropped) {
      if (elapsed > t.remaining_budget) {
        throw BudgetUnderflow(
                t.name + " ran " + std::to_string(elapsed.count()) + "ns with " +
                std::to_string(t.remaining_budget.count()) + "ns budget left");
      }
      t.remaining_budget -= elapsed;
      t.activation_consumed += elapsed;
      t.stats.normal_prio_cpu += elapsed;
    } else if (t.sporadic()) {
      t.stats.low_prio_cpu += elapsed;
    } else {
      t.stats.normal_prio_cpu += elapsed;
    }
    if (t.work_remaining) {
      *t.work_remaining -= elapsed;
      if (t.work_remaining->is_zero()) {
        retire_burst(t);
      }
    }
  }

  /// Close the current activation of a thread leaving the CPU.
  void on_block_or_preempt(ThreadId id)
  {
    auto & t = at(id);
    if (!t.sporadic()) {
      return;
    }
    if (!t.dropped && t.remaining_budget.is_zero()) {
      // Budget ran out at this very instant; the exhaustion event is still queued.
      exhaust(t);
      return;
    }
    cancel_exhaustion(t);
    end_activation(t);
  }

  void on_budget_exhausted(ThreadId id)
  {
    auto & t = at(id);
    t.exhaustion_event.reset();
    charge(id, kernel_.now());
    if (!t.remaining_budget.is_zero()) {
      throw InvalidState("exhaustion fired with budget left for " + t.name);
    }
    exhaust(t);
  }

  void on_replenishment(ThreadId id, TimeNs amount)
  {
    auto & t = at(id);
    const auto now = kernel_.now();
    if (t.pending_repls.empty() || t.pending_repls.front().due != now ||
      t.pending_repls.front().amount != amount)
    {
      throw InvalidState("replenishment out of order for " + t.name);
    }
    const auto op = t.pending_repls.front();
    t.pending_repls.pop_front();
    const bool on_cpu = running_ == id;
    if (on_cpu) {
      charge(id, now);
    }
    t.remaining_budget += op.amount;
    ++t.stats.replenishments;
    kernel_.record(
      t.name, tag::kReplenish,
      "amount=" + std::to_string(op.amount.count()) +
      " budget=" + std::to_string(t.remaining_budget.count()));
    if (t.dropped) {
      t.dropped = false;
      t.effective_priority = t.params.priority;
      kernel_.record(t.name, tag::kPrioRestore, "prio=" + std::to_string(t.effective_priority));
      if (on_cpu) {
        start_activation(t);
      }
    } else if (on_cpu) {
      cancel_exhaustion(t);
      schedule_exhaustion(t);
    }
  }

  /// Request `amount` of CPU for the running thread. Only valid from its body.
  void consume(ThreadId id, TimeNs amount)
  {
    auto & t = at(id);
    if (running_ != id || t.work_remaining) {
      throw InvalidState("consume: " + t.name + " is not running idle");
    }
    acted_ = true;
    if (amount.is_zero()) {
      return;
    }
    t.work_remaining = amount;
    t.completion_event = kernel_.schedule(
      kernel_.now() + amount, event::CallbackCompletion{id});
  }

  /// Running -> Blocked. Only valid from the thread's own body.
  void block(ThreadId id)
  {
    auto & t = at(id);
    if (running_ != id) {
      throw InvalidState("block: " + t.name + " is not running");
    }
    charge(id, kernel_.now());
    if (t.work_remaining) {
      throw InvalidState("block: " + t.name + " has an unfinished burst");
    }
    on_block_or_preempt(id);
    t.state = ThreadState::Blocked;
    running_.reset();
    acted_ = true;
    kernel_.record(t.name, tag::kBlock);
  }

  /// Handle scheduler-owned events; returns false for other kinds.
  bool handle(const Event & ev)
  {
    if (const auto * r = std::get_if<event::Replenishment>(&ev.kind)) {
      on_replenishment(r->thread, r->amount);
      return true;
    }
    if (const auto * e = std::get_if<event::BudgetExhaustion>(&ev.kind)) {
      on_budget_exhausted(e->thread);
      return true;
    }
    if (const auto * c = std::get_if<event::CallbackCompletion>(&ev.kind)) {
      auto & t = at(c->thread);
      t.completion_event.reset();
      charge(c->thread, kernel_.now());
      if (t.work_remaining) {
        throw InvalidState("burst completion with work left for " + t.name);
      }
      return true;
    }
    return false;
  }

  /// Run bodies, preempt and dispatch until the CPU state is stable at now().
  void settle()
  {
    if (settling_) {
      return;
    }
    settling_ = true;
    struct Reset
    {
      bool & flag;
      ~Reset() {flag = false;}
    } reset{settling_};

    for (std::size_t steps = 0;; ++steps) {
      if (steps > kMaxStepsPerInstant) {
        throw InvalidState("scheduler livelock at " + std::to_string(kernel_.now().count()));
      }
      if (running_) {
        auto & r = at(*running_);
        if (!r.work_remaining) {
          acted_ = false;
          r.body();
          if (!acted_) {
            throw InvalidState("body of " + r.name + " neither consumed CPU nor blocked");
          }
          continue;
        }
        const auto next = pick_next();
        if (next && at(*next).effective_priority > r.effective_priority) {
          preempt(*running_, *next);
          continue;
        }
        break;
      }
      const auto next = pick_next();
      if (!next) {
        break;
      }
      dispatch(*next);
    }
  }

  /// Bring CPU accounting of the running thread up to now() without a state change.
  void sync()
  {
    if (running_) {
      charge(*running_, kernel_.now());
    }
  }

  /// First violated scheduler invariant, if any. Cheap enough to call after every event.
  std::optional<std::string> check_invariants() const
  {
    for (const auto & t : threads_) {
      if (!t.sporadic()) {
        if (t.effective_priority != t.params.priority) {
          return t.name + ": FIFO effective priority changed";
        }
        continue;
      }
      if (t.remaining_budget + t.pending_total() + t.activation_consumed != t.params.init_budget) {
        return t.name + ": budget not conserved";
      }
      if (t.pending_repls.size() > t.params.max_repl) {
        return t.name + ": more than max_repl pending replenishments";
      }
      const bool low = t.effective_priority == t.params.low_priority;
      if (low != t.remaining_budget.is_zero() || low != t.dropped) {
        return t.name + ": effective priority inconsistent with budget";
      }
    }
    if (running_) {
      for (const auto & t : threads_) {
        if (t.state == ThreadState::Ready &&
          t.effective_priority > at(*running_).effective_priority)
        {
          return t.name + " is ready above the running thread";
        }
      }
    }
    return std::nullopt;
  }

  static std::string describe(const SchedParams & p)
  {
    std::string s = "policy=" + std::string(to_string(p.policy)) +
      " priority=" + std::to_string(p.priority);
    if (p.policy == Policy::Sporadic) {
      s += " low_priority=" + std::to_string(p.low_priority) +
        " init_budget_ns=" + std::to_string(p.init_budget.count()) +
        " repl_period_ns=" + std::to_string(p.repl_period.count()) +
        " max_repl=" + std::to_string(p.max_repl);
    }
    return s;
  }

private:
  static constexpr std::size_t kMaxStepsPerInstant = 1'000'000;

  SimThread & at(ThreadId id) {return threads_.at(id.value);}
  const SimThread & at(ThreadId id) const {return threads_.at(id.value);}

  void preempt(ThreadId id, ThreadId by)
  {
    auto & t = at(id);
    charge(id, kernel_.now());
    if (t.completion_event) {
      kernel_.cancel(*t.completion_event);
      t.completion_event.reset();
    }
    on_block_or_preempt(id);
    t.state = ThreadState::Ready;  // ready_since is preserved
    running_.reset();
    kernel_.record(t.name, tag::kPreempt, "by=" + at(by).name);
  }

  void retire_burst(SimThread & t)
  {
    t.work_remaining.reset();
    if (t.completion_event) {
      kernel_.cancel(*t.completion_event);
      t.completion_event.reset();
    }
  }

  void start_activation(SimThread & t)
  {
    t.activation_start = kernel_.now();
    t.activation_consumed = TimeNs::zero();
    schedule_exhaustion(t);
  }

  void schedule_exhaustion(SimThread & t)
  {
    t.exhaustion_event = kernel_.schedule(
      kernel_.now() + t.remaining_budget, event::BudgetExhaustion{t.id});
  }

  void cancel_exhaustion(SimThread & t)
  {
    if (t.exhaustion_event) {
      kernel_.cancel(*t.exhaustion_event);
      t.exhaustion_event.reset();
    }
  }

  void exhaust(SimThread & t)
  {
    cancel_exhaustion(t);
    end_activation(t);
    t.dropped = true;
    t.effective_priority = t.params.low_priority;
    ++t.stats.exhaustions;
    kernel_.record(t.name, tag::kExhaust);
    kernel_.record(t.name, tag::kPrioDrop, "prio=" + std::to_string(t.effective_priority));
  }

  void end_activation(SimThread & t)
  {
    if (!t.activation_start) {
      return;
    }
    const auto consumed = t.activation_consumed;
    const auto due = *t.activation_start + t.params.repl_period;
    t.activation_start.reset();
    t.activation_consumed = TimeNs::zero();
    if (consumed.is_zero()) {
      return;
    }
    // due == now is possible when budget == period and the slice ran the full
    // period; the credit then lands at this same instant.
    if (t.pending_repls.size() >= t.params.max_repl) {
      auto & last = t.pending_repls.back();
      kernel_.cancel(last.event);
      last.amount += consumed;
      last.due = due;
      last.event = kernel_.schedule(due, event::Replenishment{t.id, last.amount});
      return;
    }
    ReplenishmentOp op{consumed, due, {}};
    op.event = kernel_.schedule(due, event::Replenishment{t.id, consumed});
    t.pending_repls.push_back(op);
  }

  Kernel & kernel_;
  std::vector<SimThread> threads_;
  std::optional<ThreadId> running_;
  bool settling_{false};
  bool acted_{false};
};

}  // namespace rtexec

#endif  // RTEXEC__SCHED_CORE_HPP_
