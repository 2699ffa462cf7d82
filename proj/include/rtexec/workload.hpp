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

#ifndef RTEXEC__WORKLOAD_HPP_
#define RTEXEC__WORKLOAD_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rtexec/errors.hpp"
#include "rtexec/executor.hpp"
#include "rtexec/sched_core.hpp"
#include "rtexec/sim_kernel.hpp"
#include "rtexec/time.hpp"

namespace rtexec
{

/// Ideal external ping node: publishes every `period` (first at t = period)
/// and counts replies arriving on `reply_topic`. Costs no simulated CPU.
struct PingSpec
{
  std::string name;
  std::string send_topic;
  std::string reply_topic;
  TimeNs period;
  TimeNs jitter;  // each send is delayed by a seeded draw from [0, jitter]

  bool operator==(const PingSpec &) const = default;
};

struct SubscriptionSpec
{
  std::string topic;
  CallbackSpec callback;
  SchedParams sched;

  bool operator==(const SubscriptionSpec &) const = default;
};

/// Declarative experiment description.
struct Scenario
{
  TimeNs duration{TimeNs::from_s(10)};
  int executor_priority{110};
  TimeNs wait_timeout{TimeNs::from_ms(100)};
  std::size_t queue_depth{16};
  MiddlewareCosts middleware_costs;
  std::vector<PingSpec> pings;
  std::vector<SubscriptionSpec> subscriptions;
  std::uint64_t seed{0};

  bool operator==(const Scenario &) const = default;

  /// Throws InvalidParams with a dotted field path, e.g. `subscription.hprt.init_budget`.
  void validate() const
  {
    if (duration.is_zero()) {
      throw InvalidParams("scenario.duration", "duration must be positive");
    }
    if (wait_timeout.is_zero()) {
      throw InvalidParams("executor.wait_timeout", "wait timeout must be positive");
    }
    if (queue_depth == 0) {
      throw InvalidParams("executor.queue_depth", "queue depth must be positive");
    }
    std::vector<std::string> topics;
    for (const auto & s : subscriptions) {
      const auto where = "subscription." + s.topic;
      if (!valid_topic_name(s.topic)) {
        throw InvalidParams(where, "invalid topic name");
      }
      for (const auto & t : topics) {
        if (t == s.topic) {
          throw InvalidParams(where, "duplicate subscription topic");
        }
      }
      topics.push_back(s.topic);
      if (s.callback.publishes && !valid_topic_name(*s.callback.publishes)) {
        throw InvalidParams(where + ".publishes", "invalid topic name");
      }
      try {
        s.sched.validate();
      } catch (const InvalidParams & e) {
        throw InvalidParams(where + "." + e.field(), e.what());
      }
    }
    for (const auto & p : pings) {
      const auto where = "ping." + p.name;
      if (!valid_topic_name(p.name)) {
        throw InvalidParams(where, "invalid ping name");
      }
      if (p.period.is_zero()) {
        throw InvalidParams(where + ".period", "period must be positive");
      }
      if (p.jitter >= p.period) {
        throw InvalidParams(where + ".jitter", "jitter must be below the period");
      }
      bool subscribed = false;
      for (const auto & t : topics) {
        subscribed = subscribed || t == p.send_topic;
      }
      if (!subscribed) {
        throw InvalidParams(where + ".send_topic", "no subscription for '" + p.send_topic + "'");
      }
      if (!valid_topic_name(p.reply_topic)) {
        throw InvalidParams(where + ".reply_topic", "invalid topic name");
      }
    }
  }
};

struct TopicMetrics
{
  std::string topic;
  std::uint64_t sent{0};
  std::uint64_t received{0};
  std::uint64_t dropped{0};
  std::uint64_t skipped_busy{0};
  TimeNs mean_latency;
  TimeNs max_latency;
  TimeNs normal_prio_cpu;
  TimeNs low_prio_cpu;
  std::uint64_t exhaustions{0};
  std::uint64_t replenishments{0};
  // Not part of the CSV; used for message conservation.
  std::uint64_t arrived{0};
  std::uint64_t taken{0};
  std::uint64_t queued{0};

  bool operator==(const TopicMetrics &) const = default;
};

struct ThreadMetrics
{
  std::string name;
  TimeNs normal_prio_cpu;
  TimeNs low_prio_cpu;
  std::uint64_t exhaustions{0};
  std::uint64_t replenishments{0};

  bool operator==(const ThreadMetrics &) const = default;
};

/// Per ping stream (one row each) plus per-thread CPU accounting.
struct Metrics
{
  std::vector<TopicMetrics> topics;
  std::vector<ThreadMetrics> threads;

  bool operator==(const Metrics &) const = default;

  const TopicMetrics & topic(const std::string & name) const
  {
    for (const auto & t : topics) {
      if (t.topic == name) {
        return t;
      }
    }
    throw InvalidParams("topic", "no metrics for " + name);
  }

  TimeNs total_cpu() const
  {
    TimeNs sum;
    for (const auto & t : threads) {
      sum += t.normal_prio_cpu + t.low_prio_cpu;
    }
    return sum;
  }
};

/// A scenario wired up on a kernel, scheduler and executor.
class Simulation
{
public:
  explicit Simulation(Scenario scenario)
  : scenario_(validated(std::move(scenario))), cpu_(kernel_),
    executor_(kernel_, cpu_, executor_config(scenario_))
  {
    for (const auto & s : scenario_.subscriptions) {
      executor_.add_subscription_sched(s.topic, s.callback, s.sched);
    }
    for (std::size_t i = 0; i < scenario_.pings.size(); ++i) {
      reply_route_.emplace(scenario_.pings[i].reply_topic, i);
    }
    pings_.resize(scenario_.pings.size());
    executor_.set_remote_sink([this](const Message & m) {return deliver_reply(m);});
    kernel_.set_dispatcher([this](const Event & ev) {dispatch(ev);});
    executor_.start();
    schedule_pings();
    cpu_.settle();
  }

  Simulation(const Simulation &) = delete;
  Simulation & operator=(const Simulation &) = delete;

  const Trace & run() {return kernel_.run_until(scenario_.duration);}

  /// Called after every event; use for invariant checks.
  void set_observer(Kernel::Observer observer) {kernel_.set_observer(std::move(observer));}

  Metrics metrics() const
  {
    Metrics m;
    for (std::size_t i = 0; i < scenario_.pings.size(); ++i) {
      const auto & spec = scenario_.pings[i];
      const auto & state = pings_[i];
      TopicMetrics t;
      t.topic = spec.send_topic;
      t.sent = state.sent;
      t.received = state.received;
      t.max_latency = state.max_latency;
      if (state.received > 0) {
        t.mean_latency = TimeNs(
          static_cast<std::int64_t>(state.latency_sum / static_cast<unsigned __int128>(state.received)));
      }
      const auto & sub = executor_.subscription(spec.send_topic);
      const auto & counters = executor_.queue().counters(spec.send_topic);
      t.dropped = counters.dropped;
      t.arrived = counters.arrived;
      t.taken = counters.taken;
      t.queued = executor_.queue().size(spec.send_topic);
      t.skipped_busy = sub.skipped_busy;
      const auto & stats = cpu_.thread(sub.worker).stats;
      t.normal_prio_cpu = stats.normal_prio_cpu;
      t.low_prio_cpu = stats.low_prio_cpu;
      t.exhaustions = stats.exhaustions;
      t.replenishments = stats.replenishments;
      m.topics.push_back(std::move(t));
    }
    for (const auto & th : cpu_.threads()) {
      m.threads.push_back(
        ThreadMetrics{th.name, th.stats.normal_prio_cpu, th.stats.low_prio_cpu,
          th.stats.exhaustions, th.stats.replenishments});
    }
    return m;
  }

  const Scenario & scenario() const {return scenario_;}
  /// Round-trip latencies of every reply received by ping `index`, in arrival order.
  const std::vector<TimeNs> & received_latencies(std::size_t index) const
  {
    return pings_.at(index).latencies;
  }
  const Kernel & kernel() const {return kernel_;}
  const CpuScheduler & cpu() const {return cpu_;}
  const Executor & executor() const {return executor_;}

private:
  struct PingState
  {
    std::uint64_t sent{0};
    std::uint64_t received{0};
    unsigned __int128 latency_sum{0};
    TimeNs max_latency;
    std::vector<TimeNs> latencies;
  };

  static Scenario validated(Scenario s)
  {
    s.validate();
    return s;
  }

  static ExecutorConfig executor_config(const Scenario & s)
  {
    ExecutorConfig c;
    c.priority = s.executor_priority;
    c.wait_timeout = s.wait_timeout;
    c.queue_depth = s.queue_depth;
    c.costs = s.middleware_costs;
    return c;
  }

  void schedule_pings()
  {
    std::mt19937_64 rng(scenario_.seed);
    for (std::size_t i = 0; i < scenario_.pings.size(); ++i) {
      const auto & p = scenario_.pings[i];
      for (std::uint64_t k = 1;; ++k) {
        auto due = p.period * static_cast<std::int64_t>(k);
        if (!p.jitter.is_zero()) {
          const auto span = static_cast<std::uint64_t>(p.jitter.count()) + 1;
          due += TimeNs(static_cast<std::int64_t>(rng() % span));
        }
        if (due > scenario_.duration) {
          break;
        }
        Message m{p.send_topic, k, due, due};
        kernel_.schedule(due, event::MessageArrival{std::move(m)});
        ++pings_[i].sent;
      }
    }
  }

  bool deliver_reply(const Message & m)
  {
    auto it = reply_route_.find(m.topic);
    if (it == reply_route_.end()) {
      return false;
    }
    auto & state = pings_[it->second];
    const auto latency = kernel_.now() - m.origin_time;
    ++state.received;
    state.latency_sum += static_cast<unsigned __int128>(latency.count());
    state.max_latency = std::max(state.max_latency, latency);
    state.latencies.push_back(latency);
    return true;
  }

  void dispatch(const Event & ev)
  {
    if (std::holds_alternative<event::SimulationEnd>(ev.kind)) {
      cpu_.settle();
      cpu_.sync();
      kernel_.record("-", tag::kEnd);
      return;
    }
    if (!cpu_.handle(ev)) {
      executor_.handle(ev);
    }
    cpu_.settle();
  }

  Scenario scenario_;
  Kernel kernel_;
  CpuScheduler cpu_;
  Executor executor_;
  std::vector<PingState> pings_;
  std::map<std::string, std::size_t> reply_route_;
};

struct RunResult
{
  Metrics metrics;
  Trace trace;
};

inline RunResult run_scenario(const Scenario & scenario)
{
  Simulation sim(scenario);
  sim.run();
  return RunResult{sim.metrics(), sim.kernel().trace()};
}

// Built-in experiments: HPRT and LPBE ping streams at 10 ms each, answered by
// pong callbacks on the simulated MCU, executor at priority 110, 10 s run.

namespace detail
{
inline Scenario ping_pong_base(SchedParams hprt_sched, CallbackSpec lpbe_callback)
{
  Scenario s;
  s.duration = TimeNs::from_s(10);
  s.executor_priority = 110;
  s.pings = {
    PingSpec{"hprt", "hprt", "hprt_pong", TimeNs::from_ms(10), TimeNs::zero()},
    PingSpec{"lpbe", "lpbe", "lpbe_pong", TimeNs::from_ms(10), TimeNs::zero()},
  };
  s.subscriptions = {
    SubscriptionSpec{"hprt", CallbackSpec{TimeNs::from_ms(10), TimeNs::zero(), "hprt_pong"},
      hprt_sched},
    SubscriptionSpec{"lpbe", std::move(lpbe_callback), SchedParams::fifo(50)},
  };
  return s;
}

inline const TimeNs kReplPeriod = TimeNs::from_ms(100);
}  // namespace detail

/// HPRT sporadic (60/10, budget = fraction x 100 ms, max_repl 100), LPBE FIFO(50).
inline Scenario build_case1(const Ratio & budget_fraction)
{
  if (budget_fraction <= Ratio(0, 1) || budget_fraction > Ratio(1, 1)) {
    throw InvalidParams("budget_fraction", "budget fraction must be in (0, 1]");
  }
  const auto budget = budget_fraction.scale(detail::kReplPeriod);
  if (budget.is_zero()) {
    throw InvalidParams("budget_fraction", "budget fraction rounds to a zero budget");
  }
  return detail::ping_pong_base(
    SchedParams::sporadic(60, 10, budget, detail::kReplPeriod, 100),
    CallbackSpec{TimeNs::from_ms(10), TimeNs::zero(), "lpbe_pong"});
}

/// Both workers FIFO: HPRT at 60, LPBE at 50.
inline Scenario build_case2()
{
  return detail::ping_pong_base(
    SchedParams::fifo(60),
    CallbackSpec{TimeNs::from_ms(10), TimeNs::zero(), "lpbe_pong"});
}

/// HPRT sporadic with a 30% budget; LPBE callbacks sleep `sleep_fraction` of their 10 ms.
inline Scenario build_workconserving(const Ratio & sleep_fraction)
{
  if (sleep_fraction > Ratio(1, 1)) {
    throw InvalidParams("sleep_fraction", "sleep fraction must be in [0, 1]");
  }
  const auto period = TimeNs::from_ms(10);
  const auto sleep = sleep_fraction.scale(period);
  return detail::ping_pong_base(
    SchedParams::sporadic(60, 10, TimeNs::from_ms(30), detail::kReplPeriod, 100),
    CallbackSpec{period - sleep, sleep, "lpbe_pong"});
}

}  // namespace rtexec

#endif  // RTEXEC__WORKLOAD_HPP_
